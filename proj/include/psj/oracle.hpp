#pragma once

// Probabilistic classifier handles. Every handle answers in the +-1
// convention (+1 = attacked class c) and counts the queries it issues.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "psj/rng.hpp"
#include "psj/sigmoid_math.hpp"
#include "psj/types.hpp"

namespace psj {

class Oracle {
 public:
  explicit Oracle(int dim);
  virtual ~Oracle() = default;
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  int dim() const noexcept { return dim_; }

  /// One randomized label. Thread-safe; the counter grows by unit_cost().
  Label query(std::span<const double> x);
  /// Queries issued in order, so a fixed seed reproduces the label stream.
  std::vector<Label> query_batch(std::span<const PointVec> xs);

  virtual bool has_probe() const { return false; }
  /// Exact probability of class c at x. Never touches the query counter.
  double probe(std::span<const double> x) const;

  std::uint64_t query_count() const noexcept { return count_.load(); }
  /// Base-model calls charged for one query on this handle.
  virtual std::uint64_t unit_cost() const { return 1; }

 protected:
  virtual Label do_query(std::span<const double> x) = 0;
  virtual double do_probe(std::span<const double> x) const;
  void check_dim(std::span<const double> x) const;

 private:
  int dim_;
  std::atomic<std::uint64_t> count_{0};
  std::mutex mu_;
};

using OraclePtr = std::shared_ptr<Oracle>;

struct PlanarSigmoidSpec {
  PointVec normal;    // unit boundary normal g, pointing toward class c
  PointVec on_plane;  // any point on the p = 1/2 plane
  double s = kInf;
  double eps = 0.0;
};

/// p(x) = eps + (1-2eps) sigma(s <x - z, g>), the planar sigmoid.
class PlanarSigmoidOracle final : public Oracle {
 public:
  PlanarSigmoidOracle(PlanarSigmoidSpec spec, std::uint64_t seed);
  bool has_probe() const override { return true; }
  const PlanarSigmoidSpec& spec() const noexcept { return spec_; }
  /// Signed distance <x - z, g>.
  double offset(std::span<const double> x) const;

 protected:
  Label do_query(std::span<const double> x) override;
  double do_probe(std::span<const double> x) const override;

 private:
  PlanarSigmoidSpec spec_;
  Engine eng_;
};

struct LinearLogitSpec {
  int classes = 2;
  int dim = 1;
  std::vector<double> weights;  // classes x dim, row-major
  std::vector<double> biases;   // classes
  double temperature = 0.0;     // 0 = deterministic argmax
  int target_class = 0;
};

/// Multiclass linear model; T > 0 samples a class from softmax(logits / T).
class LinearLogitOracle final : public Oracle {
 public:
  LinearLogitOracle(LinearLogitSpec spec, std::uint64_t seed);
  bool has_probe() const override { return true; }
  const LinearLogitSpec& spec() const noexcept { return spec_; }
  std::vector<double> logits(std::span<const double> x) const;
  /// P(class c) for given logits under this oracle's temperature.
  double target_prob_from_logits(std::span<const double> logits) const;
  int argmax_class(std::span<const double> x) const;

 protected:
  Label do_query(std::span<const double> x) override;
  double do_probe(std::span<const double> x) const override;

 private:
  LinearLogitSpec spec_;
  Engine eng_;
};

/// Swaps the base label with probability nu for one of the other K-1 classes
/// chosen uniformly. In the +-1 reduction: +1 -> -1 w.p. nu, -1 -> +1 w.p.
/// nu/(K-1).
class FlipNoiseOracle final : public Oracle {
 public:
  FlipNoiseOracle(OraclePtr base, double nu, int classes, std::uint64_t seed);
  bool has_probe() const override { return base_->has_probe(); }
  std::uint64_t unit_cost() const override { return base_->unit_cost(); }

 protected:
  Label do_query(std::span<const double> x) override;
  double do_probe(std::span<const double> x) const override;

 private:
  OraclePtr base_;
  double nu_;
  int classes_;
  Engine eng_;
};

/// Adds fresh isotropic Gaussian noise N(0, sigma^2 I) to every input.
/// The probe averages the base probe over a fixed bank of noise draws
/// (common random numbers), so it is a deterministic function of x.
class InputNoiseOracle final : public Oracle {
 public:
  InputNoiseOracle(OraclePtr base, double sigma, std::uint64_t seed, int probe_draws = 4096);
  bool has_probe() const override { return base_->has_probe(); }
  std::uint64_t unit_cost() const override { return base_->unit_cost(); }

 protected:
  Label do_query(std::span<const double> x) override;
  double do_probe(std::span<const double> x) const override;

 private:
  OraclePtr base_;
  double sigma_;
  Engine eng_;
  // Exactly one of these banks is populated, depending on the base type.
  std::vector<double> logit_bank_;    // draws x classes, noise pushed through W
  std::vector<double> offset_bank_;   // draws, noise projected on the plane normal
  std::vector<double> generic_bank_;  // draws x dim
  int draws_ = 0;
};

/// Majority vote over r repeated base queries (r odd).
class RepeatMajorityOracle final : public Oracle {
 public:
  RepeatMajorityOracle(OraclePtr base, int repeats);
  bool has_probe() const override { return base_->has_probe(); }
  std::uint64_t unit_cost() const override { return base_->unit_cost() * repeats_; }
  int repeats() const noexcept { return repeats_; }

 protected:
  Label do_query(std::span<const double> x) override;
  double do_probe(std::span<const double> x) const override;

 private:
  OraclePtr base_;
  int repeats_;
};

OraclePtr wrap_flip(OraclePtr base, double nu, int classes, std::uint64_t seed);
OraclePtr wrap_input_noise(OraclePtr base, double sigma, std::uint64_t seed);
OraclePtr wrap_repeat_majority(OraclePtr base, int repeats);

/// P(majority of r i.i.d. draws is +1) for per-draw probability p.
double majority_prob(double p, int repeats);

}  // namespace psj
