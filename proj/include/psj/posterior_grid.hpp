#pragma once

// Discretized joint posterior over the line-sigmoid parameters (z, s, eps).
// Mass is stored in the log domain and renormalized after every update.

#include <cstdint>
#include <span>
#include <vector>

#include "psj/sigmoid_math.hpp"
#include "psj/types.hpp"

namespace psj {

struct GridSpec {
  double z_min = 0.0;
  double z_max = 1.0;
  int n_z = 101;
  double log10_s_min = 1.0;
  double log10_s_max = 3.0;
  int n_s = 31;
  std::vector<double> eps_values{0.0, 0.1};
  int n_x = 101;

  /// Throws InvalidInput ("invalid grid spec: ...").
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

/// Concrete axis values. Built from a GridSpec, or given explicitly (tests
/// use explicit axes to place mass at s = inf).
struct GridAxes {
  std::vector<double> z;
  std::vector<double> s;
  std::vector<double> eps;
  std::vector<double> x;

  static GridAxes from_spec(const GridSpec& spec);
  void validate() const;
};

class LikelihoodTable;

class ParamGrid {
 public:
  /// Uniform prior over the given axes.
  explicit ParamGrid(GridAxes axes);

  const GridAxes& axes() const noexcept { return axes_; }
  std::size_t cell_count() const noexcept { return log_mass_.size(); }
  std::size_t index(std::size_t iz, std::size_t is, std::size_t ie) const noexcept {
    return (iz * axes_.s.size() + is) * axes_.eps.size() + ie;
  }
  double cell_z(std::size_t c) const noexcept { return cz_[c]; }
  double cell_s(std::size_t c) const noexcept { return cs_[c]; }
  double cell_eps(std::size_t c) const noexcept { return ce_[c]; }

  std::span<const double> log_mass() const noexcept { return log_mass_; }
  /// exp(log mass); sums to 1.
  std::vector<double> masses() const;
  std::vector<double> z_marginal() const;

  /// Multiplies each cell by p(label | cell, x) and renormalizes.
  /// Throws DegeneratePosterior if every cell is excluded.
  void observe(double x, Label label);
  /// Same as observe(axes().x[candidate], label) but reads the likelihood
  /// from a precomputed table built on these axes.
  void observe_candidate(const LikelihoodTable& table, std::size_t candidate, Label label);
  /// Replaces the mass (log domain) and renormalizes. For tests and restarts.
  void set_log_mass(std::vector<double> log_mass);

 private:
  void renormalize(const char* context);

  GridAxes axes_;
  std::vector<double> cz_, cs_, ce_;
  std::vector<double> log_mass_;
};

ParamGrid init_uniform(const GridSpec& spec);
/// Value-semantics update; see ParamGrid::observe.
ParamGrid update(ParamGrid grid, double x, Label label);

/// Linear posterior means of z and eps; s is the geometric mean
/// 10^E[log10 s] (the s axis is log-spaced).
SigmoidParams mean_params(const ParamGrid& grid);

/// I(f(x); z, s, eps) in bits.
double mutual_information(const ParamGrid& grid, double x);

double binary_entropy_bits(double p);

enum class QuerySizeMode {
  kPosterior,  // expectation over every cell's (z, s, eps)
  kZMarginal,  // expectation over z only, at the point estimates of s and eps
};

struct QuerySizeConfig {
  int dim = 2;
  double beta = 0.01;        // per-coordinate gradient radius, line units
  double target_cos = 0.5;
  double n_max = 1.0e6;      // cap for cells whose alpha underflows
  QuerySizeMode mode = QuerySizeMode::kPosterior;
};

/// Sample size for one (delta, s, eps) cell, capped at n_max.
double capped_sample_size(double delta, double s, double eps, const QuerySizeConfig& cfg);

/// E_posterior[sample_size(C, d, alpha(z - z_hat, s, beta, eps))].
double expected_query_size(const ParamGrid& grid, double z_hat, const QuerySizeConfig& cfg);

/// Expected value, over the label at x, of expected_query_size of the
/// updated posterior (each branch re-centred on its own posterior mean).
/// Lower is better.
double expected_improvement_score(const ParamGrid& grid, double x, const QuerySizeConfig& cfg);

/// New spec whose z interval and log10 s interval are 1/k of the originals,
/// centred on the given estimates and shifted to stay inside the originals.
GridSpec shrink_spec(const GridSpec& spec, const SigmoidParams& center, double k);

// ---------------------------------------------------------------------------
// Acquisition kernels. The MI sweep over all candidates is the hot loop of
// noisy binary search; it has an OpenMP version and a serial reference.

/// Label probabilities, their logs and Bernoulli entropies for every
/// (cell, candidate), stored cell-major so one cell's row spans all candidates.
class LikelihoodTable {
 public:
  explicit LikelihoodTable(const GridAxes& axes);
  std::size_t candidates() const noexcept { return n_x_; }
  std::size_t cells() const noexcept { return cells_; }
  const double* prob_row(std::size_t cell) const noexcept { return prob_.data() + cell * n_x_; }
  const double* entropy_row(std::size_t cell) const noexcept { return ent_.data() + cell * n_x_; }
  /// log p(label | cell, x_k).
  double log_lik(std::size_t cell, std::size_t k, Label label) const noexcept {
    return label == Label::kTarget ? logp_[cell * n_x_ + k] : logq_[cell * n_x_ + k];
  }

 private:
  std::size_t n_x_;
  std::size_t cells_;
  std::vector<double> prob_;
  std::vector<double> ent_;
  std::vector<double> logp_;
  std::vector<double> logq_;
};

struct SweepStats {
  std::uint64_t cell_visits = 0;
};

/// Cells whose mass is at least prune_rel times the largest mass.
/// prune_rel = 0 keeps every cell with nonzero mass.
std::vector<std::size_t> active_cells(std::span<const double> weights, double prune_rel);

void mi_sweep_serial(const LikelihoodTable& table, std::span<const double> weights,
                     std::span<const std::size_t> active, std::span<double> scores,
                     SweepStats* stats = nullptr);
void mi_sweep(const LikelihoodTable& table, std::span<const double> weights,
              std::span<const std::size_t> active, std::span<double> scores,
              SweepStats* stats = nullptr);

}  // namespace psj
