#pragma once

// Attack loops: PopSkipJump, the deterministic HopSkipJump baseline, HSJ over
// majority-voted repeated queries, and PSJ with the probe's true gradient.
//
// On the search line u = 0 is the current adversarial point and u = 1 the
// attacked input x_star.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psj/gradient_estimate.hpp"
#include "psj/noisy_binsearch.hpp"
#include "psj/oracle.hpp"
#include "psj/posterior_grid.hpp"

namespace psj {

enum class Variant { kPsj, kHsj, kHsjRepeat, kPsjTrueGrad };

std::string to_string(Variant v);
/// Accepts psj, hsj, hsj-r, psj-truegrad. Throws ConfigError.
Variant parse_variant(const std::string& name);

struct AttackConfig {
  Variant variant = Variant::kPsj;
  int iterations = 32;
  double n0_det = 100.0;       // HSJ base gradient sample count
  double r_mult = 1.0;         // gradient query multiplier
  double enlarge = 1.5;        // PSJ interval enlargement
  double radius_divisor = 100; // PSJ per-coordinate radius |x~ - x*| / radius_divisor
  double theta_det = 0.01;     // displacement used for the deterministic target cosine
  double cdet_beta_scale = 1.0;  // its radius is cdet_beta_scale * sqrt(d) / radius_divisor
  std::int64_t n_floor = 3;
  int grad_batch = 256;
  int gp_max_halvings = 20;    // HSJ geometric progression cap
  int hsj_repeats = 3;         // r for hsj-r
  bool hsj_enlarged_radius = false;  // HSJ samples on PSJ's sphere radius
  bool shrink_priors = false;  // progressively tighter priors between iterations
  double fd_rel_step = 1e-4;   // PSJ-TrueGrad finite-difference step, relative to |x~ - x*|
  double border_u_limit = 1e6; // evaluation: how far past x the border search may look
  GridSpec grid;
  BinSearchConfig bin;         // size.dim / size.beta / target_cos are set per iteration

  /// Throws InvalidInput.
  void validate() const;
};

struct PhaseQueries {
  std::int64_t bin_search = 0;
  std::int64_t gradient = 0;
  std::int64_t step = 0;  // HSJ geometric progression
  std::int64_t total() const noexcept { return bin_search + gradient + step; }
};

struct PhaseTimes {
  double bin_search = 0.0;  // seconds
  double gradient = 0.0;
  double step = 0.0;
};

struct IterationRecord {
  int t = 0;
  PointVec point;  // x_t, the boundary estimate of iteration t
  PointVec segment_start;  // adversarial end of the search segment (x_star is the other)
  SigmoidParams estimates{};
  double c_det = 0.0;
  std::int64_t n_t = 0;
  PhaseQueries queries;
  PhaseTimes wall;
  std::int64_t queries_cum = 0;
  std::optional<double> border_distance;
  bool crossing_found = false;
  double raw_distance = 0.0;      // |x_t - x_star| / sqrt(d)
  std::string bin_stop;           // economics | cap | bisection
  double z_mass_near = 1.0;       // posterior z mass within 2 bins of z_hat
  bool n_capped = false;          // n_t hit n_max
  bool gp_capped = false;         // HSJ kept x_t after the halving cap
};

struct AttackTrace {
  AttackConfig config;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
  PointVec final_point;
  SigmoidParams final_estimates{};
  bool early_termination = false;
  bool non_converged = false;
  std::string termination_reason;
  std::optional<std::string> transport_error;
  bool probe_available = false;
  std::int64_t total_queries = 0;
};

/// Dispatches on cfg.variant.
AttackTrace run_attack(Oracle& oracle, std::span<const double> x_star,
                       std::span<const double> x0_adv, const AttackConfig& cfg,
                       std::uint64_t seed);
AttackTrace run_psj(Oracle& oracle, std::span<const double> x_star,
                    std::span<const double> x0_adv, const AttackConfig& cfg, std::uint64_t seed);
AttackTrace run_hsj(Oracle& oracle, std::span<const double> x_star,
                    std::span<const double> x0_adv, const AttackConfig& cfg, std::uint64_t seed);
/// run_hsj over a majority vote of r queries; counts base queries.
AttackTrace run_hsj_repeat(Oracle& oracle, std::span<const double> x_star,
                           std::span<const double> x0_adv, int r, const AttackConfig& cfg,
                           std::uint64_t seed);
AttackTrace run_psj_truegrad(Oracle& oracle, std::span<const double> x_star,
                             std::span<const double> x0_adv, const AttackConfig& cfg,
                             std::uint64_t seed);

struct InitSearch {
  double first_radius = 0.1;   // per-coordinate std of the first candidates
  double growth = 2.0;
  int per_radius = 4;          // candidates drawn at each radius
  int votes = 15;
  std::int64_t budget = 10000;
};

/// Gaussian candidates around x_star at growing radii until one gets a -1
/// majority over `votes` queries. Throws NoAdversarialFound when the budget
/// runs out.
PointVec find_initial_adversarial(Oracle& oracle, std::span<const double> x_star,
                                  std::uint64_t seed, const InitSearch& opts = {});

/// Target cosine of the deterministic baseline at iteration t.
double deterministic_target_cos(const AttackConfig& cfg, int dim, int t);

/// Shrink factor for the prior at iteration t (1..10, then 10).
double prior_shrink_factor(int t);

}  // namespace psj
