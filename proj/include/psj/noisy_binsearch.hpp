#pragma once

// Sequential query placement on the segment [a, b] by acquisition
// maximization over a fixed candidate grid, plus the plain bisection used by
// the deterministic baseline.
//
// Line coordinates: u = 0 is endpoint a (adversarial side), u = 1 is b (the
// attacked input); the point for u is (1-u) a + u b.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psj/oracle.hpp"
#include "psj/posterior_grid.hpp"

namespace psj {

enum class Acquisition { kMutualInformation, kExpectedImprovement };
enum class StopReason { kEconomics, kCap };

std::string to_string(Acquisition a);
std::string to_string(StopReason r);

struct BinSearchConfig {
  Acquisition acquisition = Acquisition::kMutualInformation;
  int k = 10;                  // queries between stop checks
  int m = 1;                   // queries per acquisition step
  std::int64_t max_queries = 10000;
  QuerySizeConfig size;        // dim, beta, target cosine, n cap, mode
  bool band_sampling = false;  // m > 1: spread the m queries over the central 90% z band
  double mi_prune = 0.0;       // skip cells below this fraction of the max mass
  std::uint64_t seed = 0;      // only used by band sampling

  /// Throws InvalidInput.
  void validate() const;
};

struct BinSearchResult {
  ParamGrid posterior;
  SigmoidParams estimates;
  std::int64_t queries = 0;  // oracle counter delta
  StopReason stop = StopReason::kCap;
  std::vector<double> n_history;  // n_i every k queries
  std::uint64_t cell_visits = 0;
};

/// Runs the search from `prior`. A table built on the prior's axes may be
/// passed to avoid rebuilding it.
BinSearchResult noisy_bin_search(Oracle& oracle, std::span<const double> a,
                                 std::span<const double> b, ParamGrid prior,
                                 const BinSearchConfig& cfg,
                                 const LikelihoodTable* table = nullptr);

/// Candidate index that maximizes `scores`; near-ties go to the candidate
/// closest to z_hat, then to the lowest index.
std::size_t pick_candidate(std::span<const double> scores, std::span<const double> xs,
                           double z_hat);

struct BisectionResult {
  PointVec point;  // adversarial-side end of the final bracket
  double u = 0.0;  // its line coordinate
  std::int64_t queries = 0;
};

/// Classic bisection trusting every single answer, until the bracket is at
/// most theta_rel (fraction of |a - b|). With verify_start the first query
/// checks that a is labelled -1 and throws InvalidBracket otherwise.
BisectionResult deterministic_bin_search(Oracle& oracle, std::span<const double> a,
                                         std::span<const double> b, double theta_rel,
                                         bool verify_start = true);

}  // namespace psj
