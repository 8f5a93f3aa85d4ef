#pragma once

// Evaluation-only metrics. Border distances use the white-box probe and
// never touch the query counter. Distances are l2 norms divided by sqrt(d).

#include <array>
#include <span>
#include <vector>

#include "psj/oracle.hpp"

namespace psj {

struct BorderDistance {
  double value = 0.0;
  PointVec projected;
  bool crossing_found = false;
  double u = 1.0;  // projected = (1-u) x_star + u x
};

struct BorderSearch {
  double u_max = 10.0;
  int segments = 1000;
  double tol = 1e-9;
  /// Past u_max, probe u_max * 2^k up to this limit before giving up. The
  /// default keeps the plain [0, u_max] scan.
  double u_limit = 10.0;
};

/// Nearest root u > 0 of probe((1-u) x_star + u x) = 1/2, by scanning
/// then bisecting. Without a sign change up to u_max (or u_limit) the raw
/// distance is returned with crossing_found = false.
BorderDistance border_distance(const Oracle& oracle, std::span<const double> x_star,
                               std::span<const double> x, const BorderSearch& search = {});

/// |x - x_star| / sqrt(d).
double scaled_distance(std::span<const double> x_star, std::span<const double> x);

struct AccuracyItem {
  double distance = 0.0;
  bool clean_correct = true;
};

/// Fraction of instances that are clean-correct and whose border distance
/// exceeds eta.
double adversarial_accuracy(std::span<const AccuracyItem> items, double eta);

/// Linear-interpolation percentile (rank in [0, 100]). Throws InvalidInput
/// on an empty list.
double percentile(std::span<const double> values, double rank);
/// 40th, 50th and 60th percentiles.
std::array<double, 3> percentiles(std::span<const double> values);

}  // namespace psj
