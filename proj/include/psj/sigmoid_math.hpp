#pragma once

// One-dimensional output-probability model along a search line and the
// closed forms that size Monte-Carlo gradient estimates.
//
// The unit sigmoid is rescaled to slope 1 at its center:
//   sigma(t) = 1 / (1 + exp(-4 t))
// and the clipped-linear stand-in is clip(t + 1/2, 0, 1). An infinite inverse
// scale s means a step at z.

#include <cstdint>
#include <limits>

#include "psj/rng.hpp"

namespace psj {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SigmoidShape { kLogistic, kClippedLinear };

struct SigmoidParams {
  double z = 0.5;
  double s = 1.0;    // inverse scale, > 0, may be +inf
  double eps = 0.0;  // noise floor in [0, 1/2]

  /// Throws InvalidInput if s <= 0 or eps is outside [0, 1/2].
  void validate() const;
};

double unit_sigmoid(double t, SigmoidShape shape = SigmoidShape::kLogistic);

/// p(x) = eps + (1 - 2 eps) sigma(s (x - z)). Exactly 1/2 at x == z.
double sigmoid_prob(const SigmoidParams& p, double x,
                    SigmoidShape shape = SigmoidShape::kLogistic);

/// Signal strength alpha for the clipped-linear sigmoid (finite s):
///   (1-2eps) s beta [erf((D + 1/2s)/(beta sqrt2)) - erf((D - 1/2s)/(beta sqrt2))]
/// Evaluated through erfc when both arguments sit in the same tail.
double alpha_clipped(double delta, double s, double beta, double eps);

/// s -> infinity limit: (1-2eps) sqrt(2/pi) exp(-(D/beta)^2 / 2).
double alpha_deterministic(double delta, double beta, double eps);

/// Dispatches on s: the step limit for s = inf, the clipped form otherwise.
double alpha_closed_form(double delta, double s, double beta, double eps);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Brute-force Monte-Carlo estimate of E[y delta] with delta ~ N(0,1) and
/// y in {-1,+1} drawn from Ber(eps + (1-2eps) sigma(s (D + beta delta))).
/// Parallel over fixed-size chunks; the result does not depend on the thread
/// count.
McEstimate alpha_mc(double delta, double s, double beta, double eps, std::int64_t samples,
                    std::uint64_t seed, SigmoidShape shape = SigmoidShape::kLogistic);

/// Single-threaded reference for alpha_mc; identical chunking and streams, so
/// both return the same value up to summation order.
McEstimate alpha_mc_serial(double delta, double s, double beta, double eps,
                           std::int64_t samples, std::uint64_t seed,
                           SigmoidShape shape = SigmoidShape::kLogistic);

/// E[cos(g_hat, g)] ~= 1 / sqrt(1 + (d-1) / (n alpha^2)). Throws DomainError
/// for alpha <= 0 or n <= 0.
double expected_cos(double n, int d, double alpha);

/// Real-valued inverse C^2/alpha^2 (d-1)/(1-C^2). May be +inf.
double sample_size_real(double target_cos, int d, double alpha);

/// ceil(sample_size_real), at least 1. A value within 1e-9 (relative) of an
/// integer snaps to it so exact inverses of expected_cos round-trip.
/// Throws DomainError for C >= 1, C < 0, alpha <= 0, or unrepresentable sizes.
std::int64_t sample_size(double target_cos, int d, double alpha);

/// One exact draw of cos(g_hat, g) for the planar model without building
/// d-dimensional vectors:  xi / sqrt(xi^2 + chi2_{d-1} / n).
double random_cos_draw(int n, int d, double s, double delta, double beta, double eps,
                       Engine& eng, SigmoidShape shape = SigmoidShape::kLogistic);
double random_cos_draw(int n, int d, double s, double delta, double beta, double eps,
                       std::uint64_t seed, SigmoidShape shape = SigmoidShape::kLogistic);

/// Mean and standard error of `draws` independent random_cos_draw values.
McEstimate mean_random_cos(int n, int d, double s, double delta, double beta, double eps,
                           std::int64_t draws, std::uint64_t seed,
                           SigmoidShape shape = SigmoidShape::kLogistic);
McEstimate mean_random_cos_serial(int n, int d, double s, double delta, double beta,
                                  double eps, std::int64_t draws, std::uint64_t seed,
                                  SigmoidShape shape = SigmoidShape::kLogistic);

}  // namespace psj
