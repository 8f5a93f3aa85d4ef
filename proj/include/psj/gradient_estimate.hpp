#pragma once

// Monte-Carlo estimate of the boundary normal from labels at random
// perturbations: u = sum_i f(x + delta_i) delta_i, g_hat = u / |u|.
// g_hat points toward the attacked class (+1).

#include <cstdint>
#include <span>

#include "psj/oracle.hpp"
#include "psj/posterior_grid.hpp"

namespace psj {

struct GradEstimate {
  PointVec direction;       // unit norm
  std::int64_t n_used = 0;  // perturbations in the accepted attempt
  double radius = 0.0;      // per-coordinate std (Gaussian) or sphere radius
  std::int64_t queries = 0; // oracle counter delta, retries included
};

struct GradOptions {
  int batch = 256;  // perturbations generated together before querying
};

/// Perturbation rows [first, first + rows) of the stream, written row-major
/// into out (rows x dim). Row i depends only on (stream, i), so any batching
/// or thread count yields the same rows. Sphere rows are scaled to norm
/// `scale`; Gaussian rows have per-coordinate std `scale`.
void perturbation_batch(std::uint64_t stream, std::int64_t first, std::int64_t rows, int dim,
                        double scale, bool sphere, std::span<double> out);
void perturbation_batch_serial(std::uint64_t stream, std::int64_t first, std::int64_t rows,
                               int dim, double scale, bool sphere, std::span<double> out);

/// Isotropic Gaussian perturbations, per-coordinate std beta. Issues exactly
/// n queries unless u == 0, in which case it retries once with a fresh stream
/// and then throws DegenerateEstimate.
GradEstimate estimate_gradient_gaussian(Oracle& oracle, std::span<const double> x,
                                        std::int64_t n, double beta, std::uint64_t seed,
                                        const GradOptions& opts = {});

/// Perturbations uniform on the radius-delta sphere.
GradEstimate estimate_gradient_sphere(Oracle& oracle, std::span<const double> x,
                                      std::int64_t n, double delta, std::uint64_t seed,
                                      const GradOptions& opts = {});

/// ceil(expected_query_size) clamped to [n_floor, cfg.n_max].
std::int64_t compute_grad_query_size(const ParamGrid& posterior, double z_hat,
                                     const QuerySizeConfig& cfg, std::int64_t n_floor = 3);

/// Normalized central finite-difference gradient of the probe with step h.
/// Costs 2 d probe calls and no queries. Throws DegenerateEstimate when the
/// difference vanishes.
PointVec probe_gradient(const Oracle& oracle, std::span<const double> x, double h);

}  // namespace psj
