#include "psj/gradient_estimate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psj {
namespace {

void fill_row(std::uint64_t stream, std::int64_t row, int dim, double scale, bool sphere,
              double* out) {
  Engine eng = make_engine(stream, static_cast<std::uint64_t>(row));
  std::normal_distribution<double> normal(0.0, 1.0);
  double ss = 0.0;
  for (int j = 0; j < dim; ++j) {
    out[j] = normal(eng);
    ss += out[j] * out[j];
  }
  const double f = sphere ? scale / std::sqrt(ss) : scale;
  for (int j = 0; j < dim; ++j) out[j] *= f;
}

void check_out(std::int64_t rows, int dim, std::span<double> out) {
  if (static_cast<std::int64_t>(out.size()) < rows * dim)
    throw InvalidInput("perturbation buffer too small");
}

GradEstimate estimate(Oracle& oracle, std::span<const double> x, std::int64_t n, double scale,
                      bool sphere, std::uint64_t seed, const GradOptions& opts) {
  if (n < 1) throw InvalidInput("gradient estimate needs n >= 1");
  if (!(scale > 0.0)) throw InvalidInput("gradient radius must be > 0");
  if (opts.batch < 1) throw InvalidInput("gradient batch must be >= 1");
  const int d = oracle.dim();
  if (static_cast<int>(x.size()) != d) throw InvalidInput("gradient point has the wrong dimension");

  const std::uint64_t start = oracle.query_count();
  std::vector<double> buf(static_cast<std::size_t>(opts.batch) * d);
  PointVec probe(static_cast<std::size_t>(d));
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::uint64_t stream = mix_seed(seed, static_cast<std::uint64_t>(attempt));
    PointVec u(static_cast<std::size_t>(d), 0.0);
    for (std::int64_t first = 0; first < n; first += opts.batch) {
      const std::int64_t rows = std::min<std::int64_t>(opts.batch, n - first);
      perturbation_batch(stream, first, rows, d, scale, sphere, buf);
      for (std::int64_t r = 0; r < rows; ++r) {
        const double* delta = buf.data() + r * d;
        for (int j = 0; j < d; ++j) probe[j] = x[j] + delta[j];
        const double y = to_int(oracle.query(probe));
        for (int j = 0; j < d; ++j) u[j] += y * delta[j];
      }
    }
    const double len = norm2(u);
    if (len > 0.0) {
      for (double& v : u) v /= len;
      return GradEstimate{std::move(u), n, scale,
                          static_cast<std::int64_t>(oracle.query_count() - start)};
    }
  }
  throw DegenerateEstimate("gradient estimate vanished twice (n=" + std::to_string(n) + ")");
}

}  // namespace

void perturbation_batch(std::uint64_t stream, std::int64_t first, std::int64_t rows, int dim,
                        double scale, bool sphere, std::span<double> out) {
  check_out(rows, dim, out);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) fill_row(stream, first + r, dim, scale, sphere, out.data() + r * dim);
}

void perturbation_batch_serial(std::uint64_t stream, std::int64_t first, std::int64_t rows,
                               int dim, double scale, bool sphere, std::span<double> out) {
  check_out(rows, dim, out);
  for (std::int64_t r = 0; r < rows; ++r) fill_row(stream, first + r, dim, scale, sphere, out.data() + r * dim);
}

GradEstimate estimate_gradient_gaussian(Oracle& oracle, std::span<const double> x,
                                        std::int64_t n, double beta, std::uint64_t seed,
                                        const GradOptions& opts) {
  return estimate(oracle, x, n, beta, false, seed, opts);
}

GradEstimate estimate_gradient_sphere(Oracle& oracle, std::span<const double> x,
                                      std::int64_t n, double delta, std::uint64_t seed,
                                      const GradOptions& opts) {
  return estimate(oracle, x, n, delta, true, seed, opts);
}

std::int64_t compute_grad_query_size(const ParamGrid& posterior, double z_hat,
                                     const QuerySizeConfig& cfg, std::int64_t n_floor) {
  const double e = expected_query_size(posterior, z_hat, cfg);
  const double n = std::ceil(e - 1e-9 * e);
  const double capped = std::clamp(n, static_cast<double>(n_floor), cfg.n_max);
  return static_cast<std::int64_t>(capped);
}

PointVec probe_gradient(const Oracle& oracle, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw InvalidInput("finite-difference step must be > 0");
  PointVec g(x.size());
  PointVec y(x.begin(), x.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    y[j] = x[j] + h;
    const double up = oracle.probe(y);
    y[j] = x[j] - h;
    const double down = oracle.probe(y);
    y[j] = x[j];
    g[j] = (up - down) / (2.0 * h);
  }
  const double len = norm2(g);
  if (!(len > 0.0)) throw DegenerateEstimate("probe gradient vanished");
  for (double& v : g) v /= len;
  return g;
}

}  // namespace psj
