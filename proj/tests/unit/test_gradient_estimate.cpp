#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "psj/gradient_estimate.hpp"

using namespace psj;

namespace {

std::shared_ptr<PlanarSigmoidOracle> planar(int d, double s, double eps, std::uint64_t seed) {
  PointVec g(d, 0.0);
  g[0] = 1.0;
  return std::make_shared<PlanarSigmoidOracle>(PlanarSigmoidSpec{g, PointVec(d, 0.0), s, eps},
                                               seed);
}

class Negated final : public Oracle {
 public:
  explicit Negated(OraclePtr base) : Oracle(base->dim()), base_(std::move(base)) {}

 protected:
  Label do_query(std::span<const double> x) override { return negate(base_->query(x)); }

 private:
  OraclePtr base_;
};

double mean_cos(int n, int d, double s, double eps, int seeds, bool sphere = false,
                double radius = 1.0) {
  double sum = 0.0;
  for (int k = 0; k < seeds; ++k) {
    auto o = planar(d, s, eps, 1000 + k);
    const PointVec x(d, 0.0);
    const GradEstimate g = sphere ? estimate_gradient_sphere(*o, x, n, radius, k)
                                  : estimate_gradient_gaussian(*o, x, n, radius, k);
    sum += g.direction[0];
  }
  return sum / seeds;
}

}  // namespace

TEST_CASE("unit norm, exact query count, reported radius") {
  auto o = planar(20, 5.0, 0.1, 1);
  const PointVec x(20, 0.01);
  const GradEstimate g = estimate_gradient_gaussian(*o, x, 300, 0.2, 3);
  CHECK(norm2(g.direction) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.n_used == 300);
  CHECK(g.queries == 300);
  CHECK(o->query_count() == 300);
  CHECK(g.radius == 0.2);
  CHECK_THROWS_AS(estimate_gradient_gaussian(*o, x, 0, 0.2, 3), InvalidInput);
  CHECK_THROWS_AS(estimate_gradient_gaussian(*o, x, 5, 0.0, 3), InvalidInput);
}

TEST_CASE("d = 1 gives a sign") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto o = planar(1, 2.0, 0.0, seed);
    const GradEstimate g = estimate_gradient_gaussian(*o, PointVec{0.05}, 7, 1.0, seed);
    CHECK(std::abs(g.direction[0]) == 1.0);
  }
}

TEST_CASE("deterministic planar oracle matches the expected cosine") {
  const double c = mean_cos(100, 101, kInf, 0.0, 200);
  CHECK(std::abs(c - expected_cos(100, 101, std::sqrt(2 / std::numbers::pi))) <= 0.03);
}

TEST_CASE("no-signal oracle averages to zero cosine") {
  CHECK(std::abs(mean_cos(50, 30, 4.0, 0.5, 200)) <= 0.05);
}

TEST_CASE("sphere perturbations have the exact radius; n = 1 returns the perturbation") {
  std::vector<double> buf(5 * 7);
  perturbation_batch(11, 0, 5, 7, 2.5, true, buf);
  for (int r = 0; r < 5; ++r)
    CHECK(norm2(std::span<const double>(buf.data() + r * 7, 7)) == doctest::Approx(2.5).epsilon(1e-12));

  auto o = planar(2, kInf, 0.0, 1);
  const PointVec x{0.0, 0.0};
  const GradEstimate g = estimate_gradient_sphere(*o, x, 1, 0.7, 4);
  std::vector<double> row(2);
  perturbation_batch_serial(mix_seed(4, 0), 0, 1, 2, 0.7, true, row);
  const double sign = row[0] > 0 ? 1.0 : -1.0;
  CHECK(g.direction[0] == doctest::Approx(sign * row[0] / 0.7).epsilon(1e-12));
  CHECK(g.direction[1] == doctest::Approx(sign * row[1] / 0.7).epsilon(1e-12));
}

TEST_CASE("sphere and Gaussian sampling agree in high dimension") {
  const int d = 10000, n = 100;
  const double delta = 1.0;
  const double cs = mean_cos(n, d, kInf, 0.0, 100, true, delta);
  const double cg = mean_cos(n, d, kInf, 0.0, 100, false, delta / std::sqrt(d));
  CHECK(std::abs(cs - cg) <= 0.02);
}

TEST_CASE("label-sign equivariance with paired seeds") {
  auto a = planar(15, 3.0, 0.1, 9);
  auto b = std::make_shared<Negated>(planar(15, 3.0, 0.1, 9));
  const PointVec x(15, 0.02);
  const GradEstimate ga = estimate_gradient_gaussian(*a, x, 200, 0.3, 5);
  const GradEstimate gb = estimate_gradient_gaussian(*b, x, 200, 0.3, 5);
  for (int j = 0; j < 15; ++j) CHECK(gb.direction[j] == -ga.direction[j]);
}

TEST_CASE("batch size and summation order do not change the estimate") {
  const int d = 9, n = 500;
  const PointVec x(d, 0.0);
  auto o1 = planar(d, kInf, 0.0, 1), o2 = planar(d, kInf, 0.0, 1);
  const GradEstimate g1 = estimate_gradient_gaussian(*o1, x, n, 0.5, 8, GradOptions{1});
  const GradEstimate g2 = estimate_gradient_gaussian(*o2, x, n, 0.5, 8, GradOptions{256});
  CHECK(g1.direction == g2.direction);

  // Shuffled accumulation of the same rows reproduces the direction.
  std::vector<double> rows(static_cast<std::size_t>(n) * d);
  perturbation_batch_serial(mix_seed(8, 0), 0, n, d, 0.5, false, rows);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
  PointVec u(d, 0.0);
  for (int i : order) {
    const double y = rows[i * d] > 0 ? 1.0 : -1.0;
    for (int j = 0; j < d; ++j) u[j] += y * rows[i * d + j];
  }
  const double len = norm2(u);
  for (int j = 0; j < d; ++j) CHECK(u[j] / len == doctest::Approx(g1.direction[j]).epsilon(1e-12));
}

TEST_CASE("parallel perturbation rows equal the serial reference") {
  for (bool sphere : {false, true}) {
    std::vector<double> a(300 * 33), b(300 * 33);
    perturbation_batch(77, 1000, 300, 33, 0.4, sphere, a);
    perturbation_batch_serial(77, 1000, 300, 33, 0.4, sphere, b);
    CHECK(a == b);
  }
  // Row identity does not depend on where a batch starts.
  std::vector<double> whole(10 * 4), tail(5 * 4);
  perturbation_batch(5, 0, 10, 4, 1.0, false, whole);
  perturbation_batch(5, 5, 5, 4, 1.0, false, tail);
  CHECK(std::equal(tail.begin(), tail.end(), whole.begin() + 20));
}

TEST_CASE("compute_grad_query_size") {
  const int d = 785;
  const double beta = 0.01;
  QuerySizeConfig cfg;
  cfg.dim = d;
  cfg.beta = beta;
  cfg.target_cos = expected_cos(100, d, alpha_deterministic(0.0, beta, 0.0));
  ParamGrid point({{0.5}, {kInf}, {0.0}, {0.5}});
  const auto n = compute_grad_query_size(point, 0.5, cfg);
  CHECK(n >= 99);
  CHECK(n <= 101);

  ParamGrid clean({{0.5}, {200.0}, {0.0}, {0.5}});
  ParamGrid noisy({{0.5}, {200.0}, {0.4}, {0.5}});
  CHECK(compute_grad_query_size(noisy, 0.5, cfg) >= compute_grad_query_size(clean, 0.5, cfg));

  ParamGrid far({{0.0, 1.0}, {kInf}, {0.0}, {0.5}});
  CHECK(compute_grad_query_size(far, 0.5, cfg) == static_cast<std::int64_t>(cfg.n_max));

  cfg.target_cos = 1e-9;
  CHECK(compute_grad_query_size(point, 0.5, cfg, 3) == 3);
}

TEST_CASE("probe_gradient on a planar oracle is the normal") {
  PointVec g{0.6, 0.0, -0.8};
  PlanarSigmoidOracle o({g, {0.1, 0.2, 0.3}, 3.0, 0.1}, 1);
  const PointVec est = probe_gradient(o, PointVec{0.2, 0.0, 0.1}, 1e-4);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(est[j] - g[j]) <= 1e-6);
  CHECK(o.query_count() == 0);
  PlanarSigmoidOracle flat({g, {0, 0, 0}, 3.0, 0.5}, 1);
  CHECK_THROWS_AS(probe_gradient(flat, PointVec{0, 0, 0}, 1e-4), DegenerateEstimate);
}

TEST_CASE("cosine calibration on a 3x3x3 grid") {
  for (int n : {20, 100, 400})
    for (int d : {20, 100, 400})
      for (double s : {1.0, 10.0, kInf}) {
        const double c = mean_cos(n, d, s, 0.0, 200);
        CAPTURE(n);
        CAPTURE(d);
        CAPTURE(s);
        CHECK(std::abs(c - expected_cos(n, d, alpha_closed_form(0.0, s, 1.0, 0.0))) <= 0.05);
      }
}
