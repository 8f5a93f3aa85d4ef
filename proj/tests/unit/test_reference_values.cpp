// Frozen reference values. Each constant was computed independently
// (50-digit mpmath for the closed forms, hand arithmetic for the counting
// examples); published parameter values are checked as stated.

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "psj/attack.hpp"
#include "psj/experiments.hpp"
#include "psj/oracle.hpp"
#include "psj/posterior_grid.hpp"
#include "psj/sigmoid_math.hpp"

using namespace psj;

namespace {

struct ErfRef {
  double x;
  double value;
};

// mpmath.erf at 50 digits, rounded to double.
constexpr ErfRef kErfTable[] = {
    {0.001, 0.00112837879096923640343756413937},
    {0.1, 0.112462916018284898404712251014},
    {0.35355339059327376, 0.382924922548026231341921308796},
    {0.5, 0.520499877813046537682746653892},
    {1.0, 0.842700792949714869341220635083},
    {1.5, 0.966105146475310727066976261646},
    {2.5, 0.99959304798255504106043578426},
    {3.5, 0.999999256901627658587254476316},
    {-0.75, -0.711155633653515131598937834591},
    {0.0, 0.0},
};

}  // namespace

TEST_CASE("erf agrees with the 50-digit table to 1e-12") {
  for (const auto& r : kErfTable) CHECK(std::abs(std::erf(r.x) - r.value) <= 1e-12);
}

TEST_CASE("planar sigmoid value at offset 0.25, s=1, eps=0.1") {
  // 0.1 + 0.8 / (1 + e^-1)
  const double ref = 0.68484686290400;
  CHECK(sigmoid_prob({0.0, 1.0, 0.1}, 0.25) == doctest::Approx(ref).epsilon(1e-13));
  PlanarSigmoidOracle o({{1.0, 0.0}, {0.0, 0.0}, 1.0, 0.1}, 1);
  const PointVec x{0.25, 3.0};
  CHECK(o.probe(x) == doctest::Approx(ref).epsilon(1e-13));
  CHECK(std::abs(o.probe(x) - 0.684847) < 5e-7);
}

TEST_CASE("clipped alpha at D=0, s=1, beta=1") {
  // 2 erf(1 / (2 sqrt 2))
  const double ref = 0.765849845096052;
  CHECK(alpha_clipped(0.0, 1.0, 1.0, 0.0) == doctest::Approx(ref).epsilon(1e-13));
  CHECK(std::abs(alpha_clipped(0.0, 1.0, 1.0, 0.0) - 0.76586) < 2e-5);
}

TEST_CASE("logistic alpha at D=0, s=1, beta=1 (quadrature reference)") {
  // 2 * integral of sigma(s t) - 1/2 weighted by t phi(t), evaluated by mpmath.quad.
  const double ref = 0.7294775314861;
  const McEstimate m = alpha_mc(0.0, 1.0, 1.0, 0.0, 1'000'000, 11);
  CHECK(std::abs(m.mean - ref) <= 3.0 * m.std_error);
}

TEST_CASE("deterministic alpha at D=0 is sqrt(2/pi)") {
  CHECK(alpha_deterministic(0.0, 0.3, 0.0) == doctest::Approx(0.7978845608028654).epsilon(1e-15));
}

TEST_CASE("expected cosine n=100, d=785, alpha=sqrt(2/pi)") {
  const double ref = 0.27404930817571;
  CHECK(expected_cos(100, 785, std::sqrt(2.0 / std::numbers::pi)) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(std::abs(expected_cos(100, 785, std::sqrt(2.0 / std::numbers::pi)) - 0.27405) < 1e-5);
}

TEST_CASE("sample size C=0.5, d=101, alpha=0.5 is ceil(133.33)") {
  CHECK(sample_size_real(0.5, 101, 0.5) == doctest::Approx(400.0 / 3.0));
  CHECK(sample_size(0.5, 101, 0.5) == 134);
}

TEST_CASE("mutual information of two equiprobable cells at 0.25 / 0.75") {
  // 1 - H2(0.25)
  const double ref = 0.18872187554087;
  // Place x so the two cells answer +1 with probability 0.25 and 0.75:
  // 1/(1+exp(-4 s (x - z))) = 0.75 needs s (x - z) = ln 3 / 4.
  const double s = std::log(3.0) / 4.0 / 0.25;
  GridAxes ax2{{0.25, 0.75}, {s}, {0.0}, {0.5}};
  ParamGrid g2(ax2);
  CHECK(mutual_information(g2, 0.5) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(std::abs(mutual_information(g2, 0.5) - 0.18872) < 1e-5);
}

TEST_CASE("Phi(1) for the input-noise example") {
  CHECK(0.5 * std::erfc(-1.0 / std::sqrt(2.0)) == doctest::Approx(0.841344746068543).epsilon(1e-14));
}

TEST_CASE("majority of 3 at p=0.6 and flip into the target class") {
  CHECK(majority_prob(0.6, 3) == doctest::Approx(0.648).epsilon(1e-14));
  CHECK(0.1 / 9.0 == doctest::Approx(0.0111).epsilon(1e-2));
}

TEST_CASE("published grid and schedule constants") {
  const GridSpec spec;
  CHECK(spec.n_z == 101);
  CHECK(spec.n_x == 101);
  CHECK(spec.n_s == 31);
  CHECK(spec.log10_s_min == 1.0);
  CHECK(spec.log10_s_max == 3.0);
  const ParamGrid g = init_uniform(spec);
  CHECK(g.cell_count() == 6262);
  CHECK(std::exp(g.log_mass()[0]) == doctest::Approx(1.0 / 6262.0).epsilon(1e-12));

  const BinSearchConfig bin;
  CHECK(bin.k == 10);
  const AttackConfig cfg;
  CHECK(cfg.iterations == 32);
  CHECK(cfg.n0_det == 100.0);
  CHECK(cfg.enlarge == 1.5);
  CHECK(cfg.grad_batch == 256);
  CHECK(cfg.theta_det == 0.010);
  // beta = sqrt(784) / 100 = 0.280 at MNIST's dimension.
  CHECK(cfg.cdet_beta_scale * std::sqrt(784.0) / cfg.radius_divisor == doctest::Approx(0.280));

  const GridSpec shrunk = shrink_spec(spec, {0.5, 100.0, 0.0}, 10.0);
  CHECK(shrunk.z_min == doctest::Approx(0.45));
  CHECK(shrunk.z_max == doctest::Approx(0.55));
  CHECK(prior_shrink_factor(1) == 1.0);
  CHECK(prior_shrink_factor(10) == 10.0);
  CHECK(prior_shrink_factor(25) == 10.0);

  const auto ls = logspace(1, 4, 13);
  CHECK(ls.size() == 13);
  CHECK(ls.front() == doctest::Approx(10.0));
  CHECK(ls.back() == doctest::Approx(10000.0));
  const auto ss = logspace(-2, 2, 17);
  CHECK(ss.size() == 17);
  CHECK(ss[8] == doctest::Approx(1.0));
}
