#include <doctest.h>

#include <cmath>
#include <random>

#include "psj/metrics.hpp"
#include "psj/oracle.hpp"

using namespace psj;

namespace {

PlanarSigmoidOracle plane(double s, double eps) {
  // boundary: coordinate 0 equals 2, class c (+1) below it
  return PlanarSigmoidOracle({{-1.0, 0.0, 0.0, 0.0}, {2.0, 0.0, 0.0, 0.0}, s, eps}, 1);
}

}  // namespace

TEST_CASE("border distance on an axis-aligned boundary") {
  const auto o = plane(kInf, 0.0);
  const PointVec star(4, 0.0);
  const BorderDistance b = border_distance(o, star, PointVec{4, 0, 0, 0});
  CHECK(b.crossing_found);
  CHECK(b.value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(b.projected[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(b.u == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(o.query_count() == 0);
}

TEST_CASE("border distance: point on the boundary and beyond-x crossings") {
  const auto o = plane(3.0, 0.1);
  const PointVec star(4, 0.0);
  const BorderDistance on = border_distance(o, star, PointVec{2, 0, 0, 0});
  CHECK(on.crossing_found);
  CHECK(on.value == doctest::Approx(scaled_distance(star, PointVec{2, 0, 0, 0})).epsilon(1e-8));

  const BorderDistance beyond = border_distance(o, star, PointVec{0.5, 0, 0, 0});
  CHECK(beyond.crossing_found);
  CHECK(beyond.value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(beyond.value > scaled_distance(star, PointVec{0.5, 0, 0, 0}));
}

TEST_CASE("no crossing falls back to the raw distance") {
  const auto o = plane(kInf, 0.0);
  const PointVec star(4, 0.0);
  const PointVec x{0.01, 0, 0, 0};  // boundary at u = 200, outside [0, 10]
  const BorderDistance b = border_distance(o, star, x);
  CHECK_FALSE(b.crossing_found);
  CHECK(b.value == doctest::Approx(scaled_distance(star, x)));

  BorderSearch wide;
  wide.u_limit = 1e6;
  const BorderDistance w = border_distance(o, star, x, wide);
  CHECK(w.crossing_found);
  CHECK(w.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("projection idempotence and invariance to s and eps") {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  const PointVec star{0.1, -0.2, 0.3, 0.0};
  for (int i = 0; i < 20; ++i) {
    const PointVec x{3 + U(eng), U(eng), U(eng), U(eng)};
    const double ref = border_distance(plane(kInf, 0.0), star, x).value;
    for (double eps : {0.0, 0.1, 0.3}) {
      const double s = std::pow(10.0, 2 * U(eng));
      const auto o = plane(s, eps);
      const BorderDistance b = border_distance(o, star, x);
      CHECK(b.value == doctest::Approx(ref).epsilon(1e-7));
      const BorderDistance again = border_distance(o, star, b.projected);
      CHECK(std::abs(again.value - b.value) <= 1e-6);
    }
  }
}

TEST_CASE("adversarial accuracy") {
  const std::vector<AccuracyItem> all{{0.5, true}, {1.0, true}, {2.0, true}};
  CHECK(adversarial_accuracy(all, 0.0) == 1.0);
  CHECK(adversarial_accuracy(all, 0.75) == doctest::Approx(2.0 / 3.0));
  CHECK(adversarial_accuracy(all, 5.0) == 0.0);
  const std::vector<AccuracyItem> mixed{{0.5, true}, {1.0, false}, {2.0, true}, {0.1, false}};
  CHECK(adversarial_accuracy(mixed, 0.0) == 0.5);
  double prev = 1.0;
  for (double eta = 0.0; eta < 3.0; eta += 0.05) {
    const double a = adversarial_accuracy(mixed, eta);
    CHECK(a <= prev);
    prev = a;
  }
}

TEST_CASE("percentiles") {
  const auto p = percentiles(std::vector<double>{1, 2, 3, 4, 5});
  CHECK(p[0] == doctest::Approx(2.6));
  CHECK(p[1] == doctest::Approx(3.0));
  CHECK(p[2] == doctest::Approx(3.4));
  const auto c = percentiles(std::vector<double>{7, 7, 7});
  CHECK((c[0] == 7 && c[1] == 7 && c[2] == 7));
  const auto one = percentiles(std::vector<double>{4.2});
  CHECK((one[0] == 4.2 && one[1] == 4.2 && one[2] == 4.2));
  CHECK(percentile(std::vector<double>{5, 1, 3}, 50) == 3);
  CHECK_THROWS_AS(percentile(std::vector<double>{}, 50), InvalidInput);
}
