#include <doctest.h>

#include <cmath>
#include <memory>
#include <thread>
#include <vector>

#include "psj/oracle.hpp"

using namespace psj;

namespace {

std::shared_ptr<PlanarSigmoidOracle> planar(int d, double s, double eps, std::uint64_t seed) {
  PointVec g(d, 0.0);
  g[0] = 1.0;
  return std::make_shared<PlanarSigmoidOracle>(PlanarSigmoidSpec{g, PointVec(d, 0.0), s, eps},
                                               seed);
}

double plus_frequency(Oracle& o, const PointVec& x, int n) {
  int plus = 0;
  for (int i = 0; i < n; ++i) plus += o.query(x) == Label::kTarget;
  return static_cast<double>(plus) / n;
}

PointVec at(int d, double offset) {
  PointVec x(d, 0.3);
  x[0] = offset;
  return x;
}

// Constant deterministic oracle for wrapper tests.
class ConstOracle final : public Oracle {
 public:
  ConstOracle(int d, Label l) : Oracle(d), l_(l) {}
  bool has_probe() const override { return true; }

 protected:
  Label do_query(std::span<const double>) override { return l_; }
  double do_probe(std::span<const double>) const override { return l_ == Label::kTarget; }

 private:
  Label l_;
};

}  // namespace

TEST_CASE("planar oracle label laws") {
  auto det = planar(3, kInf, 0.0, 1);
  CHECK(plus_frequency(*det, at(3, 0.01), 1000) == 1.0);
  CHECK(plus_frequency(*det, at(3, -0.01), 1000) == 0.0);

  auto half = planar(3, 2.0, 0.5, 2);
  const double f = plus_frequency(*half, at(3, 0.7), 10000);
  CHECK(std::abs(f - 0.5) <= 3 * std::sqrt(0.25 / 10000));

  auto o = planar(3, 1.0, 0.1, 3);
  const double p = 0.68484686290400;
  CHECK(std::abs(plus_frequency(*o, at(3, 0.25), 10000) - p) <= 3 * std::sqrt(p * (1 - p) / 1e4));
  CHECK(o->probe(at(3, 0.0)) == 0.5);
}

TEST_CASE("query counting and probe isolation") {
  auto o = planar(4, 3.0, 0.1, 4);
  const PointVec x = at(4, 0.1);
  for (int i = 0; i < 17; ++i) o->query(x);
  CHECK(o->query_count() == 17);
  o->probe(x);
  CHECK(o->query_count() == 17);
  std::vector<PointVec> xs(5, x);
  CHECK(o->query_batch(xs).size() == 5);
  CHECK(o->query_count() == 22);
  CHECK_THROWS_AS(o->query(PointVec(3, 0.0)), InvalidInput);
  CHECK_THROWS_AS(o->probe(PointVec(5, 0.0)), InvalidInput);
}

TEST_CASE("concurrent queries lose no increments") {
  auto o = planar(2, 1.0, 0.1, 5);
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&] {
      for (int i = 0; i < 2500; ++i) o->query(PointVec{0.1, 0.0});
    });
  for (auto& th : pool) th.join();
  CHECK(o->query_count() == 10000);
}

TEST_CASE("paired seeds replay identical label streams") {
  auto a = planar(2, 1.0, 0.1, 77), b = planar(2, 1.0, 0.1, 77);
  for (int i = 0; i < 500; ++i) {
    const PointVec x{0.01 * (i % 40) - 0.2, 0.0};
    CHECK(a->query(x) == b->query(x));
  }
}

TEST_CASE("binomial concentration for every built-in oracle with a probe") {
  const int d = 5;
  LinearLogitSpec ls;
  ls.classes = 3;
  ls.dim = d;
  ls.weights = {1, 0, 0, 0, 0, 0, 1, 0, 0, 0, -1, -1, 0, 0, 0};
  ls.biases = {0, 0.2, 0};
  ls.temperature = 0.7;
  std::vector<OraclePtr> oracles = {
      planar(d, 2.0, 0.1, 11),
      std::make_shared<LinearLogitOracle>(ls, 12),
      wrap_flip(planar(d, kInf, 0.0, 13), 0.2, 4, 14),
      wrap_input_noise(planar(d, kInf, 0.0, 15), 0.5, 16),
      wrap_repeat_majority(planar(d, 1.0, 0.05, 17), 3),
  };
  const int N = 10000;
  for (std::size_t k = 0; k < oracles.size(); ++k) {
    for (int i = 0; i < 20; ++i) {
      PointVec x(d, 0.0);
      x[0] = -0.5 + 0.05 * i;
      x[1] = 0.1 * std::sin(i);
      const double p = oracles[k]->probe(x);
      const double f = plus_frequency(*oracles[k], x, N);
      CAPTURE(k);
      CAPTURE(i);
      CHECK(std::abs(f - p) <= 4 * std::sqrt(p * (1 - p) / N) + 1e-12);
    }
  }
}

TEST_CASE("linear logit oracle") {
  LinearLogitSpec ls;
  ls.classes = 2;
  ls.dim = 2;
  ls.weights = {1, 0, -1, 0};
  ls.biases = {0, 0};
  ls.target_class = 0;
  LinearLogitOracle o(ls, 1);
  CHECK(o.probe(PointVec{1.0, 0.0}) == 1.0);
  CHECK(o.probe(PointVec{-1.0, 0.0}) == 0.0);
  CHECK(o.argmax_class(PointVec{-1.0, 0.0}) == 1);
  CHECK(plus_frequency(o, PointVec{0.5, 0.0}, 200) == 1.0);
  ls.temperature = -1;
  CHECK_THROWS_AS(LinearLogitOracle(ls, 1), InvalidInput);
}

TEST_CASE("flip wrapper") {
  const PointVec x{0.0, 0.0};
  auto plus = std::make_shared<ConstOracle>(2, Label::kTarget);
  auto minus = std::make_shared<ConstOracle>(2, Label::kOther);

  auto always = wrap_flip(plus, 1.0, 2, 1);
  CHECK(plus_frequency(*always, x, 500) == 0.0);

  auto f = wrap_flip(minus, 0.1, 10, 3);
  const double rate = plus_frequency(*f, x, 100000);
  const double p = 0.1 / 9;
  CHECK(std::abs(rate - p) <= 3 * std::sqrt(p * (1 - p) / 1e5));
  CHECK(f->probe(x) == doctest::Approx(p));

  // probe composition on a sigmoid base
  auto base = planar(2, 1.0, 0.1, 3);
  auto w = wrap_flip(base, 0.3, 5, 4);
  const PointVec y{0.2, 0.0};
  const double pb = base->probe(y);
  CHECK(w->probe(y) == doctest::Approx((1 - 0.3) * pb + (1 - pb) * 0.3 / 4).epsilon(1e-14));

  // nu = 0 is a no-op, and composing with nu = 0 equals the single wrapper.
  auto b1 = planar(2, 1.0, 0.1, 9), b2 = planar(2, 1.0, 0.1, 9);
  auto id = wrap_flip(b1, 0.0, 10, 5);
  for (int i = 0; i < 300; ++i) CHECK(id->query(y) == b2->query(y));

  auto c1 = wrap_flip(planar(2, 1.0, 0.1, 21), 0.2, 10, 22);
  auto c2 = wrap_flip(wrap_flip(planar(2, 1.0, 0.1, 21), 0.2, 10, 22), 0.0, 10, 23);
  for (int i = 0; i < 300; ++i) CHECK(c1->query(y) == c2->query(y));

  CHECK_THROWS_AS(wrap_flip(plus, 1.5, 2, 1), InvalidInput);
  CHECK_THROWS_AS(wrap_flip(plus, 0.1, 1, 1), InvalidInput);
}

TEST_CASE("input-noise wrapper") {
  auto b1 = planar(3, kInf, 0.0, 1), b2 = planar(3, kInf, 0.0, 1);
  auto id = wrap_input_noise(b1, 0.0, 5);
  for (int i = 0; i < 200; ++i) {
    const PointVec x{0.01 * (i - 100), 0.0, 0.0};
    CHECK(id->query(x) == b2->query(x));
  }
  auto on = wrap_input_noise(planar(3, kInf, 0.0, 2), 0.7, 6);
  const double f0 = plus_frequency(*on, PointVec{0.0, 1.0, 0.0}, 10000);
  CHECK(std::abs(f0 - 0.5) <= 3 * 0.005);
  auto one = wrap_input_noise(planar(3, kInf, 0.0, 3), 1.0, 7);
  const double phi1 = 0.841344746068543;
  const double f1 = plus_frequency(*one, PointVec{1.0, 0.0, 0.0}, 10000);
  CHECK(std::abs(f1 - phi1) <= 3 * std::sqrt(phi1 * (1 - phi1) / 1e4));
  CHECK(std::abs(one->probe(PointVec{1.0, 0.0, 0.0}) - phi1) < 0.02);
  CHECK_THROWS_AS(wrap_input_noise(b1, -1.0, 1), InvalidInput);
}

TEST_CASE("repeat-majority wrapper") {
  CHECK(majority_prob(0.6, 3) == doctest::Approx(0.648));
  CHECK(majority_prob(0.37, 1) == doctest::Approx(0.37));

  auto b1 = planar(2, 1.0, 0.1, 8), b2 = planar(2, 1.0, 0.1, 8);
  auto r1 = wrap_repeat_majority(b1, 1);
  const PointVec y{0.1, 0.0};
  for (int i = 0; i < 200; ++i) CHECK(r1->query(y) == b2->query(y));

  auto det = planar(2, kInf, 0.0, 9);
  auto r5 = wrap_repeat_majority(det, 5);
  for (int i = 0; i < 10; ++i) CHECK(r5->query(PointVec{0.3, 0.0}) == Label::kTarget);
  CHECK(r5->query_count() == 50);  // charged in base queries
  CHECK(det->query_count() == 50);
  CHECK(r5->unit_cost() == 5);

  CHECK_THROWS_AS(wrap_repeat_majority(det, 2), InvalidInput);
  CHECK_THROWS_AS(wrap_repeat_majority(det, 0), InvalidInput);
}
