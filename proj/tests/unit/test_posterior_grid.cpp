#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "psj/posterior_grid.hpp"

using namespace psj;

namespace {

double total_mass(const ParamGrid& g) {
  const auto m = g.masses();
  return std::accumulate(m.begin(), m.end(), 0.0);
}

// Two cells at z = 0.25 / 0.75 with label-+1 probabilities 0.75 / 0.25 at x = 0.5.
GridAxes quarter_axes() {
  return {{0.25, 0.75}, {std::log(3.0)}, {0.0}, {0.0, 0.5, 1.0}};
}

}  // namespace

TEST_CASE("init_uniform") {
  GridSpec tiny;
  tiny.n_z = 2;
  tiny.n_s = 1;
  tiny.eps_values = {0.0};
  const ParamGrid g = init_uniform(tiny);
  CHECK(g.cell_count() == 2);
  CHECK(g.masses()[0] == doctest::Approx(0.5));
  CHECK(g.masses()[1] == doctest::Approx(0.5));

  const ParamGrid big = init_uniform(GridSpec{});
  CHECK(big.cell_count() == 6262);
  const auto zm = big.z_marginal();
  CHECK(zm.size() == 101);
  for (double v : zm) CHECK(v == doctest::Approx(1.0 / 101));

  GridSpec bad;
  bad.n_z = 0;
  CHECK_THROWS_AS(init_uniform(bad), InvalidInput);
  bad = GridSpec{};
  bad.eps_values = {0.7};
  CHECK_THROWS_AS(init_uniform(bad), InvalidInput);
  bad = GridSpec{};
  bad.eps_values = {};
  CHECK_THROWS_AS(init_uniform(bad), InvalidInput);
}

TEST_CASE("axes from spec are log-spaced in s and sorted") {
  const GridAxes ax = GridAxes::from_spec(GridSpec{});
  CHECK(ax.z.front() == 0.0);
  CHECK(ax.z.back() == 1.0);
  CHECK(ax.z[37] == doctest::Approx(0.37));
  CHECK(ax.s.front() == doctest::Approx(10.0));
  CHECK(ax.s[15] == doctest::Approx(100.0));
  CHECK(ax.s.back() == doctest::Approx(1000.0));
  CHECK(std::is_sorted(ax.x.begin(), ax.x.end()));
}

TEST_CASE("update examples") {
  ParamGrid g({{0.25, 0.75}, {kInf}, {0.0}, {0.5}});
  g.observe(0.5, Label::kTarget);
  CHECK(g.masses()[0] == doctest::Approx(1.0));
  CHECK(g.masses()[1] == 0.0);
  // the excluded cell is -inf, never NaN
  CHECK(std::isinf(g.log_mass()[1]));
  CHECK_THROWS_AS(g.observe(0.1, Label::kTarget), DegeneratePosterior);

  ParamGrid flat({{0.25, 0.75}, {5.0}, {0.5}, {0.5}});
  const ParamGrid before = flat;
  flat.observe(0.9, Label::kOther);
  CHECK(flat.masses()[0] == doctest::Approx(before.masses()[0]));

  ParamGrid q(quarter_axes());
  q = update(q, 0.5, Label::kOther);
  CHECK(q.masses()[0] == doctest::Approx(0.25));
  CHECK(q.masses()[1] == doctest::Approx(0.75));
}

TEST_CASE("normalization holds over random update sequences") {
  GridSpec spec;
  spec.n_z = 21;
  spec.n_s = 5;
  spec.n_x = 21;
  std::mt19937_64 eng(1);
  std::uniform_real_distribution<double> U(0, 1);
  for (int seq = 0; seq < 1000; ++seq) {
    ParamGrid g = init_uniform(spec);
    for (int i = 0; i < 20; ++i) g.observe(U(eng), U(eng) < 0.5 ? Label::kTarget : Label::kOther);
    REQUIRE(std::abs(total_mass(g) - 1.0) <= 1e-9);
    for (double v : g.log_mass()) REQUIRE_FALSE(std::isnan(v));
  }
}

TEST_CASE("update is exchangeable") {
  GridSpec spec;
  spec.n_z = 31;
  spec.n_s = 7;
  std::mt19937_64 eng(2);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<std::pair<double, Label>> obs;
  for (int i = 0; i < 40; ++i) obs.emplace_back(U(eng), U(eng) < 0.5 ? Label::kTarget : Label::kOther);
  ParamGrid a = init_uniform(spec);
  for (auto [x, l] : obs) a.observe(x, l);
  std::shuffle(obs.begin(), obs.end(), eng);
  ParamGrid b = init_uniform(spec);
  for (auto [x, l] : obs) b.observe(x, l);
  const auto ma = a.masses(), mb = b.masses();
  for (std::size_t i = 0; i < ma.size(); ++i) CHECK(std::abs(ma[i] - mb[i]) <= 1e-9);
}

TEST_CASE("observe_candidate agrees with observe") {
  GridSpec spec;
  spec.n_z = 11;
  spec.n_s = 4;
  spec.n_x = 9;
  ParamGrid a = init_uniform(spec), b = a;
  const LikelihoodTable table(a.axes());
  for (std::size_t k : {0u, 3u, 8u, 4u}) {
    const Label l = k % 2 ? Label::kTarget : Label::kOther;
    a.observe(a.axes().x[k], l);
    b.observe_candidate(table, k, l);
  }
  const auto ma = a.masses(), mb = b.masses();
  for (std::size_t i = 0; i < ma.size(); ++i) CHECK(std::abs(ma[i] - mb[i]) <= 1e-12);
}

TEST_CASE("mean_params") {
  ParamGrid g({{0.2, 0.8}, {10.0, 1000.0}, {0.0, 0.1}, {0.5}});
  const SigmoidParams m = mean_params(g);
  CHECK(m.z == doctest::Approx(0.5));
  CHECK(m.s == doctest::Approx(100.0));
  CHECK(m.eps == doctest::Approx(0.05));

  std::vector<double> lm(g.cell_count(), -kInf);
  lm[g.index(1, 1, 1)] = 0.0;
  g.set_log_mass(lm);
  const SigmoidParams p = mean_params(g);
  CHECK(p.z == doctest::Approx(0.8));
  CHECK(p.s == doctest::Approx(1000.0));
  CHECK(p.eps == doctest::Approx(0.1));
}

TEST_CASE("mutual information") {
  ParamGrid point({{0.5}, {3.0}, {0.1}, {0.4, 0.6}});
  CHECK(mutual_information(point, 0.4) == doctest::Approx(0.0).epsilon(1e-12));

  ParamGrid bit({{0.25, 0.75}, {kInf}, {0.0}, {0.5}});
  CHECK(mutual_information(bit, 0.5) == doctest::Approx(1.0));

  ParamGrid q(quarter_axes());
  CHECK(mutual_information(q, 0.5) == doctest::Approx(1.0 - binary_entropy_bits(0.25)));
  CHECK(binary_entropy_bits(0.5) == doctest::Approx(1.0));
  CHECK(binary_entropy_bits(0.0) == 0.0);

  GridSpec spec;
  spec.n_z = 21;
  spec.n_s = 5;
  ParamGrid g = init_uniform(spec);
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 200; ++i) {
    if (i % 10 == 0) g.observe(U(eng), U(eng) < 0.5 ? Label::kTarget : Label::kOther);
    const double x = U(eng);
    const double mi = mutual_information(g, x);
    double pbar = 0.0;
    const auto m = g.masses();
    for (std::size_t c = 0; c < g.cell_count(); ++c)
      pbar += m[c] * sigmoid_prob({g.cell_z(c), g.cell_s(c), g.cell_eps(c)}, x);
    CHECK(mi >= -1e-12);
    CHECK(mi <= binary_entropy_bits(pbar) + 1e-12);
    CHECK(mi <= 1.0 + 1e-12);
  }
}

TEST_CASE("expected_query_size") {
  QuerySizeConfig cfg;
  cfg.dim = 785;
  cfg.beta = 0.3;
  cfg.target_cos = 0.4;
  ParamGrid point({{0.5}, {kInf}, {0.0}, {0.5}});
  CHECK(expected_query_size(point, 0.5, cfg) ==
        doctest::Approx(static_cast<double>(sample_size(0.4, 785, alpha_deterministic(0, 0.3, 0)))));

  ParamGrid two({{0.4, 0.6}, {20.0}, {0.0, 0.2}, {0.5}});
  std::vector<double> lm(two.cell_count(), -kInf);
  lm[two.index(0, 0, 0)] = 0.0;
  lm[two.index(1, 0, 1)] = 0.0;
  two.set_log_mass(lm);
  const double n1 = capped_sample_size(0.4 - 0.45, 20.0, 0.0, cfg);
  const double n2 = capped_sample_size(0.6 - 0.45, 20.0, 0.2, cfg);
  CHECK(expected_query_size(two, 0.45, cfg) == doctest::Approx(0.5 * (n1 + n2)));

  cfg.target_cos = 1e-12;
  CHECK(expected_query_size(two, 0.45, cfg) == doctest::Approx(1.0));

  QuerySizeConfig far = cfg;
  far.target_cos = 0.5;
  far.beta = 1e-4;
  CHECK(capped_sample_size(0.5, kInf, 0.0, far) == far.n_max);
  CHECK(capped_sample_size(0.1, 3.0, 0.5, far) == far.n_max);
}

TEST_CASE("expected_improvement_score") {
  QuerySizeConfig cfg;
  cfg.dim = 100;
  cfg.beta = 0.1;
  cfg.target_cos = 0.3;
  ParamGrid point({{0.5}, {30.0}, {0.1}, {0.2, 0.8}});
  const double cur = expected_query_size(point, 0.5, cfg);
  CHECK(expected_improvement_score(point, 0.2, cfg) == doctest::Approx(cur));
  CHECK(expected_improvement_score(point, 0.8, cfg) == doctest::Approx(cur));

  ParamGrid bit({{0.25, 0.75}, {kInf}, {0.0}, {0.5}});
  const double after_plus = expected_query_size(update(bit, 0.5, Label::kTarget), 0.25, cfg);
  const double after_minus = expected_query_size(update(bit, 0.5, Label::kOther), 0.75, cfg);
  CHECK(expected_improvement_score(bit, 0.5, cfg) ==
        doctest::Approx(0.5 * after_plus + 0.5 * after_minus));

  ParamGrid flat({{0.25, 0.75}, {5.0}, {0.5}, {0.5}});
  CHECK(expected_improvement_score(flat, 0.5, cfg) ==
        doctest::Approx(expected_query_size(flat, 0.5, cfg)));
}

TEST_CASE("shrink_spec") {
  const GridSpec spec;
  CHECK(shrink_spec(spec, {0.3, 50.0, 0.0}, 1.0) == spec);

  const GridSpec mid = shrink_spec(spec, {0.5, 100.0, 0.0}, 10.0);
  CHECK(mid.z_min == doctest::Approx(0.45));
  CHECK(mid.z_max == doctest::Approx(0.55));
  CHECK(mid.log10_s_min == doctest::Approx(1.9));
  CHECK(mid.log10_s_max == doctest::Approx(2.1));
  CHECK(mid.n_z == spec.n_z);
  CHECK(mid.n_s == spec.n_s);
  CHECK(mid.n_x == spec.n_x);

  const GridSpec edge = shrink_spec(spec, {0.01, 5.0, 0.0}, 10.0);
  CHECK(edge.z_min == doctest::Approx(0.0));
  CHECK(edge.z_max == doctest::Approx(0.1));
  CHECK(edge.log10_s_min == doctest::Approx(1.0));
  CHECK(edge.log10_s_max == doctest::Approx(1.2));
}

TEST_CASE("posterior consistency on self-generated data") {
  GridSpec spec;
  spec.n_z = 51;
  spec.n_s = 11;
  spec.n_x = 51;
  int good = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 eng(seed);
    ParamGrid g = init_uniform(spec);
    const std::size_t iz = 10 + seed % 30, is = seed % 5, ie = seed % 2;
    const SigmoidParams truth{g.axes().z[iz], g.axes().s[is], g.axes().eps[ie]};
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    for (int i = 0; i < 1000; ++i) {
      const double x = std::clamp(truth.z + jitter(eng), 0.0, 1.0);
      const bool plus = std::uniform_real_distribution<double>(0, 1)(eng) < sigmoid_prob(truth, x);
      g.observe(x, plus ? Label::kTarget : Label::kOther);
    }
    const auto zm = g.z_marginal();
    double near = 0.0;
    for (std::size_t k = iz - 2; k <= iz + 2; ++k) near += zm[k];
    good += near >= 0.95;
  }
  CHECK(good >= 90);
}

TEST_CASE("MI sweep: serial and parallel agree, visit count is the full product") {
  GridSpec spec;
  ParamGrid g = init_uniform(spec);
  std::mt19937_64 eng(8);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 25; ++i) g.observe(U(eng), U(eng) < 0.5 ? Label::kTarget : Label::kOther);
  const LikelihoodTable table(g.axes());
  const auto w = g.masses();
  const auto active = active_cells(w, 0.0);
  std::vector<double> a(table.candidates()), b(table.candidates());
  SweepStats sa, sb;
  mi_sweep_serial(table, w, active, a, &sa);
  mi_sweep(table, w, active, b, &sb);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    CHECK(a[k] == doctest::Approx(mutual_information(g, g.axes().x[k])).epsilon(1e-9));
  }
  CHECK(sa.cell_visits == active.size() * table.candidates());
  CHECK(sb.cell_visits == sa.cell_visits);

  const ParamGrid fresh = init_uniform(spec);
  const auto wf = fresh.masses();
  SweepStats sf;
  mi_sweep(table, wf, active_cells(wf, 0.0), b, &sf);
  CHECK(sf.cell_visits == static_cast<std::uint64_t>(101 * 31 * 2) * 101);
}

TEST_CASE("active_cells pruning") {
  const std::vector<double> w{0.5, 0.0, 1e-6, 0.2, 0.3};
  CHECK(active_cells(w, 0.0) == std::vector<std::size_t>{0, 2, 3, 4});
  CHECK(active_cells(w, 1e-3) == std::vector<std::size_t>{0, 3, 4});
}
