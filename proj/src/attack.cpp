#include "psj/attack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "psj/metrics.hpp"

namespace psj {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Stream tags for the per-iteration seeds.
constexpr std::uint64_t kTagBin = 0x62696e;
constexpr std::uint64_t kTagGrad = 0x67726164;
constexpr std::uint64_t kTagInit = 0x696e6974;

std::uint64_t iter_seed(std::uint64_t seed, std::uint64_t tag, int t) {
  return mix_seed(mix_seed(seed, tag), static_cast<std::uint64_t>(t));
}

double z_mass_near(const ParamGrid& grid, double z_hat) {
  const auto& z = grid.axes().z;
  const double bin = z.size() > 1 ? (z.back() - z.front()) / static_cast<double>(z.size() - 1) : 0.0;
  const auto zm = grid.z_marginal();
  double mass = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (std::abs(z[i] - z_hat) <= 2.0 * bin + 1e-12) mass += zm[i];
  return mass;
}

void evaluate(const Oracle& oracle, std::span<const double> x_star, const AttackConfig& cfg,
              IterationRecord& rec) {
  rec.raw_distance = scaled_distance(x_star, rec.point);
  if (!oracle.has_probe() || rec.raw_distance == 0.0) return;
  BorderSearch search;
  search.u_limit = std::max(search.u_max, cfg.border_u_limit);
  const BorderDistance bd = border_distance(oracle, x_star, rec.point, search);
  rec.border_distance = bd.value;
  rec.crossing_found = bd.crossing_found;
}

AttackTrace start_trace(const Oracle& oracle, std::span<const double> x_star,
                        std::span<const double> x0_adv, const AttackConfig& cfg,
                        std::uint64_t seed) {
  cfg.validate();
  if (static_cast<int>(x_star.size()) != oracle.dim() || x0_adv.size() != x_star.size())
    throw InvalidInput("attack: point dimension does not match the oracle");
  if (distance(x_star, x0_adv) == 0.0) throw InvalidInput("attack: start point equals x_star");
  AttackTrace trace;
  trace.config = cfg;
  trace.seed = seed;
  trace.probe_available = oracle.has_probe();
  trace.final_point.assign(x0_adv.begin(), x0_adv.end());
  return trace;
}

void finish_trace(AttackTrace& trace) {
  if (trace.records.empty()) {
    trace.non_converged = true;
    return;
  }
  const auto& last = trace.records.back();
  trace.final_point = last.point;
  trace.final_estimates = last.estimates;
  trace.total_queries = last.queries_cum;
  if (trace.config.variant == Variant::kHsj || trace.config.variant == Variant::kHsjRepeat) {
    trace.non_converged = trace.non_converged || last.gp_capped;
  } else {
    trace.non_converged = trace.non_converged || last.n_capped || last.bin_stop == "cap" ||
                          last.z_mass_near < 0.5;
  }
}

template <typename Body>
void guarded(AttackTrace& trace, Body&& body) {
  try {
    body();
  } catch (const TransportError& e) {
    trace.transport_error = e.what();
    trace.early_termination = true;
    trace.termination_reason = std::string("transport error: ") + e.what();
  } catch (const DegenerateEstimate& e) {
    trace.early_termination = true;
    trace.termination_reason = e.what();
  } catch (const DegeneratePosterior& e) {
    trace.early_termination = true;
    trace.termination_reason = e.what();
  }
}

AttackTrace psj_loop(Oracle& oracle, std::span<const double> x_star,
                     std::span<const double> x0_adv, const AttackConfig& cfg, std::uint64_t seed,
                     bool true_gradient) {
  AttackTrace trace = start_trace(oracle, x_star, x0_adv, cfg, seed);
  if (true_gradient && !oracle.has_probe())
    throw ProbeAbsent("PSJ-TrueGrad needs an oracle with a probability probe");
  const int d = oracle.dim();
  const std::uint64_t start = oracle.query_count();

  guarded(trace, [&] {
    PointVec x_tilde(x0_adv.begin(), x0_adv.end());
    GridSpec spec = cfg.grid;
    std::unique_ptr<LikelihoodTable> table;
    GridSpec table_spec;
    double prev_len = 0.0;
    double prev_center_dist = 0.0;
    SigmoidParams prev_est{};

    for (int t = 1; t <= cfg.iterations; ++t) {
      IterationRecord rec;
      rec.t = t;
      rec.segment_start = x_tilde;
      const double len = distance(x_tilde, x_star);
      if (len == 0.0) {
        trace.early_termination = true;
        trace.termination_reason = "search segment collapsed onto x_star";
        return;
      }
      if (cfg.shrink_priors && t > 1) {
        // Re-express the previous estimates on the new line: the boundary
        // stays near distance |x_{t-1} - x*| from x*, and s scales with length.
        SigmoidParams center;
        center.z = std::clamp(1.0 - prev_center_dist / len, 0.0, 1.0);
        center.s = prev_est.s * len / prev_len;
        spec = shrink_spec(cfg.grid, center, prior_shrink_factor(t));
      }
      if (!table || !(table_spec == spec)) {
        table = std::make_unique<LikelihoodTable>(GridAxes::from_spec(spec));
        table_spec = spec;
      }

      rec.c_det = deterministic_target_cos(cfg, d, t);
      BinSearchConfig bcfg = cfg.bin;
      bcfg.size.dim = d;
      bcfg.size.beta = 1.0 / cfg.radius_divisor;
      bcfg.size.target_cos = rec.c_det;
      bcfg.seed = iter_seed(seed, kTagBin, t);

      auto t0 = Clock::now();
      BinSearchResult bs = noisy_bin_search(oracle, x_tilde, x_star, ParamGrid(GridAxes::from_spec(spec)),
                                            bcfg, table.get());
      rec.wall.bin_search = seconds_since(t0);
      rec.queries.bin_search = bs.queries;
      rec.estimates = bs.estimates;
      rec.bin_stop = to_string(bs.stop);
      rec.z_mass_near = z_mass_near(bs.posterior, bs.estimates.z);
      rec.point = lerp(x_tilde, x_star, bs.estimates.z);
      rec.n_t = compute_grad_query_size(bs.posterior, bs.estimates.z, bcfg.size, cfg.n_floor);
      rec.n_capped = static_cast<double>(rec.n_t) >= bcfg.size.n_max;

      t0 = Clock::now();
      const std::uint64_t before_grad = oracle.query_count();
      PointVec g;
      if (true_gradient) {
        // A steep sigmoid can be flat to double precision a bin away from
        // its center; widen the step before giving up.
        for (double h = cfg.fd_rel_step * len;; h *= 10.0) {
          try {
            g = probe_gradient(oracle, rec.point, h);
            break;
          } catch (const DegenerateEstimate&) {
            if (h * 10.0 > len) throw;
          }
        }
      } else {
        g = estimate_gradient_gaussian(oracle, rec.point, rec.n_t, len / cfg.radius_divisor,
                                       iter_seed(seed, kTagGrad, t), GradOptions{cfg.grad_batch})
                .direction;
      }
      rec.queries.gradient = static_cast<std::int64_t>(oracle.query_count() - before_grad);
      rec.wall.gradient = seconds_since(t0);

      const double center_dist = distance(rec.point, x_star);
      const double xi = center_dist / std::sqrt(static_cast<double>(t));
      PointVec next = rec.point;
      for (std::size_t j = 0; j < next.size(); ++j) next[j] -= xi * g[j];
      x_tilde = extend_from(x_star, next, cfg.enlarge);

      rec.queries_cum = static_cast<std::int64_t>(oracle.query_count() - start);
      evaluate(oracle, x_star, trace.config, rec);
      prev_len = len;
      prev_center_dist = center_dist;
      prev_est = rec.estimates;
      trace.records.push_back(std::move(rec));
    }
  });
  finish_trace(trace);
  return trace;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kPsj: return "psj";
    case Variant::kHsj: return "hsj";
    case Variant::kHsjRepeat: return "hsj-r";
    case Variant::kPsjTrueGrad: return "psj-truegrad";
  }
  return "psj";
}

Variant parse_variant(const std::string& name) {
  if (name == "psj") return Variant::kPsj;
  if (name == "hsj") return Variant::kHsj;
  if (name == "hsj-r") return Variant::kHsjRepeat;
  if (name == "psj-truegrad") return Variant::kPsjTrueGrad;
  throw ConfigError("unknown variant '" + name + "' (expected psj, hsj, hsj-r, psj-truegrad)");
}

void AttackConfig::validate() const {
  if (iterations < 1) throw InvalidInput("attack: iterations must be >= 1");
  if (!(n0_det >= 1.0)) throw InvalidInput("attack: n0_det must be >= 1");
  if (!(r_mult >= 1.0)) throw InvalidInput("attack: r_mult must be >= 1");
  if (!(enlarge >= 1.0)) throw InvalidInput("attack: enlargement factor must be >= 1");
  if (!(radius_divisor > 0.0)) throw InvalidInput("attack: radius_divisor must be > 0");
  if (!(theta_det >= 0.0)) throw InvalidInput("attack: theta_det must be >= 0");
  if (!(cdet_beta_scale > 0.0)) throw InvalidInput("attack: cdet_beta_scale must be > 0");
  if (n_floor < 1) throw InvalidInput("attack: n_floor must be >= 1");
  if (grad_batch < 1) throw InvalidInput("attack: grad_batch must be >= 1");
  if (gp_max_halvings < 0) throw InvalidInput("attack: gp_max_halvings must be >= 0");
  if (hsj_repeats < 1 || hsj_repeats % 2 == 0) throw InvalidInput("attack: hsj_repeats must be odd");
  if (!(fd_rel_step > 0.0)) throw InvalidInput("attack: fd_rel_step must be > 0");
  if (!(bin.size.n_max >= static_cast<double>(n_floor))) throw InvalidInput("attack: n_max must be >= n_floor");
  grid.validate();
}

double deterministic_target_cos(const AttackConfig& cfg, int dim, int t) {
  const double n = cfg.n0_det * std::sqrt(static_cast<double>(t)) * cfg.r_mult;
  const double beta = cfg.cdet_beta_scale * std::sqrt(static_cast<double>(dim)) / cfg.radius_divisor;
  return expected_cos(n, std::max(dim, 2), alpha_deterministic(cfg.theta_det, beta, 0.0));
}

double prior_shrink_factor(int t) { return static_cast<double>(std::clamp(t, 1, 10)); }

AttackTrace run_psj(Oracle& oracle, std::span<const double> x_star,
                    std::span<const double> x0_adv, const AttackConfig& cfg, std::uint64_t seed) {
  AttackConfig c = cfg;
  c.variant = Variant::kPsj;
  return psj_loop(oracle, x_star, x0_adv, c, seed, false);
}

AttackTrace run_psj_truegrad(Oracle& oracle, std::span<const double> x_star,
                             std::span<const double> x0_adv, const AttackConfig& cfg,
                             std::uint64_t seed) {
  AttackConfig c = cfg;
  c.variant = Variant::kPsjTrueGrad;
  return psj_loop(oracle, x_star, x0_adv, c, seed, true);
}

AttackTrace run_hsj(Oracle& oracle, std::span<const double> x_star,
                    std::span<const double> x0_adv, const AttackConfig& cfg, std::uint64_t seed) {
  AttackConfig c = cfg;
  if (c.variant != Variant::kHsjRepeat) c.variant = Variant::kHsj;
  AttackTrace trace = start_trace(oracle, x_star, x0_adv, c, seed);
  const int d = oracle.dim();
  const double dd = static_cast<double>(d);
  const std::uint64_t start = oracle.query_count();

  guarded(trace, [&] {
    PointVec x_tilde(x0_adv.begin(), x0_adv.end());
    const double theta_rel = std::pow(dd, -1.5);
    for (int t = 1; t <= c.iterations; ++t) {
      IterationRecord rec;
      rec.t = t;
      rec.segment_start = x_tilde;
      rec.c_det = deterministic_target_cos(c, d, t);
      rec.bin_stop = "bisection";

      auto t0 = Clock::now();
      BisectionResult bis = deterministic_bin_search(oracle, x_tilde, x_star, theta_rel, false);
      rec.wall.bin_search = seconds_since(t0);
      rec.queries.bin_search = bis.queries;
      rec.point = std::move(bis.point);
      rec.estimates = SigmoidParams{bis.u, kInf, 0.0};

      const double dist = distance(rec.point, x_star);
      if (dist == 0.0) {
        trace.early_termination = true;
        trace.termination_reason = "bisection collapsed onto x_star";
        return;
      }
      const double delta = c.hsj_enlarged_radius ? std::sqrt(dd) * dist / c.radius_divisor : dist / dd;
      rec.n_t = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::floor(c.n0_det * std::sqrt(static_cast<double>(t)) * c.r_mult)));

      t0 = Clock::now();
      const GradEstimate g = estimate_gradient_sphere(oracle, rec.point, rec.n_t, delta,
                                                      iter_seed(seed, kTagGrad, t),
                                                      GradOptions{c.grad_batch});
      rec.queries.gradient = g.queries;
      rec.wall.gradient = seconds_since(t0);

      t0 = Clock::now();
      const std::uint64_t before_step = oracle.query_count();
      double xi = dist / std::sqrt(static_cast<double>(t));
      bool accepted = false;
      PointVec cand(rec.point.size());
      for (int h = 0; h <= c.gp_max_halvings; ++h) {
        for (std::size_t j = 0; j < cand.size(); ++j) cand[j] = rec.point[j] - xi * g.direction[j];
        if (oracle.query(cand) == Label::kOther) {
          accepted = true;
          break;
        }
        xi *= 0.5;
      }
      rec.gp_capped = !accepted;
      x_tilde = accepted ? cand : rec.point;
      rec.queries.step = static_cast<std::int64_t>(oracle.query_count() - before_step);
      rec.wall.step = seconds_since(t0);

      rec.queries_cum = static_cast<std::int64_t>(oracle.query_count() - start);
      evaluate(oracle, x_star, trace.config, rec);
      trace.records.push_back(std::move(rec));
    }
  });
  finish_trace(trace);
  return trace;
}

AttackTrace run_hsj_repeat(Oracle& oracle, std::span<const double> x_star,
                           std::span<const double> x0_adv, int r, const AttackConfig& cfg,
                           std::uint64_t seed) {
  OraclePtr base(&oracle, [](Oracle*) {});
  RepeatMajorityOracle voted(base, r);
  AttackConfig c = cfg;
  c.variant = Variant::kHsjRepeat;
  c.hsj_repeats = r;
  return run_hsj(voted, x_star, x0_adv, c, seed);
}

AttackTrace run_attack(Oracle& oracle, std::span<const double> x_star,
                       std::span<const double> x0_adv, const AttackConfig& cfg,
                       std::uint64_t seed) {
  switch (cfg.variant) {
    case Variant::kPsj: return run_psj(oracle, x_star, x0_adv, cfg, seed);
    case Variant::kHsj: return run_hsj(oracle, x_star, x0_adv, cfg, seed);
    case Variant::kHsjRepeat: return run_hsj_repeat(oracle, x_star, x0_adv, cfg.hsj_repeats, cfg, seed);
    case Variant::kPsjTrueGrad: return run_psj_truegrad(oracle, x_star, x0_adv, cfg, seed);
  }
  throw InvalidInput("unknown attack variant");
}

PointVec find_initial_adversarial(Oracle& oracle, std::span<const double> x_star,
                                  std::uint64_t seed, const InitSearch& opts) {
  if (opts.votes < 1 || opts.votes % 2 == 0) throw InvalidInput("initial search: votes must be odd");
  if (!(opts.first_radius > 0.0) || !(opts.growth > 1.0) || opts.per_radius < 1)
    throw InvalidInput("initial search: bad radius schedule");
  Engine eng = make_engine(seed, kTagInit);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::uint64_t start = oracle.query_count();
  const auto cost = static_cast<std::int64_t>(oracle.unit_cost()) * opts.votes;
  double radius = opts.first_radius;
  PointVec cand(x_star.size());
  for (;;) {
    for (int j = 0; j < opts.per_radius; ++j) {
      if (static_cast<std::int64_t>(oracle.query_count() - start) + cost > opts.budget)
        throw NoAdversarialFound("no adversarial start found within " + std::to_string(opts.budget) +
                                 " queries");
      for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = x_star[i] + radius * normal(eng);
      int other = 0;
      for (int v = 0; v < opts.votes; ++v)
        if (oracle.query(cand) == Label::kOther) ++other;
      if (2 * other > opts.votes) return cand;
    }
    radius *= opts.growth;
  }
}

}  // namespace psj
