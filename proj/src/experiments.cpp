#include "psj/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "psj/metrics.hpp"
#include "psj/trace_io.hpp"

namespace psj {
namespace {

constexpr std::uint64_t kTagOracle = 0x0dac1e;
constexpr std::uint64_t kTagAttack = 0xa77ac;

std::string fmt(double v) { return format_double(v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

PreparedInstances prepare_instances(const Scenario& scenario, int first, int count) {
  if (count < 1) throw InvalidInput("instance count must be >= 1");
  PreparedInstances prep;
  for (int i = first; i < first + count; ++i) {
    prep.instances.push_back(scenario.instance(i));
    prep.starts.push_back(scenario.start_point(prep.instances.back()));
  }
  return prep;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t oracle_seed(std::uint64_t seed, int instance) {
  return mix_seed(mix_seed(seed, kTagOracle), static_cast<std::uint64_t>(instance));
}

std::uint64_t attack_seed(std::uint64_t seed, int instance) {
  return mix_seed(mix_seed(seed, kTagAttack), static_cast<std::uint64_t>(instance));
}

std::vector<AttackTrace> run_batch(const ExperimentSpec& spec, const Scenario& scenario,
                                   const PreparedInstances& prep, const AttackConfig& cfg,
                                   NoiseModel noise, double level) {
  const int n = static_cast<int>(prep.instances.size());
  std::vector<AttackTrace> out(static_cast<std::size_t>(n));
  parallel_for(n, spec.workers, [&](int i) {
    const Instance& inst = prep.instances[static_cast<std::size_t>(i)];
    OraclePtr oracle = scenario.oracle(inst, noise, level, oracle_seed(spec.seed, inst.id));
    out[static_cast<std::size_t>(i)] =
        run_attack(*oracle, inst.x_star, prep.starts[static_cast<std::size_t>(i)], cfg,
                   attack_seed(spec.seed, inst.id));
  });
  return out;
}

double final_distance(const AttackTrace& trace) {
  if (trace.records.empty()) return kInf;
  const auto& r = trace.records.back();
  return r.border_distance ? *r.border_distance : r.raw_distance;
}

double median_final_distance(const std::vector<AttackTrace>& traces) {
  std::vector<double> v;
  for (const auto& t : traces) v.push_back(final_distance(t));
  return percentile(v, 50.0);
}

double median_total_queries(const std::vector<AttackTrace>& traces) {
  std::vector<double> v;
  for (const auto& t : traces) v.push_back(static_cast<double>(t.total_queries));
  return percentile(v, 50.0);
}

std::string render_csv(const CsvTable& table, const std::string& command,
                       const std::string& config_hash) {
  std::string out = std::string("# psj ") + kEngineVersion + " command=" + command +
                    " config=" + config_hash + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ",";
      out += csv_field(cells[i]);
    }
    out += "\n";
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------------------

FlipTableResult flip_table(const ExperimentSpec& spec, const std::vector<double>& nus,
                           const std::vector<Variant>& variants) {
  for (double nu : nus)
    if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("flip probability must lie in [0, 1]");
  const Scenario scenario(spec.scenario);
  const PreparedInstances prep = prepare_instances(scenario, spec.first_instance, spec.instances);
  FlipTableResult res;
  for (double nu : nus) {
    const std::size_t first_row = res.rows.size();
    for (Variant v : variants) {
      AttackConfig cfg = spec.attack;
      cfg.variant = v;
      auto traces = run_batch(spec, scenario, prep, cfg, NoiseModel::kFlip, nu);
      std::vector<double> d;
      FlipRow row;
      row.nu = nu;
      row.variant = v;
      for (const auto& t : traces) {
        d.push_back(final_distance(t));
        row.non_converged += t.non_converged ? 1 : 0;
      }
      const auto p = percentiles(d);
      row.p40 = p[0];
      row.median = p[1];
      row.p60 = p[2];
      row.median_queries = median_total_queries(traces);
      res.rows.push_back(row);
      res.traces.push_back(std::move(traces));
    }
    double ref = res.rows[first_row].median_queries;
    for (std::size_t i = first_row; i < res.rows.size(); ++i)
      if (res.rows[i].variant == Variant::kPsj) ref = res.rows[i].median_queries;
    for (std::size_t i = first_row; i < res.rows.size(); ++i) res.rows[i].query_ratio = res.rows[i].median_queries / ref;
  }
  return res;
}

CsvTable FlipTableResult::csv() const {
  CsvTable t;
  t.header = {"nu", "variant", "median_distance", "p40", "p60", "median_queries", "query_ratio", "non_converged"};
  for (const auto& r : rows)
    t.rows.push_back({fmt(r.nu), to_string(r.variant), fmt(r.median), fmt(r.p40), fmt(r.p60),
                      fmt(r.median_queries), fmt(r.query_ratio), std::to_string(r.non_converged)});
  return t;
}

// ---------------------------------------------------------------------------

std::vector<double> logspace(double lo, double hi, int num) {
  std::vector<double> out;
  for (int i = 0; i < num; ++i)
    out.push_back(std::pow(10.0, num == 1 ? lo : lo + (hi - lo) * i / (num - 1)));
  return out;
}

CosFitOptions default_cos_fit_options() {
  CosFitOptions o;
  o.n_grid = logspace(1, 4, 13);
  o.d_grid = logspace(1, 4, 13);
  o.s_grid = logspace(-2, 2, 17);
  o.s_grid.push_back(kInf);
  return o;
}

std::vector<CosFitRow> cos_fit(const CosFitOptions& opts, std::uint64_t seed) {
  if (opts.n_grid.empty() || opts.d_grid.empty() || opts.s_grid.empty())
    throw InvalidInput("cos-fit grids must be non-empty");
  std::vector<CosFitRow> rows;
  std::uint64_t tag = 0;
  for (std::size_t is = 0; is < opts.s_grid.size(); ++is) {
    const double s = opts.s_grid[is];
    const double a_mc = alpha_mc(opts.delta, s, opts.beta, 0.0, opts.alpha_samples, mix_seed(seed, 1000 + is)).mean;
    const double a_cf = alpha_closed_form(opts.delta, s, opts.beta, 0.0);
    for (double nv : opts.n_grid)
      for (double dv : opts.d_grid) {
        CosFitRow r;
        r.n = static_cast<int>(std::lround(nv));
        r.d = std::max(2, static_cast<int>(std::lround(dv)));
        r.s = s;
        r.s_inf = std::isinf(s);
        r.alpha_closed = a_cf;
        r.alpha_mc = a_mc;
        r.analytic = expected_cos(r.n, r.d, a_mc);
        r.analytic_closed = expected_cos(r.n, r.d, a_cf);
        const McEstimate m = mean_random_cos(r.n, r.d, s, opts.delta, opts.beta, 0.0, opts.draws, mix_seed(seed, tag++));
        r.mc_mean = m.mean;
        r.mc_se = m.std_error;
        rows.push_back(r);
      }
  }
  return rows;
}

CsvTable cos_fit_csv(const std::vector<CosFitRow>& rows) {
  CsvTable t;
  t.header = {"n", "d", "s", "s_inf", "alpha_closed", "alpha_mc", "analytic", "analytic_closed", "mc_mean", "mc_se"};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.n), std::to_string(r.d), fmt(r.s), r.s_inf ? "1" : "0",
                      fmt(r.alpha_closed), fmt(r.alpha_mc), fmt(r.analytic), fmt(r.analytic_closed),
                      fmt(r.mc_mean), fmt(r.mc_se)});
  return t;
}

// ---------------------------------------------------------------------------

std::vector<SweepRow> per_iteration(const std::vector<AttackTrace>& traces, Variant v, double level) {
  std::vector<SweepRow> rows;
  std::size_t iters = 0;
  for (const auto& t : traces) iters = std::max(iters, t.records.size());
  for (std::size_t i = 0; i < iters; ++i) {
    std::vector<double> d;
    std::vector<double> q;
    for (const auto& t : traces) {
      // Early-terminated traces hold their last point.
      if (t.records.empty()) continue;
      const auto& r = t.records[std::min(i, t.records.size() - 1)];
      d.push_back(r.border_distance ? *r.border_distance : r.raw_distance);
      q.push_back(static_cast<double>(r.queries_cum));
    }
    if (d.empty()) continue;
    const auto p = percentiles(d);
    rows.push_back(SweepRow{v, level, static_cast<int>(i) + 1, p[1], p[0], p[2], percentile(q, 50.0)});
  }
  return rows;
}

NoiseSweepResult noise_sweep(const ExperimentSpec& spec, NoiseModel noise,
                             const std::vector<double>& levels,
                             const std::vector<Variant>& variants) {
  const Scenario scenario(spec.scenario);
  const PreparedInstances prep = prepare_instances(scenario, spec.first_instance, spec.instances);
  NoiseSweepResult res;
  res.noise = noise;
  for (double level : levels)
    for (Variant v : variants) {
      AttackConfig cfg = spec.attack;
      cfg.variant = v;
      const auto traces = run_batch(spec, scenario, prep, cfg, noise, level);
      for (auto& row : per_iteration(traces, v, level)) res.rows.push_back(row);
    }
  return res;
}

CsvTable NoiseSweepResult::csv() const {
  CsvTable t;
  t.header = {"instance_id", "variant", "noise_model", "noise_level", "iteration",
              "median_distance", "p40", "p60", "queries_cum"};
  for (const auto& r : rows)
    t.rows.push_back({"all", to_string(r.variant), to_string(noise), fmt(r.level), std::to_string(r.iteration),
                      fmt(r.median), fmt(r.p40), fmt(r.p60), fmt(r.queries_cum)});
  return t;
}

// ---------------------------------------------------------------------------

std::vector<HsjrRow> hsjr_ratio(const ExperimentSpec& spec, const std::vector<double>& levels, int r_max) {
  if (r_max < 1 || r_max % 2 == 0) throw ConfigError("r cap must be odd");
  const Scenario scenario(spec.scenario);
  const PreparedInstances prep = prepare_instances(scenario, spec.first_instance, spec.instances);
  std::vector<HsjrRow> rows;
  for (double level : levels) {
    AttackConfig psj = spec.attack;
    psj.variant = Variant::kPsj;
    const auto psj_traces = run_batch(spec, scenario, prep, psj, NoiseModel::kTemperature, level);
    const double d_psj = median_final_distance(psj_traces);
    const double q_psj = median_total_queries(psj_traces);

    for (bool enlarged : {false, true}) {
      std::map<int, std::pair<double, double>> cache;  // r -> (median distance, median queries)
      auto eval = [&](int r) {
        auto it = cache.find(r);
        if (it != cache.end()) return it->second;
        AttackConfig cfg = spec.attack;
        cfg.variant = Variant::kHsjRepeat;
        cfg.hsj_repeats = r;
        cfg.hsj_enlarged_radius = enlarged;
        const auto tr = run_batch(spec, scenario, prep, cfg, NoiseModel::kTemperature, level);
        return cache[r] = {median_final_distance(tr), median_total_queries(tr)};
      };
      // Bracket with roughly doubling odd r, then bisect over odd values.
      int fail = -1;
      int hit = -1;
      for (int r = 1;; r = std::min(r_max, 2 * r + 1)) {
        if (eval(r).first <= d_psj) {
          hit = r;
          break;
        }
        fail = r;
        if (r == r_max) break;
      }
      HsjrRow row;
      row.level = level;
      row.enlarged_radius = enlarged;
      row.psj_median = d_psj;
      row.psj_queries = q_psj;
      if (hit < 0) {
        row.censored = true;
        row.r = r_max;
      } else {
        while (fail >= 0 && hit - fail > 2) {
          int mid = (fail + hit) / 2;
          if (mid % 2 == 0) ++mid;
          if (mid >= hit) break;
          if (eval(mid).first <= d_psj) {
            hit = mid;
          } else {
            fail = mid;
          }
        }
        row.r = hit;
      }
      const auto [d, q] = eval(row.r);
      row.hsjr_median = d;
      row.hsjr_queries = q;
      row.ratio = q / q_psj;
      rows.push_back(row);
    }
  }
  return rows;
}

CsvTable hsjr_csv(const std::vector<HsjrRow>& rows) {
  CsvTable t;
  t.header = {"level", "radius", "psj_median", "psj_queries", "r", "censored", "hsjr_median", "hsjr_queries", "ratio"};
  for (const auto& r : rows)
    t.rows.push_back({fmt(r.level), r.enlarged_radius ? "enlarged" : "original", fmt(r.psj_median),
                      fmt(r.psj_queries), std::to_string(r.r), r.censored ? "1" : "0", fmt(r.hsjr_median),
                      fmt(r.hsjr_queries), fmt(r.ratio)});
  return t;
}

// ---------------------------------------------------------------------------

std::vector<ProfileRow> sigmoid_profile(const ExperimentSpec& spec, const std::vector<int>& iterations,
                                        int points) {
  if (points < 2) throw InvalidInput("profile needs at least 2 points");
  const Scenario scenario(spec.scenario);
  const PreparedInstances prep = prepare_instances(scenario, spec.first_instance, 1);
  const Instance& inst = prep.instances[0];
  const double level = spec.levels.empty() ? 0.0 : spec.levels.front();
  OraclePtr oracle = scenario.oracle(inst, spec.noise, level, oracle_seed(spec.seed, inst.id));
  if (!oracle->has_probe()) throw ProbeAbsent("sigmoid profile needs an oracle with a probe");
  AttackConfig cfg = spec.attack;
  cfg.variant = Variant::kPsj;
  cfg.iterations = std::max(cfg.iterations, *std::max_element(iterations.begin(), iterations.end()));
  const AttackTrace trace = run_attack(*oracle, inst.x_star, prep.starts[0], cfg, attack_seed(spec.seed, inst.id));
  std::vector<ProfileRow> rows;
  for (int it : iterations) {
    if (it < 1 || it > static_cast<int>(trace.records.size())) continue;
    const auto& rec = trace.records[static_cast<std::size_t>(it - 1)];
    for (int i = 0; i < points; ++i) {
      ProfileRow row;
      row.iteration = it;
      row.index = i;
      row.u = static_cast<double>(i) / (points - 1);
      row.probe = oracle->probe(lerp(rec.segment_start, inst.x_star, row.u));
      row.fitted = sigmoid_prob(rec.estimates, row.u);
      rows.push_back(row);
    }
  }
  return rows;
}

CsvTable profile_csv(const std::vector<ProfileRow>& rows) {
  CsvTable t;
  t.header = {"iteration", "index", "u", "probe", "fitted"};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.iteration), std::to_string(r.index), fmt(r.u), fmt(r.probe), fmt(r.fitted)});
  return t;
}

// ---------------------------------------------------------------------------

std::vector<AccelRow> accel_bench(const ExperimentSpec& spec, int m) {
  if (m < 1) throw ConfigError("multi-query count m must be >= 1");
  const Scenario scenario(spec.scenario);
  const PreparedInstances prep = prepare_instances(scenario, spec.first_instance, spec.instances);
  const double level = spec.levels.empty() ? 0.0 : spec.levels.front();
  struct Setup {
    std::string name;
    int m;
    bool shrink;
  };
  const std::vector<Setup> setups = {{"baseline", 1, false}, {"multi-query", m, false},
                                     {"shrink-priors", 1, true}, {"both", m, true}};
  std::vector<AccelRow> rows;
  for (const auto& s : setups) {
    AttackConfig cfg = spec.attack;
    cfg.variant = Variant::kPsj;
    cfg.bin.m = s.m;
    cfg.shrink_priors = s.shrink;
    const auto traces = run_batch(spec, scenario, prep, cfg, spec.noise, level);
    std::vector<double> bt, bq, gq, fd, tq;
    for (const auto& t : traces) {
      double time = 0.0;
      double qb = 0.0;
      double qg = 0.0;
      for (const auto& r : t.records) {
        time += r.wall.bin_search;
        qb += static_cast<double>(r.queries.bin_search);
        qg += static_cast<double>(r.queries.gradient);
      }
      bt.push_back(time);
      bq.push_back(qb);
      gq.push_back(qg);
      fd.push_back(final_distance(t));
      tq.push_back(static_cast<double>(t.total_queries));
    }
    rows.push_back(AccelRow{s.name, s.m, s.shrink, percentile(bt, 50), percentile(bq, 50), percentile(gq, 50),
                            percentile(fd, 50), percentile(tq, 50)});
  }
  return rows;
}

CsvTable accel_csv(const std::vector<AccelRow>& rows) {
  CsvTable t;
  t.header = {"config", "m", "shrink_priors", "bin_search_seconds", "bin_search_queries", "gradient_queries",
              "final_distance", "total_queries"};
  for (const auto& r : rows)
    t.rows.push_back({r.name, std::to_string(r.m), r.shrink ? "1" : "0", fmt(r.bin_time), fmt(r.bin_queries),
                      fmt(r.grad_queries), fmt(r.final_distance), fmt(r.total_queries)});
  return t;
}

}  // namespace psj
