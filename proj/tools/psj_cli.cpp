// psj: command-line front end for the attack engine and its experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <unistd.h>

#include <CLI11.hpp>

#include "psj/config.hpp"
#include "psj/experiments.hpp"
#include "psj/external_oracle.hpp"
#include "psj/trace_io.hpp"

namespace {

using namespace psj;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> instances;
  std::string out = ".";
  std::optional<int> workers;
  std::string variant;
  std::string noise;
  std::vector<double> levels;
  std::string oracle;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--instances", f.instances, "number of attacked inputs");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--workers", f.workers, "parallel attack instances (0 = all cores)");
  cmd->add_option("--variant", f.variant, "psj | hsj | hsj-r | psj-truegrad");
  cmd->add_option("--noise", f.noise, "none | flip | temperature | input-noise");
  cmd->add_option("--level", f.levels, "noise level(s)")->expected(1, -1);
  cmd->add_option("--oracle", f.oracle, "planar | linear | external:ADDR");
}

ExperimentSpec resolve(const CommonFlags& f) {
  ExperimentSpec spec = f.config.empty() ? ExperimentSpec{} : load_config(f.config);
  if (f.seed) spec.seed = *f.seed;
  if (f.instances) spec.instances = *f.instances;
  if (f.workers) spec.workers = *f.workers;
  if (!f.variant.empty()) spec.attack.variant = parse_variant(f.variant);
  if (!f.noise.empty()) spec.noise = parse_noise_model(f.noise);
  if (!f.levels.empty()) spec.levels = f.levels;
  if (!f.oracle.empty()) spec.scenario.oracle = f.oracle;
  if (spec.instances < 1) throw ConfigError("instances must be >= 1");
  spec.attack.validate();
  std::filesystem::create_directories(f.out);
  return spec;
}

std::vector<Variant> parse_variants(const std::vector<std::string>& names) {
  std::vector<Variant> out;
  for (const auto& n : names) out.push_back(parse_variant(n));
  return out;
}

std::string hash_of(const ExperimentSpec& spec) { return fnv1a_hex(to_config_text(spec)); }

void emit(const std::string& dir, const std::string& name, const CsvTable& table,
          const std::string& command, const ExperimentSpec& spec) {
  const std::string path = (std::filesystem::path(dir) / name).string();
  write_file(path, render_csv(table, command, hash_of(spec)));
  std::cout << "wrote " << path << "\n";
}

int cmd_attack(const CommonFlags& f) {
  const ExperimentSpec spec = resolve(f);
  const Scenario scenario(spec.scenario);
  const double level = spec.levels.empty() ? 0.0 : spec.levels.front();
  CsvTable summary;
  summary.header = {"instance_id", "variant", "noise_model", "noise_level", "iteration",
                    "median_distance", "p40", "p60", "queries_cum"};
  bool transport_failed = false;
  for (int id = spec.first_instance; id < spec.first_instance + spec.instances; ++id) {
    const Instance inst = scenario.instance(id);
    const PointVec start = scenario.start_point(inst);
    OraclePtr oracle = scenario.oracle(inst, spec.noise, level, oracle_seed(spec.seed, id));
    const AttackTrace trace =
        run_attack(*oracle, inst.x_star, start, spec.attack, attack_seed(spec.seed, id));
    const std::string prefix =
        (std::filesystem::path(f.out) / ("attack_" + to_string(spec.attack.variant) + "_i" + std::to_string(id)))
            .string();
    write_trace(prefix, trace, spec);
    std::cout << "wrote " << prefix << ".jsonl (" << trace.records.size() << " records)\n";
    for (const auto& row : per_iteration({trace}, spec.attack.variant, level))
      summary.rows.push_back({std::to_string(id), to_string(row.variant), to_string(spec.noise),
                              format_double(level), std::to_string(row.iteration), format_double(row.median),
                              format_double(row.p40), format_double(row.p60), format_double(row.queries_cum)});
    if (trace.transport_error) {
      std::cerr << "psj: oracle transport error: " << *trace.transport_error << "\n";
      transport_failed = true;
      break;
    }
  }
  emit(f.out, "summary.csv", summary, "attack", spec);
  return transport_failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PopSkipJump decision-based attack engine"};
  app.require_subcommand(1);

  CommonFlags attack_f, flip_f, cos_f, sweep_f, hsjr_f, profile_f, accel_f, serve_f;
  std::vector<std::string> flip_variants{"psj", "hsj", "hsj-r"};
  std::vector<std::string> sweep_variants{"psj", "hsj"};
  std::int64_t draws = 1000;
  std::int64_t alpha_samples = 1000000;
  bool cos_quick = false;
  int r_max = 101;
  std::vector<int> profile_iters{1, 8, 32};
  int profile_points = 200;
  int accel_m = 5;

  auto* attack = app.add_subcommand("attack", "run one attack variant per instance and write traces");
  add_common(attack, attack_f);

  auto* flip = app.add_subcommand("flip-table", "median border distance and query ratios under flip noise");
  add_common(flip, flip_f);
  flip->add_option("--variants", flip_variants, "variants to compare")->expected(1, -1);

  auto* cos = app.add_subcommand("cos-fit", "analytic vs Monte-Carlo expected cosine");
  add_common(cos, cos_f);
  cos->add_option("--draws", draws, "random_cos_draw samples per tuple");
  cos->add_option("--alpha-samples", alpha_samples, "Monte-Carlo samples for alpha");
  cos->add_flag("--quick", cos_quick, "n, d in {10, 100, 1000} only");

  auto* sweep = app.add_subcommand("noise-sweep", "per-iteration border distance across noise levels");
  add_common(sweep, sweep_f);
  sweep->add_option("--variants", sweep_variants, "variants to compare")->expected(1, -1);

  auto* hsjr = app.add_subcommand("hsjr-ratio", "query ratio of HSJ with repeated queries to PSJ");
  add_common(hsjr, hsjr_f);
  hsjr->add_option("--r-max", r_max, "largest odd repetition count tried");

  auto* profile = app.add_subcommand("sigmoid-profile", "probe along PSJ's search segments");
  add_common(profile, profile_f);
  profile->add_option("--iterations", profile_iters, "iterations to dump")->expected(1, -1);
  profile->add_option("--points", profile_points, "points per segment");

  auto* accel = app.add_subcommand("accel-bench", "bin-search acceleration tricks");
  add_common(accel, accel_f);
  accel->add_option("--m", accel_m, "queries per acquisition step for the multi-query trick");

  auto* serve = app.add_subcommand("serve", "serve instance 0's oracle over the line protocol on stdin/stdout");
  add_common(serve, serve_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*attack) return cmd_attack(attack_f);
    if (*flip) {
      ExperimentSpec spec = resolve(flip_f);
      if (flip_f.levels.empty()) spec.levels = {0.0, 0.05, 0.10};
      spec.noise = NoiseModel::kFlip;
      const auto res = flip_table(spec, spec.levels, parse_variants(flip_variants));
      emit(flip_f.out, "flip_table.csv", res.csv(), "flip-table", spec);
    } else if (*cos) {
      const ExperimentSpec spec = resolve(cos_f);
      CosFitOptions opts = default_cos_fit_options();
      if (cos_quick) opts.n_grid = opts.d_grid = {10, 100, 1000};
      opts.draws = draws;
      opts.alpha_samples = alpha_samples;
      emit(cos_f.out, "cos_fit.csv", cos_fit_csv(cos_fit(opts, spec.seed)), "cos-fit", spec);
    } else if (*sweep) {
      const ExperimentSpec spec = resolve(sweep_f);
      const auto res = noise_sweep(spec, spec.noise, spec.levels, parse_variants(sweep_variants));
      emit(sweep_f.out, "noise_sweep.csv", res.csv(), "noise-sweep", spec);
    } else if (*hsjr) {
      ExperimentSpec spec = resolve(hsjr_f);
      spec.noise = NoiseModel::kTemperature;
      emit(hsjr_f.out, "hsjr_ratio.csv", hsjr_csv(hsjr_ratio(spec, spec.levels, r_max)), "hsjr-ratio", spec);
    } else if (*profile) {
      const ExperimentSpec spec = resolve(profile_f);
      emit(profile_f.out, "sigmoid_profile.csv", profile_csv(sigmoid_profile(spec, profile_iters, profile_points)),
           "sigmoid-profile", spec);
    } else if (*accel) {
      const ExperimentSpec spec = resolve(accel_f);
      emit(accel_f.out, "accel_bench.csv", accel_csv(accel_bench(spec, accel_m)), "accel-bench", spec);
    } else if (*serve) {
      const ExperimentSpec spec = resolve(serve_f);
      const Scenario scenario(spec.scenario);
      const Instance inst = scenario.instance(spec.first_instance);
      OraclePtr oracle = scenario.oracle(inst, spec.noise, spec.levels.empty() ? 0.0 : spec.levels.front(),
                                         oracle_seed(spec.seed, inst.id));
      LineChannel channel(STDIN_FILENO, STDOUT_FILENO, -1, -1);
      serve_oracle(*oracle, channel);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "psj: config error: " << e.what() << "\n";
    return 2;
  } catch (const TransportError& e) {
    std::cerr << "psj: oracle transport error: " << e.what();
    if (!e.raw_line().empty()) std::cerr << " (raw: " << e.raw_line() << ")";
    std::cerr << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "psj: error: " << e.what() << "\n";
    return 1;
  }
}
