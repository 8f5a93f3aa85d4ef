#pragma once

// Experiment drivers behind the CLI commands. Each returns its rows so tests
// can inspect them; write_csv renders them with a provenance line.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "psj/attack.hpp"
#include "psj/config.hpp"
#include "psj/scenario.hpp"

namespace psj {

/// Instances plus their start points, prepared once and shared by every
/// variant and noise level.
struct PreparedInstances {
  std::vector<Instance> instances;
  std::vector<PointVec> starts;
};

PreparedInstances prepare_instances(const Scenario& scenario, int first, int count);

/// Runs fn(0..n-1) on a pool of `workers` threads (0 = hardware
/// concurrency). The first exception is rethrown after all workers stop.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

std::uint64_t oracle_seed(std::uint64_t seed, int instance);
std::uint64_t attack_seed(std::uint64_t seed, int instance);

/// One attack per prepared instance; traces come back in instance order.
std::vector<AttackTrace> run_batch(const ExperimentSpec& spec, const Scenario& scenario,
                                   const PreparedInstances& prep, const AttackConfig& cfg,
                                   NoiseModel noise, double level);

/// Border distance of the last record (raw distance without a probe).
double final_distance(const AttackTrace& trace);
double median_final_distance(const std::vector<AttackTrace>& traces);
double median_total_queries(const std::vector<AttackTrace>& traces);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// "# psj <version> command=<cmd> config=<hash>" then the header and rows.
std::string render_csv(const CsvTable& table, const std::string& command,
                       const std::string& config_hash);
void write_file(const std::string& path, const std::string& text);

// ---------------------------------------------------------------------------

struct FlipRow {
  double nu = 0.0;
  Variant variant = Variant::kPsj;
  double median = 0.0;
  double p40 = 0.0;
  double p60 = 0.0;
  double median_queries = 0.0;
  double query_ratio = 0.0;  // median queries / PSJ's at the same nu
  int non_converged = 0;
};

struct FlipTableResult {
  std::vector<FlipRow> rows;
  std::vector<std::vector<AttackTrace>> traces;  // parallel to rows
  CsvTable csv() const;
};

/// Flip noise over the spec's scenario for every (nu, variant).
FlipTableResult flip_table(const ExperimentSpec& spec, const std::vector<double>& nus,
                           const std::vector<Variant>& variants);

struct CosFitRow {
  int n = 0;
  int d = 0;
  double s = 0.0;
  bool s_inf = false;
  double alpha_closed = 0.0;  // clipped-linear closed form
  double alpha_mc = 0.0;      // logistic sigmoid, Monte-Carlo
  double analytic = 0.0;      // expected_cos with alpha_mc
  double analytic_closed = 0.0;
  double mc_mean = 0.0;       // mean of random_cos_draw (logistic)
  double mc_se = 0.0;
};

struct CosFitOptions {
  std::vector<double> n_grid;  // default logspace(1, 4, 13)
  std::vector<double> d_grid;  // default logspace(1, 4, 13)
  std::vector<double> s_grid;  // default logspace(-2, 2, 17) plus inf
  std::int64_t draws = 1000;
  std::int64_t alpha_samples = 1000000;
  double beta = 1.0;
  double delta = 0.0;
};

std::vector<double> logspace(double lo, double hi, int num);
CosFitOptions default_cos_fit_options();
std::vector<CosFitRow> cos_fit(const CosFitOptions& opts, std::uint64_t seed);
CsvTable cos_fit_csv(const std::vector<CosFitRow>& rows);

struct SweepRow {
  Variant variant = Variant::kPsj;
  double level = 0.0;
  int iteration = 0;
  double median = 0.0;
  double p40 = 0.0;
  double p60 = 0.0;
  double queries_cum = 0.0;  // median over instances
};

struct NoiseSweepResult {
  std::vector<SweepRow> rows;
  NoiseModel noise = NoiseModel::kNone;
  CsvTable csv() const;
};

NoiseSweepResult noise_sweep(const ExperimentSpec& spec, NoiseModel noise,
                             const std::vector<double>& levels,
                             const std::vector<Variant>& variants);

/// Per-iteration aggregate of a batch of traces.
std::vector<SweepRow> per_iteration(const std::vector<AttackTrace>& traces, Variant v, double level);

struct HsjrRow {
  double level = 0.0;
  bool enlarged_radius = false;
  double psj_median = 0.0;
  double psj_queries = 0.0;
  int r = 0;  // smallest odd r matching PSJ (or the cap)
  bool censored = false;
  double hsjr_median = 0.0;
  double hsjr_queries = 0.0;
  double ratio = 0.0;  // hsjr_queries / psj_queries
};

std::vector<HsjrRow> hsjr_ratio(const ExperimentSpec& spec, const std::vector<double>& levels,
                                int r_max = 101);
CsvTable hsjr_csv(const std::vector<HsjrRow>& rows);

struct ProfileRow {
  int iteration = 0;
  int index = 0;
  double u = 0.0;
  double probe = 0.0;
  double fitted = 0.0;  // sigmoid with the iteration's posterior means
};

/// PSJ on the first instance; probe along each requested iteration's
/// search segment at `points` locations.
std::vector<ProfileRow> sigmoid_profile(const ExperimentSpec& spec,
                                        const std::vector<int>& iterations, int points = 200);
CsvTable profile_csv(const std::vector<ProfileRow>& rows);

struct AccelRow {
  std::string name;
  int m = 1;
  bool shrink = false;
  double bin_time = 0.0;     // median over instances of summed seconds
  double bin_queries = 0.0;  // median summed bin-search queries
  double grad_queries = 0.0;
  double final_distance = 0.0;
  double total_queries = 0.0;
};

/// Baseline, multi-query (m), shrinking priors, and both.
std::vector<AccelRow> accel_bench(const ExperimentSpec& spec, int m = 5);
CsvTable accel_csv(const std::vector<AccelRow>& rows);

}  // namespace psj
