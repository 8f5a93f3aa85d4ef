// Serial reference vs OpenMP for the data-parallel kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "psj/gradient_estimate.hpp"
#include "psj/posterior_grid.hpp"
#include "psj/sigmoid_math.hpp"

using namespace psj;

namespace {

struct SweepFixture {
  GridAxes axes = GridAxes::from_spec(GridSpec{});
  LikelihoodTable table{axes};
  std::vector<double> weights;
  std::vector<std::size_t> active;
  std::vector<double> scores;

  SweepFixture() {
    ParamGrid g(axes);
    for (int i = 0; i < 5; ++i) g.observe(0.3 + 0.02 * i, i % 2 ? Label::kTarget : Label::kOther);
    weights = g.masses();
    active = active_cells(weights, 0.0);
    scores.resize(table.candidates());
  }
};

SweepFixture& sweep() {
  static SweepFixture f;
  return f;
}

void BM_MiSweepSerial(benchmark::State& st) {
  auto& f = sweep();
  for (auto _ : st) {
    mi_sweep_serial(f.table, f.weights, f.active, f.scores);
    benchmark::DoNotOptimize(f.scores.data());
  }
}

void BM_MiSweepOmp(benchmark::State& st) {
  auto& f = sweep();
  for (auto _ : st) {
    mi_sweep(f.table, f.weights, f.active, f.scores);
    benchmark::DoNotOptimize(f.scores.data());
  }
}

void BM_AlphaMcSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(alpha_mc_serial(0.05, 10.0, 0.1, 0.1, st.range(0), 1));
}

void BM_AlphaMcOmp(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(alpha_mc(0.05, 10.0, 0.1, 0.1, st.range(0), 1));
}

void BM_RandomCosSerial(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(mean_random_cos_serial(100, 784, 10.0, 0.0, 1.0, 0.0, st.range(0), 1));
}

void BM_RandomCosOmp(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(mean_random_cos(100, 784, 10.0, 0.0, 1.0, 0.0, st.range(0), 1));
}

void BM_PerturbationSerial(benchmark::State& st) {
  const int d = 784;
  std::vector<double> out(static_cast<std::size_t>(st.range(0)) * d);
  for (auto _ : st) {
    perturbation_batch_serial(7, 0, st.range(0), d, 0.01, false, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_PerturbationOmp(benchmark::State& st) {
  const int d = 784;
  std::vector<double> out(static_cast<std::size_t>(st.range(0)) * d);
  for (auto _ : st) {
    perturbation_batch(7, 0, st.range(0), d, 0.01, false, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_MiSweepSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MiSweepOmp)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AlphaMcSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AlphaMcOmp)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomCosSerial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomCosOmp)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PerturbationSerial)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PerturbationOmp)->Arg(256)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
