#include <benchmark/benchmark.h>

#include "tagcode/criteria.hpp"
#include "tagcode/designer.hpp"
#include "tagcode/estimator.hpp"
#include "tagcode/experiments.hpp"

using namespace tagcode;

namespace {

const Scenario& scenario() {
  static const Scenario sc = [] {
    ScenarioConfig c;
    c.grid_size = 500;
    return prepare_scenario(c, 0);
  }();
  return sc;
}

const PairDistanceTable& pairs() {
  static const PairDistanceTable p = build_pair_table(scenario().table, scenario().grid);
  return p;
}

void BM_ResponseTable(benchmark::State& state) {
  const auto grid = sample_orientation_grid(static_cast<std::size_t>(state.range(0)), 1);
  const auto& g = scenario().geometry;
  for (auto _ : state)
    benchmark::DoNotOptimize(build_response_table(g, grid, enumerate_codewords(4), ReflectivityMap{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResponseTable)->Arg(500)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_Decode(benchmark::State& state) {
  const auto& sc = scenario();
  const Code code = orthogonal_code(4, 24);
  const Decoder dec(sc.table, code);
  const CMat y = sc.table.concatenated(123, code);
  for (auto _ : state) benchmark::DoNotOptimize(dec.decode(y));
}
BENCHMARK(BM_Decode);

void BM_UpperBound(benchmark::State& state) {
  const auto pi = ProportionVector::uniform(16);
  const double sigma = NoiseModel(10.0, 4).sigma();
  for (auto _ : state) benchmark::DoNotOptimize(average_upper_bound(pi, 24, pairs(), sigma));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs().size()));
}
BENCHMARK(BM_UpperBound)->Unit(benchmark::kMicrosecond);

void BM_DesignAverage(benchmark::State& state) {
  const double sigma = NoiseModel(10.0, 4).sigma();
  for (auto _ : state) benchmark::DoNotOptimize(design_average(pairs(), 24, 4, sigma));
}
BENCHMARK(BM_DesignAverage)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto& sc = scenario();
  SimulationOptions so;
  so.trials = 10;
  so.threads = 1;
  const NoiseModel noise(5.0, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate(sc.table, orthogonal_code(4, 24), sc.grid, noise, so));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
