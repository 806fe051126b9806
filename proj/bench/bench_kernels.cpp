#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dl4/engine.hpp"
#include "dl4/kernels.hpp"

using namespace dl4;

namespace {

std::vector<float> noise(std::size_t n) {
  std::mt19937 rng(1);
  std::normal_distribution<float> dist(0.0f, 0.3f);
  std::vector<float> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

// Lag range matches a 600 ms echo search at 48 kHz.
void BM_Autocorrelation(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::autocorrelation(x, 48, 28800));
}
void BM_AutocorrelationSerial(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::autocorrelation_serial(x, 48, 28800));
}
BENCHMARK(BM_Autocorrelation)->Arg(96000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AutocorrelationSerial)->Arg(96000)->Unit(benchmark::kMillisecond);

void BM_DiffStats(benchmark::State& state) {
  const auto a = noise(static_cast<std::size_t>(state.range(0)));
  auto b = a;
  b.back() += 0.1f;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::diff_stats(a, b, 1e-4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
void BM_DiffStatsSerial(benchmark::State& state) {
  const auto a = noise(static_cast<std::size_t>(state.range(0)));
  auto b = a;
  b.back() += 0.1f;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::diff_stats_serial(a, b, 1e-4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DiffStats)->Arg(2'880'000);
BENCHMARK(BM_DiffStatsSerial)->Arg(2'880'000);

void BM_SumSquares(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sum_squares(x));
}
void BM_SumSquaresSerial(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sum_squares_serial(x));
}
BENCHMARK(BM_SumSquares)->Arg(2'880'000);
BENCHMARK(BM_SumSquaresSerial)->Arg(2'880'000);

// Engine throughput in 64-sample blocks with the LFO running.
void BM_EngineBlock(benchmark::State& state) {
  Dl4Params p;
  p.base = BaseDelay(8);
  p.df = 0.6;
  p.feedback = 0.7;
  p.mix = 0.5;
  p.lfo_speed = 0.4;
  p.lfo_width = 0.5;
  Engine e(48000.0, p);
  const auto x = noise(64);
  std::vector<float> y(64);
  for (auto _ : state) {
    e.process(x, y);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_EngineBlock);

}  // namespace

BENCHMARK_MAIN();
