#include <benchmark/benchmark.h>

#include "tobit_iht/tobit_iht.hpp"

namespace {

tobit::GeneratedData instance(tobit::Index n, tobit::Index d) {
  tobit::GenSpec g;
  g.n = n;
  g.d = d;
  g.s0 = 5;
  g.beta0 = 0.0;
  g.seed = 1;
  return tobit::generate(g);
}

void BM_Gradient(benchmark::State& state) {
  const auto data = instance(state.range(0), state.range(1));
  tobit::Theta theta = tobit::cold_start(data.pooled.d(), 0.5);
  theta.delta.head(6).setConstant(0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tobit::gradient(theta, data.pooled));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(1) + 1));
}
BENCHMARK(BM_Gradient)->Args({500, 2000})->Args({2000, 500})->Unit(benchmark::kMicrosecond);

void BM_HardThreshold(benchmark::State& state) {
  tobit::SplitMix64 rng(3);
  tobit::Vector v(state.range(0));
  for (tobit::Index j = 0; j < v.size(); ++j) v[j] = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(tobit::hard_threshold(v, 5));
  }
}
BENCHMARK(BM_HardThreshold)->Arg(501)->Arg(2001)->Arg(20001);

void BM_Fit(benchmark::State& state) {
  const auto data = instance(state.range(0), state.range(1));
  tobit::IhtConfig cfg;
  cfg.s = 5;
  cfg.max_iters = 500;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tobit::fit(data.pooled, cfg));
  }
}
BENCHMARK(BM_Fit)->Args({500, 2000})->Unit(benchmark::kMillisecond);

void BM_FitDistributed(benchmark::State& state) {
  tobit::GenSpec g;
  g.n = 2000;
  g.d = 500;
  g.s0 = 5;
  g.beta0 = 0.0;
  g.shards = static_cast<int>(state.range(0));
  g.seed = 1;
  const auto data = tobit::generate(g);
  tobit::DistConfig cfg;
  cfg.inner.s = 5;
  cfg.inner.max_iters = 500;
  cfg.outer_rounds = tobit::recommended_rounds(g.n / g.shards, g.n);
  cfg.central_warm_start = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tobit::fit_distributed(data.shards, cfg));
  }
}
BENCHMARK(BM_FitDistributed)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
