#include <benchmark/benchmark.h>

#include <random>

#include "compatnet/rng.hpp"
#include "compatnet/survival.hpp"
#include "compatnet/transplant.hpp"

using namespace compatnet;

static void BM_CoxFit(benchmark::State& state) {
  TransplantGenConfig g;
  g.n_per_split = static_cast<Index>(state.range(0));
  g.seed = 3;
  const auto sim = simulate_transplants(g);
  const auto design = design_matrix(sim.train, 20);
  for (auto _ : state) benchmark::DoNotOptimize(cox_fit(design, sim.train.time, sim.train.event, 1.0).coefficients.data());
  state.counters["columns"] = static_cast<double>(design.x.cols());
}
BENCHMARK(BM_CoxFit)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_CIndex(benchmark::State& state) {
  const Index n = static_cast<Index>(state.range(0));
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution b(0.3);
  Vector risk(n), time(n);
  std::vector<std::uint8_t> event(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    risk(i) = g(rng);
    time(i) = e(rng);
    event[static_cast<std::size_t>(i)] = b(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(c_index(risk, time, event));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CIndex)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity(benchmark::oNLogN);
