#include <benchmark/benchmark.h>

#include "compatnet/baselines.hpp"
#include "compatnet/lsm.hpp"
#include "compatnet/mds.hpp"
#include "compatnet/simnet.hpp"

using namespace compatnet;

namespace {

SimulatedNetwork square(Index n) {
  SimConfig c;
  c.n_d = n;
  c.n_r = n;
  c.seed = 7;
  return simulate(c);
}

} // namespace

static void BM_LogLikelihood(benchmark::State& state) {
  const auto sim = square(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(sim.truth, sim.observed));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_LogLikelihood)->Arg(20)->Arg(80);

static void BM_Gradient(benchmark::State& state) {
  const auto sim = square(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood_gradient(sim.truth, sim.observed));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Gradient)->Arg(20)->Arg(80);

static void BM_Fit(benchmark::State& state) {
  const auto sim = square(state.range(0));
  FitConfig cfg;
  cfg.restarts = 0;
  cfg.freeze_beta = true;
  for (auto _ : state) benchmark::DoNotOptimize(fit(sim.observed, cfg).log_likelihood);
}
BENCHMARK(BM_Fit)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_MdsInit(benchmark::State& state) {
  const auto sim = square(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mds_init(sim.observed, 2).z_d.data());
}
BENCHMARK(BM_MdsInit)->Arg(20)->Arg(80)->Unit(benchmark::kMicrosecond);

static void BM_Nmtf(benchmark::State& state) {
  const auto sim = square(20);
  NmtfConfig c;
  c.rank = 2;
  c.max_iter = static_cast<int>(state.range(0));
  c.tol = 0.0;
  const Matrix v = (sim.observed.edge_weight().array() - sim.observed.edge_weight().minCoeff()).matrix();
  for (auto _ : state) benchmark::DoNotOptimize(nmtf_factorize(v, c).f.data());
}
BENCHMARK(BM_Nmtf)->Arg(200)->Unit(benchmark::kMillisecond);
