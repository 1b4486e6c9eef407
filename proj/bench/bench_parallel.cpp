// Seed-ensemble throughput: serial reference vs the OpenMP map.

#include <benchmark/benchmark.h>

#include "olab/algorithms.hpp"
#include "olab/objectives.hpp"
#include "olab/parallel.hpp"

namespace {

using namespace olab;

const QuadraticEnsemble& problem() {
  static const QuadraticEnsemble q = make_quadratic(8, 32, 1.0, 10.0, 1.0, RngStream(1).derive("objective"));
  return q;
}

double one_seed(std::size_t i) {
  AlgorithmSpec spec;
  spec.kind = AlgorithmKind::OverlapLocal;
  HyperParams hp;
  hp.m = 8;
  hp.d = 32;
  hp.tau = 2;
  hp.K = 500;
  hp.eta = 0.02;
  hp.seed = 1000 + i;
  return run_training(spec, hp, problem(), ParamVector(32, 0.0), {}).avg_grad_norm_sq;
}

void BM_SerialSeeds(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(serial_map(n, one_seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ParallelSeeds(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(parallel_map(n, one_seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SerialSeeds)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ParallelSeeds)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
