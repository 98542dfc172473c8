#include <benchmark/benchmark.h>

#include <omp.h>

#include "pdmp/estimate.hpp"
#include "pdmp/models/ctmc.hpp"
#include "pdmp/models/heated_room.hpp"

namespace {

using namespace pdmp;

EstimatorConfig config(std::size_t n, int workers) {
  EstimatorConfig cfg;
  cfg.n = n;
  cfg.seed = 1;
  cfg.workers = workers;
  cfg.keep_weights = false;
  return cfg;
}

void BM_TinyChainSerial(benchmark::State& state) {
  const auto chain = models::tiny_ctmc_model(0.1, 1.0, 2, 2.0);
  const models::ModeExponentialScheme scheme(1.0, 2);
  const auto cfg = config(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_replications_serial(chain, &scheme, cfg).hits);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TinyChainParallel(benchmark::State& state) {
  const auto chain = models::tiny_ctmc_model(0.1, 1.0, 2, 2.0);
  const models::ModeExponentialScheme scheme(1.0, 2);
  const auto cfg = config(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(run_replications_parallel(chain, &scheme, cfg).hits);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_HeatedRoomSerial(benchmark::State& state) {
  const models::HeatedRoom room;
  const models::HeatedRoomScheme scheme(0.915, 1.197);
  const auto cfg = config(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_replications_serial(room, &scheme, cfg).hits);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_HeatedRoomParallel(benchmark::State& state) {
  const models::HeatedRoom room;
  const models::HeatedRoomScheme scheme(0.915, 1.197);
  const auto cfg = config(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(run_replications_parallel(room, &scheme, cfg).hits);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void worker_args(benchmark::internal::Benchmark* b, std::int64_t n) {
  for (int w = 1; w <= omp_get_max_threads(); w *= 2) b->Args({n, w});
  if (omp_get_max_threads() & (omp_get_max_threads() - 1)) b->Args({n, omp_get_max_threads()});
}

}  // namespace

BENCHMARK(BM_TinyChainSerial)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TinyChainParallel)
    ->Apply([](auto* b) { worker_args(b, 4000); })
    ->ArgNames({"n", "workers"})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_HeatedRoomSerial)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HeatedRoomParallel)
    ->Apply([](auto* b) { worker_args(b, 500); })
    ->ArgNames({"n", "workers"})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
