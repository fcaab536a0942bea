#include <benchmark/benchmark.h>

#include "cardiorom/onefiber/simulator.hpp"

using namespace cardiorom::onefiber;

static void BM_SimulateCycles(benchmark::State& state) {
  const ROMParameters p;
  SimulationOptions o;
  o.n_cycles = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(p, {}, o));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateCycles)->Arg(1)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_SimulateStep(benchmark::State& state) {
  const ROMParameters p;
  SimulationOptions o;
  o.dt = static_cast<double>(state.range(0)) / 10.0;
  o.n_cycles = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(p, {}, o));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(p.tcycle / o.dt));
}
BENCHMARK(BM_SimulateStep)->Arg(5)->Arg(20)->Unit(benchmark::kMicrosecond);
