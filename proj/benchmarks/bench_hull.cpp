#include <random>

#include <benchmark/benchmark.h>

#include "cardiorom/podgeom/hull.hpp"

using namespace cardiorom::podgeom;

static Eigen::MatrixXd gaussian_cloud(Eigen::Index n, int d) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Eigen::MatrixXd P(n, d);
  for (Eigen::Index i = 0; i < P.size(); ++i) P.data()[i] = z(rng);
  return P;
}

static void BM_ConvexHull(benchmark::State& state) {
  const auto P = gaussian_cloud(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(ConvexHull(P).vertices());
}
BENCHMARK(BM_ConvexHull)->Arg(60)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_HullSelection(benchmark::State& state) {
  const auto P = gaussian_cloud(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(select_training_hull(P, 0.9));
}
BENCHMARK(BM_HullSelection)->Arg(60)->Arg(200)->Unit(benchmark::kMillisecond);
