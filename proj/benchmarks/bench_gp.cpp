#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "cardiorom/gp/vector_gp.hpp"

using namespace cardiorom::gp;

static std::vector<TrainingRecord> records(int n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TrainingRecord> out;
  for (int i = 0; i < n; ++i) {
    TrainingRecord r;
    r.c = Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng));
    r.mu = Eigen::Vector4d::Ones() + 0.1 * Eigen::Vector4d(std::sin(3 * r.c[0]), r.c[1], -r.c[0], r.c[2] * r.c[3]);
    r.sigma_mat = 1e-4 * (Eigen::Matrix4d::Identity() + 0.2 * Eigen::Matrix4d::Ones());
    out.push_back(r);
  }
  return out;
}

static void BM_TrainVectorGP(benchmark::State& state) {
  const auto recs = records(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(VectorGP::train(recs));
}
BENCHMARK(BM_TrainVectorGP)->Arg(12)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_PredictFactors(benchmark::State& state) {
  const auto gp = VectorGP::train(records(30));
  const Eigen::Vector4d c(0.4, 0.5, 0.6, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(gp.predict_factors(c));
}
BENCHMARK(BM_PredictFactors)->Unit(benchmark::kMicrosecond);
