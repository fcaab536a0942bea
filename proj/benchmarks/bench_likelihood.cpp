#include <benchmark/benchmark.h>

#include "cardiorom/calibration/calibrate.hpp"

using namespace cardiorom;
using namespace cardiorom::calibration;

static void BM_LogLikelihood(benchmark::State& state) {
  const onefiber::ROMParameters params;
  const onefiber::SimulationOptions sim;
  const auto data = onefiber::simulate(params, {}, sim).steady_cycle();
  const GaussianLikelihood noise(build_noise_covariance(make_noise_model(NoiseSpec{}, data, data, params.tcycle)));
  RomContext ctx{params, sim, data.dt, static_cast<Eigen::Index>(data.size())};
  const Eigen::Vector4d theta(1.05, 0.95, 1.0, 1.02);
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(theta, data, ctx, noise));
}
BENCHMARK(BM_LogLikelihood)->Unit(benchmark::kMillisecond);

static void BM_NoiseFactorization(benchmark::State& state) {
  const onefiber::ROMParameters params;
  const auto data = onefiber::simulate(params, {}, onefiber::SimulationOptions{}).steady_cycle();
  const auto cov = build_noise_covariance(make_noise_model(NoiseSpec{}, data, data, params.tcycle));
  for (auto _ : state) benchmark::DoNotOptimize(GaussianLikelihood(cov));
}
BENCHMARK(BM_NoiseFactorization)->Unit(benchmark::kMillisecond);
