#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "cardiorom/calibration/likelihood.hpp"
#include "cardiorom/calibration/mcmc.hpp"
#include "cardiorom/calibration/noise.hpp"

namespace cardiorom::calibration {

struct CalibrationConfig {
  NoiseSpec noise;
  Prior prior;
  ChainConfig chain;
  onefiber::SimulationOptions sim;
  /// Initial proposal covariance as a multiple of the prior covariance.
  double initial_proposal_fraction = 0.01;
  /// false samples the prior alone.
  bool use_likelihood = true;
};

struct CalibrationResult {
  PosteriorSummary summary;
  ChainResult chain;
  NoiseModel noise;
};

/// Noise model for a geometry: valve timing from the ROM at the prior mean,
/// landmarks (for landmark scaling) from `landmark_trace`.
NoiseModel noise_model_for(const onefiber::ROMParameters& params, const NoiseSpec& spec,
                           const Prior& prior, const onefiber::SimulationOptions& sim,
                           const onefiber::PVTrace& landmark_trace);

/// Posterior moments of the correction factors given one steady-state cycle.
CalibrationResult calibrate(const onefiber::PVTrace& data, const onefiber::ROMParameters& params,
                            const CalibrationConfig& cfg);

nlohmann::json report_to_json(const CalibrationResult& r, const CalibrationConfig& cfg);

/// `step,alpha,beta,gamma,lambda,logpost`
void write_chain_csv(std::ostream& out, const ChainResult& chain);

nlohmann::json to_json(const ChainConfig& c);
ChainConfig chain_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Prior& p);
Prior prior_from_json(const nlohmann::json& j);

}  // namespace cardiorom::calibration
