#include "cardiorom/calibration/calibrate.hpp"

#include <cstdio>
#include <ostream>

#include "cardiorom/errors.hpp"

namespace cardiorom::calibration {

NoiseModel noise_model_for(const onefiber::ROMParameters& params, const NoiseSpec& spec,
                           const Prior& prior, const onefiber::SimulationOptions& sim,
                           const onefiber::PVTrace& landmark_trace) {
  const auto f = onefiber::CorrectionFactors::from_array(
      {prior.mu[0], prior.mu[1], prior.mu[2], prior.mu[3]});
  const auto run = onefiber::simulate(params, f, sim);
  const auto valves = resample_cyclic(run.steady_cycle(), landmark_trace.dt,
                                      static_cast<Eigen::Index>(landmark_trace.size()));
  if (valves.valves.size() != valves.size()) {
    throw GridError("data grid must coincide with the simulation grid for phase weighting");
  }
  return make_noise_model(spec, valves, landmark_trace, params.tcycle);
}

CalibrationResult calibrate(const onefiber::PVTrace& data, const onefiber::ROMParameters& params,
                            const CalibrationConfig& cfg) {
  cfg.prior.validate();
  if (data.size() < 2) throw ValidationError("calibration data must contain a cycle");
  CalibrationResult out;
  out.noise = noise_model_for(params, cfg.noise, cfg.prior, cfg.sim, data);
  const GaussianLikelihood noise(build_noise_covariance(out.noise));

  RomContext ctx;
  ctx.params = params;
  ctx.sim = cfg.sim;
  ctx.data_dt = data.dt;
  ctx.data_n = static_cast<Eigen::Index>(data.size());

  const LogDensity log_post = [&](const Eigen::VectorXd& th) {
    const Eigen::Vector4d theta = th;
    const double lp = cfg.prior.log_density(theta);
    if (!cfg.use_likelihood) return lp;
    return lp + log_likelihood(theta, data, ctx, noise);
  };
  const Eigen::MatrixXd init_cov = cfg.initial_proposal_fraction * cfg.prior.covariance();
  out.chain = adaptive_metropolis(log_post, cfg.chain, cfg.prior.mu, init_cov);
  out.summary = posterior_moments(out.chain.samples);
  out.summary.acceptance_rate = out.chain.acceptance_rate;
  return out;
}

namespace {

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

nlohmann::json mat(const Eigen::MatrixXd& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

}  // namespace

nlohmann::json report_to_json(const CalibrationResult& r, const CalibrationConfig& cfg) {
  nlohmann::json j = {{"mu", vec(r.summary.mu)},
                      {"sigma_mat", mat(r.summary.sigma_mat)},
                      {"acceptance", r.chain.acceptance_rate},
                      {"adaptive_acceptance", r.chain.adaptive_acceptance_rate},
                      {"n_samples", r.summary.n_samples},
                      {"failed_evaluations", r.chain.failed_evaluations},
                      {"seed", cfg.chain.seed},
                      {"noise_config", to_json(cfg.noise)},
                      {"sigma_V_min_effective", volume_noise_floor(r.noise)},
                      {"prior", to_json(cfg.prior)},
                      {"chain_config", to_json(cfg.chain)}};
  if (r.summary.rhat.size() > 0) j["rhat"] = vec(r.summary.rhat);
  return j;
}

void write_chain_csv(std::ostream& out, const ChainResult& chain) {
  out << "step,alpha,beta,gamma,lambda,logpost\n";
  char buf[256];
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(i),
                  chain.samples(i, 0), chain.samples(i, 1), chain.samples(i, 2), chain.samples(i, 3),
                  chain.log_post[i]);
    out << buf;
  }
}

nlohmann::json to_json(const ChainConfig& c) {
  return {{"n_adaptive", c.n_adaptive}, {"reset_every", c.reset_every},
          {"n_regular", c.n_regular},   {"n_burnin", c.n_burnin},
          {"target_acceptance", c.target_acceptance}, {"seed", c.seed},
          {"epsilon", c.epsilon},       {"gain_exponent", c.gain_exponent}};
}

ChainConfig chain_config_from_json(const nlohmann::json& j) {
  ChainConfig c;
  try {
    c.n_adaptive = j.value("n_adaptive", c.n_adaptive);
    c.reset_every = j.value("reset_every", c.reset_every);
    c.n_regular = j.value("n_regular", c.n_regular);
    c.n_burnin = j.value("n_burnin", c.n_burnin);
    c.target_acceptance = j.value("target_acceptance", c.target_acceptance);
    c.seed = j.value("seed", c.seed);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.gain_exponent = j.value("gain_exponent", c.gain_exponent);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("chain config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const Prior& p) { return {{"mu", vec(p.mu)}, {"sigma", vec(p.sigma)}}; }

Prior prior_from_json(const nlohmann::json& j) {
  Prior p;
  try {
    if (j.contains("mu")) {
      const auto v = j.at("mu").get<std::vector<double>>();
      if (v.size() != 4) throw ParseError("prior mu must have 4 entries");
      p.mu = Eigen::Map<const Eigen::Vector4d>(v.data());
    }
    if (j.contains("sigma")) {
      const auto v = j.at("sigma").get<std::vector<double>>();
      if (v.size() != 4) throw ParseError("prior sigma must have 4 entries");
      p.sigma = Eigen::Map<const Eigen::Vector4d>(v.data());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("prior: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace cardiorom::calibration
