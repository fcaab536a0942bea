#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cardiorom/calibration/noise.hpp"
#include "cardiorom/onefiber/parameters.hpp"
#include "cardiorom/onefiber/simulator.hpp"

namespace cardiorom::calibration {

/// Zero-mean multivariate normal with a cached Cholesky factor.
class GaussianLikelihood {
 public:
  /// Throws NotPositiveDefinite when the covariance cannot be factorized
  /// (jitter 1e-10 escalated x10 up to 1e-6 relative to the mean variance).
  explicit GaussianLikelihood(const Eigen::MatrixXd& cov);

  /// log N(r; 0, cov)
  double log_density(const Eigen::VectorXd& r) const;
  double log_determinant() const { return log_det_; }
  Eigen::Index dimension() const { return dim_; }
  double jitter() const { return jitter_; }
  /// L z for a standard-normal z (draws with the model covariance).
  Eigen::VectorXd correlate(const Eigen::VectorXd& z) const;

 private:
  Eigen::Index dim_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
};

/// Independent Gaussian prior on the four correction factors.
struct Prior {
  Eigen::Vector4d mu = Eigen::Vector4d::Ones();
  Eigen::Vector4d sigma = Eigen::Vector4d::Constant(0.1);

  void validate() const;
  double log_density(const Eigen::Vector4d& theta) const;
  Eigen::Matrix4d covariance() const { return sigma.array().square().matrix().asDiagonal(); }
};

/// Everything needed to turn correction factors into a model trace on the
/// data grid.
struct RomContext {
  onefiber::ROMParameters params;
  onefiber::SimulationOptions sim;
  double data_dt = 0.0;      // 0: use sim.dt
  Eigen::Index data_n = 0;   // 0: one full cycle on data_dt
};

/// Steady-cycle ROM trace resampled to the data grid (cycle-relative time).
onefiber::PVTrace model_trace(const Eigen::Vector4d& theta, const RomContext& ctx);

/// Linear interpolation of a periodic trace onto n samples spaced dt from the
/// start of its cycle.
onefiber::PVTrace resample_cyclic(const onefiber::PVTrace& trace, double dt, Eigen::Index n);

/// log N(d - q(theta); 0, Sigma). Model failures return -infinity.
double log_likelihood(const Eigen::Vector4d& theta, const onefiber::PVTrace& data,
                      const RomContext& ctx, const GaussianLikelihood& noise);

/// Evidence of a scalar datum d under a N(prior_mu, prior_sd^2) prior and
/// additive N(0, noise_sd^2) noise: the marginal N(d; prior_mu, prior_sd^2 + noise_sd^2).
double linear_gaussian_evidence(double d, double prior_mu, double prior_sd, double noise_sd);

/// Plain Monte-Carlo estimate of the evidence, the prior mean of the
/// likelihood, using n draws from N(prior_mu, prior_sd^2).
double monte_carlo_evidence(const std::function<double(double)>& likelihood, double prior_mu,
                            double prior_sd, std::size_t n, std::uint64_t seed);

}  // namespace cardiorom::calibration
