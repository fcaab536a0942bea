#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

namespace cardiorom::calibration {

struct ChainConfig {
  int n_adaptive = 100000;
  int reset_every = 25000;
  int n_regular = 25000;
  int n_burnin = 5000;
  double target_acceptance = 0.234;
  std::uint64_t seed = 1;
  /// Diagonal regularization added to the adapted proposal covariance.
  double epsilon = 1e-12;
  /// Robbins-Monro gain exponent for the global scale.
  double gain_exponent = 0.6;

  void validate() const;
};

struct ChainResult {
  Eigen::MatrixXd samples;     // post-burn-in regular-phase samples, one per row
  Eigen::VectorXd log_post;    // matching log posterior values
  double acceptance_rate = 0.0;           // regular phase
  double adaptive_acceptance_rate = 0.0;  // adaptive phase
  Eigen::MatrixXd proposal_cov;           // fixed proposal used in the regular phase
  int failed_evaluations = 0;             // proposals with -inf log posterior
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Adaptive Metropolis: the proposal covariance is s * 2.38^2/d * Cov(window)
/// + eps I, where the window restarts every reset_every steps and log s follows
/// a Robbins-Monro recursion toward the target acceptance. The final proposal
/// then drives n_regular plain random-walk steps, of which the first n_burnin
/// are discarded. Throws StuckChain if fewer than 0.5% of adaptive proposals
/// are accepted.
ChainResult adaptive_metropolis(const LogDensity& log_post, const ChainConfig& cfg,
                                const Eigen::VectorXd& init, const Eigen::MatrixXd& init_cov);

struct PosteriorSummary {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma_mat;
  double acceptance_rate = 0.0;
  Eigen::VectorXd rhat;  // split-chain potential scale reduction
  Eigen::Index n_samples = 0;
};

/// Mean and unbiased (N - 1) covariance of the rows of `samples`.
PosteriorSummary posterior_moments(const Eigen::MatrixXd& samples);

/// Streaming mean/covariance (Welford) for cross-checks and long chains.
class RunningMoments {
 public:
  explicit RunningMoments(Eigen::Index dim);
  void push(const Eigen::VectorXd& x);
  Eigen::Index count() const { return n_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::MatrixXd covariance() const;  // N - 1 normalization

 private:
  Eigen::Index n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

/// Split-R-hat per column: the chain is cut into two halves.
Eigen::VectorXd split_rhat(const Eigen::MatrixXd& samples);

/// Monte-Carlo standard error of the column means by non-overlapping batch
/// means with about sqrt(N) batches.
Eigen::VectorXd batch_means_mcse(const Eigen::MatrixXd& samples);

}  // namespace cardiorom::calibration
