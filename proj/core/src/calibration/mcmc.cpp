#include "cardiorom/calibration/mcmc.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>

#include "cardiorom/errors.hpp"

namespace cardiorom::calibration {

void ChainConfig::validate() const {
  if (n_adaptive < 0 || n_regular < 1 || n_burnin < 0 || reset_every < 1) {
    throw ValidationError("invalid chain lengths");
  }
  if (!(n_burnin < n_regular)) throw ValidationError("burn-in must be shorter than the regular phase");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw ValidationError("target acceptance must lie in (0, 1)");
  }
}

RunningMoments::RunningMoments(Eigen::Index dim)
    : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

void RunningMoments::push(const Eigen::VectorXd& x) {
  ++n_;
  const Eigen::VectorXd d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_).transpose();
}

Eigen::MatrixXd RunningMoments::covariance() const {
  if (n_ < 2) return Eigen::MatrixXd::Zero(mean_.size(), mean_.size());
  const Eigen::MatrixXd c = m2_ / static_cast<double>(n_ - 1);
  return 0.5 * (c + c.transpose());
}

namespace {

// Cholesky of a proposal covariance; falls back to the diagonal.
Eigen::MatrixXd proposal_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  return cov.diagonal().cwiseMax(1e-300).cwiseSqrt().asDiagonal();
}

}  // namespace

ChainResult adaptive_metropolis(const LogDensity& log_post, const ChainConfig& cfg,
                                const Eigen::VectorXd& init, const Eigen::MatrixXd& init_cov) {
  cfg.validate();
  const auto d = init.size();
  if (init_cov.rows() != d || init_cov.cols() != d) throw ValidationError("initial proposal size mismatch");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ChainResult out;

  Eigen::VectorXd x = init;
  double lp = log_post(x);
  if (!std::isfinite(lp)) throw ValidationError("initial state has zero posterior density");

  auto propose = [&](const Eigen::MatrixXd& L) {
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
    return Eigen::VectorXd(x + L * z);
  };
  // Returns whether the proposal was accepted.
  auto step = [&](const Eigen::MatrixXd& L) {
    const Eigen::VectorXd y = propose(L);
    const double lp_y = log_post(y);
    if (!std::isfinite(lp_y)) {
      ++out.failed_evaluations;
      return false;
    }
    if (std::log(unif(rng)) < lp_y - lp) {
      x = y;
      lp = lp_y;
      return true;
    }
    return false;
  };

  // Adaptive phase.
  const double base = 2.38 * 2.38 / static_cast<double>(d);
  const Eigen::MatrixXd eps_I = cfg.epsilon * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd shape = init_cov / base;  // proposal = s * base * shape + eps I
  double log_s = 0.0;
  const Eigen::Index min_window = std::max<Eigen::Index>(20 * d, 2 * d + 1);
  RunningMoments window(d);
  Eigen::Index accepted = 0;
  Eigen::Index window_step = 0;
  for (int k = 0; k < cfg.n_adaptive; ++k) {
    if (k > 0 && k % cfg.reset_every == 0) {
      if (window.count() >= min_window) shape = window.covariance();
      window = RunningMoments(d);
      window_step = 0;
    }
    const Eigen::MatrixXd& cur = window.count() >= min_window ? window.covariance() : shape;
    const Eigen::MatrixXd L = proposal_factor(std::exp(log_s) * base * cur + eps_I);
    const bool acc = step(L);
    accepted += acc ? 1 : 0;
    ++window_step;
    log_s += ((acc ? 1.0 : 0.0) - cfg.target_acceptance) /
             std::pow(static_cast<double>(window_step), cfg.gain_exponent);
    log_s = std::clamp(log_s, -30.0, 30.0);
    window.push(x);
  }
  if (cfg.n_adaptive > 0) {
    out.adaptive_acceptance_rate = static_cast<double>(accepted) / cfg.n_adaptive;
    if (out.adaptive_acceptance_rate < 0.005) {
      throw StuckChain("adaptive phase accepted fewer than 0.5% of proposals");
    }
    if (window.count() >= min_window) shape = window.covariance();
  }
  out.proposal_cov = cfg.n_adaptive > 0 ? Eigen::MatrixXd(std::exp(log_s) * base * shape + eps_I) : init_cov;

  // Regular phase with the frozen proposal.
  const Eigen::MatrixXd L = proposal_factor(out.proposal_cov);
  const int kept = cfg.n_regular - cfg.n_burnin;
  out.samples.resize(kept, d);
  out.log_post.resize(kept);
  Eigen::Index reg_accepted = 0;
  for (int k = 0; k < cfg.n_regular; ++k) {
    reg_accepted += step(L) ? 1 : 0;
    if (k >= cfg.n_burnin) {
      out.samples.row(k - cfg.n_burnin) = x.transpose();
      out.log_post[k - cfg.n_burnin] = lp;
    }
  }
  out.acceptance_rate = static_cast<double>(reg_accepted) / cfg.n_regular;
  return out;
}

PosteriorSummary posterior_moments(const Eigen::MatrixXd& samples) {
  if (samples.rows() == 0) throw ValidationError("empty chain");
  PosteriorSummary s;
  const auto n = samples.rows();
  s.n_samples = n;
  s.mu = samples.colwise().mean().transpose();
  const Eigen::MatrixXd c = samples.rowwise() - s.mu.transpose();
  s.sigma_mat = n > 1 ? Eigen::MatrixXd(c.transpose() * c / static_cast<double>(n - 1))
                      : Eigen::MatrixXd::Zero(samples.cols(), samples.cols());
  s.sigma_mat = 0.5 * (s.sigma_mat + s.sigma_mat.transpose());
  if (n >= 4) s.rhat = split_rhat(samples);
  return s;
}

Eigen::VectorXd split_rhat(const Eigen::MatrixXd& samples) {
  const auto half = samples.rows() / 2;
  if (half < 2) throw ValidationError("chain too short for split R-hat");
  Eigen::VectorXd r(samples.cols());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    const Eigen::VectorXd a = samples.col(j).head(half);
    const Eigen::VectorXd b = samples.col(j).segment(half, half);
    const double ma = a.mean();
    const double mb = b.mean();
    const double va = (a.array() - ma).square().sum() / static_cast<double>(half - 1);
    const double vb = (b.array() - mb).square().sum() / static_cast<double>(half - 1);
    const double W = 0.5 * (va + vb);
    const double m = 0.5 * (ma + mb);
    const double B = static_cast<double>(half) * ((ma - m) * (ma - m) + (mb - m) * (mb - m));
    const double var_plus = (static_cast<double>(half - 1) / half) * W + B / static_cast<double>(half);
    r[j] = W > 0.0 ? std::sqrt(var_plus / W) : 1.0;
  }
  return r;
}

Eigen::VectorXd batch_means_mcse(const Eigen::MatrixXd& samples) {
  const auto n = samples.rows();
  const auto b = std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::sqrt(static_cast<double>(n))));
  const auto size = n / b;
  if (size < 1) throw ValidationError("chain too short for batch means");
  Eigen::MatrixXd means(b, samples.cols());
  for (Eigen::Index k = 0; k < b; ++k) {
    means.row(k) = samples.middleRows(k * size, size).colwise().mean();
  }
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::RowVectorXd var =
      (means.rowwise() - grand).array().square().colwise().sum() / static_cast<double>(b - 1);
  return (var.array() / static_cast<double>(b)).sqrt().transpose();
}

}  // namespace cardiorom::calibration
