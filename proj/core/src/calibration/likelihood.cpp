#include "cardiorom/calibration/likelihood.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "cardiorom/errors.hpp"

namespace cardiorom::calibration {

GaussianLikelihood::GaussianLikelihood(const Eigen::MatrixXd& cov) : dim_(cov.rows()) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) throw ValidationError("covariance must be square");
  llt_.compute(cov);
  if (llt_.info() != Eigen::Success) {
    const double scale = cov.diagonal().mean();
    const auto I = Eigen::MatrixXd::Identity(dim_, dim_);
    bool ok = false;
    for (double j = 1e-10; j <= 1e-6 * (1.0 + 1e-9); j *= 10.0) {
      llt_.compute(cov + j * scale * I);
      if (llt_.info() == Eigen::Success) {
        jitter_ = j * scale;
        ok = true;
        break;
      }
    }
    if (!ok) throw NotPositiveDefinite("noise covariance is not positive definite");
  }
  log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double GaussianLikelihood::log_density(const Eigen::VectorXd& r) const {
  if (r.size() != dim_) throw ValidationError("residual length differs from the covariance");
  const Eigen::VectorXd z = llt_.matrixL().solve(r);
  return -0.5 * z.squaredNorm() - 0.5 * log_det_ -
         0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd GaussianLikelihood::correlate(const Eigen::VectorXd& z) const {
  if (z.size() != dim_) throw ValidationError("draw length differs from the covariance");
  return llt_.matrixL() * z;
}

void Prior::validate() const {
  if ((sigma.array() <= 0.0).any() || !mu.allFinite()) throw ValidationError("prior std must be positive");
}

double Prior::log_density(const Eigen::Vector4d& theta) const {
  const Eigen::Vector4d z = (theta - mu).cwiseQuotient(sigma);
  return -0.5 * z.squaredNorm() - sigma.array().log().sum() - 2.0 * std::log(2.0 * std::numbers::pi);
}

onefiber::PVTrace resample_cyclic(const onefiber::PVTrace& trace, double dt, Eigen::Index n) {
  const auto m = trace.size();
  if (m < 2) throw ValidationError("cannot resample a trace with fewer than two samples");
  const double period = static_cast<double>(m) * trace.dt;
  onefiber::PVTrace out;
  out.dt = dt;
  out.t0 = 0.0;
  out.cycle_index = trace.cycle_index;
  out.p.resize(static_cast<std::size_t>(n));
  out.V.resize(static_cast<std::size_t>(n));
  const bool aligned = std::abs(dt - trace.dt) <= 1e-12 * trace.dt && static_cast<std::size_t>(n) <= m;
  if (aligned) {
    std::copy_n(trace.p.begin(), n, out.p.begin());
    std::copy_n(trace.V.begin(), n, out.V.begin());
    if (trace.valves.size() == m) out.valves.assign(trace.valves.begin(), trace.valves.begin() + n);
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = std::fmod(static_cast<double>(i) * dt, period);
    const double x = t / trace.dt;
    auto k = static_cast<std::size_t>(std::floor(x));
    const double frac = x - static_cast<double>(k);
    k %= m;
    const auto k1 = (k + 1) % m;
    out.p[static_cast<std::size_t>(i)] = (1.0 - frac) * trace.p[k] + frac * trace.p[k1];
    out.V[static_cast<std::size_t>(i)] = (1.0 - frac) * trace.V[k] + frac * trace.V[k1];
  }
  return out;
}

onefiber::PVTrace model_trace(const Eigen::Vector4d& theta, const RomContext& ctx) {
  const auto f = onefiber::CorrectionFactors::from_array({theta[0], theta[1], theta[2], theta[3]});
  const auto run = onefiber::simulate(ctx.params, f, ctx.sim);
  const auto& steady = run.steady_cycle();
  const double dt = ctx.data_dt > 0.0 ? ctx.data_dt : ctx.sim.dt;
  const Eigen::Index n =
      ctx.data_n > 0 ? ctx.data_n : static_cast<Eigen::Index>(std::llround(ctx.params.tcycle / dt));
  return resample_cyclic(steady, dt, n);
}

double log_likelihood(const Eigen::Vector4d& theta, const onefiber::PVTrace& data,
                      const RomContext& ctx, const GaussianLikelihood& noise) {
  onefiber::PVTrace q;
  try {
    q = model_trace(theta, ctx);
  } catch (const Error& e) {
    if (e.error_class() == ErrorClass::Numerical) return -std::numeric_limits<double>::infinity();
    throw;
  }
  if (q.size() != data.size()) throw GridError("model and data traces have different lengths");
  return noise.log_density(data.concatenated() - q.concatenated());
}

double linear_gaussian_evidence(double d, double prior_mu, double prior_sd, double noise_sd) {
  if (!(prior_sd > 0.0) || !(noise_sd > 0.0)) throw ValidationError("standard deviations must be positive");
  const double var = prior_sd * prior_sd + noise_sd * noise_sd;
  const double r = d - prior_mu;
  return std::exp(-0.5 * r * r / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double monte_carlo_evidence(const std::function<double(double)>& likelihood, double prior_mu,
                            double prior_sd, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("need at least one draw");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> prior(prior_mu, prior_sd);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += likelihood(prior(rng));
  return sum / static_cast<double>(n);
}

}  // namespace cardiorom::calibration
