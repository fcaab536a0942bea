#include "cardiorom/gp/scalar_gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "cardiorom/errors.hpp"

namespace cardiorom::gp {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;
// LLT can succeed on a numerically singular matrix and then solve to
// garbage; below this reciprocal condition estimate it counts as a failure.
constexpr double kMinRcond = 1e-12;

bool usable(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return llt.info() == Eigen::Success && llt.rcond() >= kMinRcond;
}

}  // namespace

double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& l) {
  if (a.size() != b.size() || a.size() != l.size()) throw ValidationError("kernel dimension mismatch");
  return std::exp(-0.5 * ((a - b).array() / l.array()).square().sum());
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::VectorXd& l) {
  if (A.cols() != l.size() || B.cols() != l.size()) throw ValidationError("kernel dimension mismatch");
  const Eigen::MatrixXd As = A * l.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd Bs = B * l.cwiseInverse().asDiagonal();
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      K(i, j) = std::exp(-0.5 * (As.row(i) - Bs.row(j)).squaredNorm());
    }
  }
  return K;
}

bool LengthScaleBounds::contains(const Eigen::VectorXd& l) const {
  return l.size() == lo.size() && (l.array() >= lo.array()).all() && (l.array() <= hi.array()).all();
}

Eigen::VectorXd input_ranges(const Eigen::MatrixXd& X) {
  Eigen::VectorXd r(X.cols());
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    const double span = X.rows() > 0 ? X.col(d).maxCoeff() - X.col(d).minCoeff() : 0.0;
    r[d] = span > 0.0 ? span : 1.0;
  }
  return r;
}

LengthScaleBounds default_bounds(const Eigen::MatrixXd& X, double lo_frac, double hi_frac) {
  const Eigen::VectorXd r = input_ranges(X);
  return {lo_frac * r, hi_frac * r};
}

ScalarGP::ScalarGP(int dimension)
    : dim_(dimension),
      X_(0, dimension),
      l_(Eigen::VectorXd::Ones(dimension)),
      bounds_{Eigen::VectorXd::Ones(dimension), Eigen::VectorXd::Ones(dimension)} {}

ScalarGP::ScalarGP(Eigen::MatrixXd X, Eigen::VectorXd y, Eigen::VectorXd noise_sd,
                   Eigen::VectorXd length_scales, LengthScaleBounds bounds)
    : dim_(static_cast<int>(X.cols())),
      X_(std::move(X)),
      y_(std::move(y)),
      noise_(std::move(noise_sd)),
      l_(std::move(length_scales)),
      bounds_(std::move(bounds)) {
  if (X_.rows() != y_.size() || y_.size() != noise_.size()) {
    throw ValidationError("GP inputs, targets and noise must have equal length");
  }
  if (l_.size() != dim_ || bounds_.lo.size() != dim_ || bounds_.hi.size() != dim_) {
    throw ValidationError("length scales do not match the input dimension");
  }
  if ((l_.array() <= 0.0).any() || !l_.allFinite()) throw ValidationError("length scales must be positive");
  if ((noise_.array() < 0.0).any() || !y_.allFinite() || !X_.allFinite()) {
    throw ValidationError("GP training data must be finite with nonnegative noise");
  }
  if (size() > 0) {
    auto f = factorize(training_covariance(l_));
    llt_ = std::move(f.llt);
    jitter_ = f.jitter;
    alpha_ = llt_.solve(y_);
  }
}

Eigen::MatrixXd ScalarGP::training_covariance(const Eigen::VectorXd& l) const {
  Eigen::MatrixXd K = kernel_matrix(X_, X_, l);
  K.diagonal() += noise_.array().square().matrix();
  return K;
}

ScalarGP::Factor ScalarGP::factorize(const Eigen::MatrixXd& K) const {
  Factor f;
  f.llt.compute(K);
  if (usable(f.llt)) return f;
  const auto n = K.rows();
  for (double j = kJitterStart; j <= kJitterMax * (1.0 + 1e-9); j *= 10.0) {
    f.llt.compute(K + j * Eigen::MatrixXd::Identity(n, n));
    if (usable(f.llt)) {
      f.jitter = j;
      return f;
    }
  }
  throw NotPositiveDefinite("GP kernel matrix is not positive definite even with jitter");
}

Posterior ScalarGP::posterior(const Eigen::MatrixXd& Xq) const {
  if (Xq.cols() != dim_) throw ValidationError("query dimension mismatch");
  Posterior p;
  p.cov = kernel_matrix(Xq, Xq, l_);
  if (size() == 0) {
    p.mean = Eigen::VectorXd::Zero(Xq.rows());
    return p;
  }
  const Eigen::MatrixXd Ks = kernel_matrix(X_, Xq, l_);
  p.mean = Ks.transpose() * alpha_;
  const Eigen::MatrixXd V = llt_.matrixL().solve(Ks);
  p.cov.noalias() -= V.transpose() * V;
  return p;
}

std::pair<double, double> ScalarGP::predict(const Eigen::VectorXd& x) const {
  const auto p = posterior(x.transpose());
  return {p.mean[0], std::max(p.cov(0, 0), 0.0)};
}

double ScalarGP::log_marginal_likelihood() const {
  const double n = static_cast<double>(size());
  if (size() == 0) return 0.0;
  const Eigen::MatrixXd L = llt_.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  return -0.5 * y_.dot(alpha_) - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double ScalarGP::log_marginal_likelihood(const Eigen::VectorXd& l, Eigen::VectorXd* grad) const {
  if (l.size() != dim_) throw ValidationError("length scale dimension mismatch");
  const auto n = X_.rows();
  if (n == 0) {
    if (grad) *grad = Eigen::VectorXd::Zero(dim_);
    return 0.0;
  }
  const Eigen::MatrixXd K = kernel_matrix(X_, X_, l);
  Eigen::MatrixXd Kn = K;
  Kn.diagonal() += noise_.array().square().matrix();
  const auto f = factorize(Kn);
  const Eigen::VectorXd a = f.llt.solve(y_);
  const Eigen::MatrixXd L = f.llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const double lml = -0.5 * y_.dot(a) - 0.5 * logdet -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (grad) {
    const Eigen::MatrixXd W = a * a.transpose() - f.llt.solve(Eigen::MatrixXd::Identity(n, n));
    grad->resize(dim_);
    for (int d = 0; d < dim_; ++d) {
      double g = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const double diff = (X_(i, d) - X_(j, d)) / l[d];
          g += W(i, j) * K(i, j) * diff * diff;
        }
      }
      (*grad)[d] = 0.5 * g;
    }
  }
  return lml;
}

namespace {

// Minimizes -LML over u in R^d with log l = log lo + (log hi - log lo) * sigmoid(u),
// which keeps every iterate inside the bounds.
class NegLogMarginal final : public ceres::FirstOrderFunction {
 public:
  NegLogMarginal(const ScalarGP& gp, Eigen::VectorXd log_lo, Eigen::VectorXd log_hi)
      : gp_(gp), log_lo_(std::move(log_lo)), log_hi_(std::move(log_hi)) {}

  Eigen::VectorXd length_scales(const double* u) const {
    Eigen::VectorXd l(log_lo_.size());
    for (Eigen::Index d = 0; d < l.size(); ++d) {
      l[d] = std::exp(log_lo_[d] + (log_hi_[d] - log_lo_[d]) * sigmoid(u[d]));
    }
    return l;
  }

  static double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

  bool Evaluate(const double* u, double* cost, double* gradient) const override {
    try {
      Eigen::VectorXd g;
      const double lml = gp_.log_marginal_likelihood(length_scales(u), gradient ? &g : nullptr);
      if (!std::isfinite(lml)) return false;
      *cost = -lml;
      if (gradient) {
        for (Eigen::Index d = 0; d < g.size(); ++d) {
          const double s = sigmoid(u[d]);
          gradient[d] = -g[d] * (log_hi_[d] - log_lo_[d]) * s * (1.0 - s);
        }
      }
      return true;
    } catch (const NotPositiveDefinite&) {
      return false;
    }
  }

  int NumParameters() const override { return static_cast<int>(log_lo_.size()); }

 private:
  const ScalarGP& gp_;
  Eigen::VectorXd log_lo_;
  Eigen::VectorXd log_hi_;
};

double logit(double s) {
  s = std::clamp(s, 1e-9, 1.0 - 1e-9);
  return std::log(s / (1.0 - s));
}

}  // namespace

ScalarGP ScalarGP::optimized(const OptimizerConfig& cfg) const {
  if (size() < 2) return *this;
  const Eigen::VectorXd log_lo = bounds_.lo.array().log();
  const Eigen::VectorXd log_hi = bounds_.hi.array().log();
  if ((log_hi.array() < log_lo.array()).any()) throw ValidationError("inverted length-scale bounds");

  auto* fn = new NegLogMarginal(*this, log_lo, log_hi);
  ceres::GradientProblem problem(fn);
  ceres::GradientProblemSolver::Options opts;
  opts.line_search_direction_type = ceres::BFGS;
  opts.max_num_iterations = cfg.max_iterations;
  opts.logging_type = ceres::SILENT;
  // Polynomial interpolation warns through glog whenever the objective is
  // flat along the search line (length scales pinned at a bound).
  opts.line_search_interpolation_type = ceres::BISECTION;
  opts.function_tolerance = 1e-12;
  opts.gradient_tolerance = 1e-10;
  opts.parameter_tolerance = 1e-12;

  auto to_u = [&](const Eigen::VectorXd& l) {
    Eigen::VectorXd u(dim_);
    for (int d = 0; d < dim_; ++d) {
      const double span = log_hi[d] - log_lo[d];
      u[d] = span > 0.0 ? logit((std::log(l[d]) - log_lo[d]) / span) : 0.0;
    }
    return u;
  };

  // Starts: current scales, the box midpoint, then log-uniform draws.
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(l_.cwiseMax(bounds_.lo).cwiseMin(bounds_.hi));
  starts.push_back(((log_lo + log_hi) * 0.5).array().exp().matrix());
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n_random = cfg.starts_per_dimension * dim_;
  for (int s = 0; s < n_random; ++s) {
    Eigen::VectorXd l(dim_);
    for (int d = 0; d < dim_; ++d) l[d] = std::exp(log_lo[d] + (log_hi[d] - log_lo[d]) * unif(rng));
    starts.push_back(l);
  }

  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_l = starts.front();
  for (const auto& start : starts) {
    Eigen::VectorXd u = to_u(start);
    double c0 = 0.0;
    if (fn->Evaluate(u.data(), &c0, nullptr) && c0 < best_cost) {
      best_cost = c0;
      best_l = fn->length_scales(u.data());
    }
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(opts, problem, u.data(), &summary);
    double c1 = 0.0;
    if (fn->Evaluate(u.data(), &c1, nullptr) && c1 < best_cost) {
      best_cost = c1;
      best_l = fn->length_scales(u.data());
    }
  }
  best_l = best_l.cwiseMax(bounds_.lo).cwiseMin(bounds_.hi);
  return ScalarGP(X_, y_, noise_, best_l, bounds_);
}

}  // namespace cardiorom::gp
