#pragma once

#include <cstdint>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace cardiorom::gp {

/// exp(-sum_d (a_d - b_d)^2 / (2 l_d^2))
double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& l);

/// Rows of A and B are points.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::VectorXd& l);

struct LengthScaleBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  bool contains(const Eigen::VectorXd& l) const;
};

/// Per-dimension input range; dimensions with zero spread get 1.
Eigen::VectorXd input_ranges(const Eigen::MatrixXd& X);

/// [lo_frac * range, hi_frac * range] per dimension.
LengthScaleBounds default_bounds(const Eigen::MatrixXd& X, double lo_frac = 0.02,
                                 double hi_frac = 2.0);

struct OptimizerConfig {
  int starts_per_dimension = 8;
  std::uint64_t seed = 0;
  int max_iterations = 200;
};

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Zero-mean GP regression with an anisotropic RBF kernel and per-point
/// Gaussian observation noise (standard deviations). Immutable once built.
class ScalarGP {
 public:
  /// Prior only: mean 0, unit variance.
  explicit ScalarGP(int dimension = 1);

  /// Rows of X are inputs. Throws NotPositiveDefinite when the kernel matrix
  /// cannot be factorized even with the maximum jitter.
  ScalarGP(Eigen::MatrixXd X, Eigen::VectorXd y, Eigen::VectorXd noise_sd,
           Eigen::VectorXd length_scales, LengthScaleBounds bounds);

  int dimension() const { return dim_; }
  int size() const { return static_cast<int>(y_.size()); }
  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& targets() const { return y_; }
  const Eigen::VectorXd& noise_sd() const { return noise_; }
  const Eigen::VectorXd& length_scales() const { return l_; }
  const LengthScaleBounds& bounds() const { return bounds_; }
  double jitter() const { return jitter_; }

  Posterior posterior(const Eigen::MatrixXd& Xq) const;
  /// Mean and variance at one point.
  std::pair<double, double> predict(const Eigen::VectorXd& x) const;

  double log_marginal_likelihood() const;

  /// Log marginal likelihood at other length scales; fills the gradient with
  /// respect to log length scales when `grad` is non-null.
  double log_marginal_likelihood(const Eigen::VectorXd& l, Eigen::VectorXd* grad) const;

  /// Copy with length scales maximizing the marginal likelihood inside the
  /// bounds. Returns *this unchanged for fewer than two observations.
  ScalarGP optimized(const OptimizerConfig& cfg = {}) const;

 private:
  struct Factor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
  };
  Factor factorize(const Eigen::MatrixXd& K) const;
  Eigen::MatrixXd training_covariance(const Eigen::VectorXd& l) const;

  int dim_ = 1;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::VectorXd noise_;
  Eigen::VectorXd l_;
  LengthScaleBounds bounds_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

}  // namespace cardiorom::gp
