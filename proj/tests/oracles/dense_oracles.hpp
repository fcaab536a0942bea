#pragma once

// Textbook dense-matrix formulas used as independent references. They invert
// matrices explicitly (LU) where the library uses cached Cholesky factors.

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace oracles {

inline double rbf(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& l) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double u = (a[d] - b[d]) / l[d];
    s += u * u;
  }
  return std::exp(-0.5 * s);
}

inline Eigen::MatrixXd gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& l) {
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) K(i, j) = rbf(A.row(i).transpose(), B.row(j).transpose(), l);
  }
  return K;
}

struct DensePosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// mean = K*^T (K + S)^-1 y, cov = K** - K*^T (K + S)^-1 K*
inline DensePosterior gp_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& noise_sd, const Eigen::VectorXd& l,
                                   const Eigen::MatrixXd& Xq) {
  Eigen::MatrixXd K = gram(X, X, l);
  K.diagonal() += noise_sd.array().square().matrix();
  const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
  const Eigen::MatrixXd Ks = gram(X, Xq, l);
  return {Ks.transpose() * Kinv * y, gram(Xq, Xq, l) - Ks.transpose() * Kinv * Ks};
}

/// -1/2 y^T K^-1 y - 1/2 log|K| - n/2 log(2 pi)
inline double gp_log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& noise_sd, const Eigen::VectorXd& l) {
  Eigen::MatrixXd K = gram(X, X, l);
  K.diagonal() += noise_sd.array().square().matrix();
  const auto lu = K.fullPivLu();
  return -0.5 * y.dot(lu.inverse() * y) - 0.5 * std::log(lu.determinant()) -
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

/// log N(r; 0, S) by explicit inverse and determinant.
inline double gaussian_log_density(const Eigen::VectorXd& r, const Eigen::MatrixXd& S) {
  const auto lu = S.fullPivLu();
  return -0.5 * r.dot(lu.inverse() * r) - 0.5 * std::log(lu.determinant()) -
         0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi);
}

/// Posterior of theta for d = A theta + e, e ~ N(0, R), theta ~ N(m, P).
inline DensePosterior linear_gaussian_posterior(const Eigen::MatrixXd& A, const Eigen::VectorXd& d,
                                                const Eigen::MatrixXd& R, const Eigen::VectorXd& m,
                                                const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd Rinv = R.inverse();
  const Eigen::MatrixXd Pinv = P.inverse();
  const Eigen::MatrixXd cov = (A.transpose() * Rinv * A + Pinv).inverse();
  return {cov * (A.transpose() * Rinv * d + Pinv * m), cov};
}

/// Central difference of a scalar function.
template <class F>
double central_difference(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracles
