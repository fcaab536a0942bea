#include "cardiorom/podgeom/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "cardiorom/errors.hpp"

namespace cardiorom::podgeom {

ConvexHull::Facet ConvexHull::make_facet(std::vector<int> verts) const {
  const auto d = points_.cols();
  Eigen::MatrixXd E(d - 1, d);
  for (Eigen::Index r = 1; r < d; ++r) {
    E.row(r - 1) = points_.row(verts[static_cast<std::size_t>(r)]) - points_.row(verts[0]);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullV);
  Eigen::VectorXd n = svd.matrixV().col(d - 1);
  double off = n.dot(points_.row(verts[0]).transpose());
  if (n.dot(interior_) > off) {
    n = -n;
    off = -off;
  }
  std::sort(verts.begin(), verts.end());
  return {std::move(verts), std::move(n), off};
}

ConvexHull::ConvexHull(const Eigen::MatrixXd& points, double eps) : points_(points), eps_(eps) {
  const auto n = static_cast<int>(points_.rows());
  const auto d = static_cast<int>(points_.cols());
  if (d < 2 || n < d + 1) throw DegenerateHull("too few points for a full-dimensional hull");

  // Initial simplex: greedily add the point farthest from the affine span.
  const double scale = std::max(1.0, points_.cwiseAbs().maxCoeff());
  std::vector<int> simplex;
  {
    Eigen::Index i0 = 0;
    points_.col(0).minCoeff(&i0);
    simplex.push_back(static_cast<int>(i0));
  }
  while (static_cast<int>(simplex.size()) < d + 1) {
    const auto k = static_cast<Eigen::Index>(simplex.size()) - 1;
    const Eigen::RowVectorXd o = points_.row(simplex[0]);
    Eigen::MatrixXd Q;
    if (k > 0) {
      Eigen::MatrixXd A(d, k);
      for (Eigen::Index j = 0; j < k; ++j) {
        A.col(j) = (points_.row(simplex[static_cast<std::size_t>(j + 1)]) - o).transpose();
      }
      Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ() * Eigen::MatrixXd::Identity(d, k);
    }
    double best = -1.0;
    int best_i = -1;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v = (points_.row(i) - o).transpose();
      if (k > 0) v -= Q * (Q.transpose() * v);
      const double dist = v.norm();
      if (dist > best) {
        best = dist;
        best_i = i;
      }
    }
    if (best <= 1e3 * eps_ * scale) throw DegenerateHull("point cloud is not full-dimensional");
    simplex.push_back(best_i);
  }

  interior_ = Eigen::VectorXd::Zero(d);
  for (int i : simplex) interior_ += points_.row(i).transpose();
  interior_ /= static_cast<double>(d + 1);

  for (int skip = 0; skip <= d; ++skip) {
    std::vector<int> verts;
    for (int j = 0; j <= d; ++j) {
      if (j != skip) verts.push_back(simplex[static_cast<std::size_t>(j)]);
    }
    facets_.push_back(make_facet(std::move(verts)));
  }

  const std::set<int> in_simplex(simplex.begin(), simplex.end());
  for (int i = 0; i < n; ++i) {
    if (!in_simplex.count(i)) insert(i);
  }
}

void ConvexHull::insert(int idx) {
  const Eigen::VectorXd p = points_.row(idx).transpose();
  std::vector<bool> visible(facets_.size(), false);
  bool any = false;
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    if (facets_[f].normal.dot(p) - facets_[f].offset > eps_) {
      visible[f] = true;
      any = true;
    }
  }
  if (!any) return;

  // Ridges of visible facets seen exactly once form the horizon.
  std::map<std::vector<int>, int> ridge_count;
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    if (!visible[f]) continue;
    const auto& v = facets_[f].vertices;
    for (std::size_t drop = 0; drop < v.size(); ++drop) {
      std::vector<int> ridge;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (j != drop) ridge.push_back(v[j]);
      }
      ++ridge_count[ridge];
    }
  }
  std::vector<Facet> kept;
  kept.reserve(facets_.size());
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    if (!visible[f]) kept.push_back(std::move(facets_[f]));
  }
  for (const auto& [ridge, count] : ridge_count) {
    if (count != 1) continue;
    auto verts = ridge;
    verts.push_back(idx);
    kept.push_back(make_facet(std::move(verts)));
  }
  facets_ = std::move(kept);
}

std::vector<int> ConvexHull::vertices() const {
  std::set<int> s;
  for (const auto& f : facets_) s.insert(f.vertices.begin(), f.vertices.end());
  return {s.begin(), s.end()};
}

double ConvexHull::max_violation(const Eigen::VectorXd& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& f : facets_) worst = std::max(worst, f.normal.dot(x) - f.offset);
  return worst;
}

bool ConvexHull::contains(const Eigen::VectorXd& x) const { return max_violation(x) <= eps_; }

HullSelection select_training_hull(const Eigen::MatrixXd& coeffs, double target_fraction,
                                   double eps) {
  const auto n = static_cast<int>(coeffs.rows());
  const auto d = static_cast<int>(coeffs.cols());
  if (n <= 2 * d) throw DegenerateHull("population too small for hull selection");
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    throw ValidationError("target fraction must lie in (0, 1]");
  }

  // Gaussian density ranking: larger Mahalanobis distance = lower likelihood.
  const Eigen::RowVectorXd mean = coeffs.colwise().mean();
  const Eigen::MatrixXd centred = coeffs.rowwise() - mean;
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n - 1);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw DegenerateHull("coefficient covariance is singular");
  }
  Eigen::VectorXd mahal(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd r = centred.row(i).transpose();
    mahal[i] = r.dot(ldlt.solve(r));
  }

  std::vector<int> active(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;

  auto evaluate = [&](HullSelection& sel) {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(active.size()), d);
    for (std::size_t r = 0; r < active.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = coeffs.row(active[r]);
    ConvexHull hull(sub, eps);
    sel.vertices.clear();
    for (int v : hull.vertices()) sel.vertices.push_back(active[static_cast<std::size_t>(v)]);
    int inside = 0;
    for (int i = 0; i < n; ++i) {
      if (hull.contains(coeffs.row(i).transpose())) ++inside;
    }
    sel.fraction = static_cast<double>(inside) / n;
  };

  HullSelection sel;
  evaluate(sel);
  while (sel.fraction > target_fraction) {
    int worst = sel.vertices.front();
    for (int v : sel.vertices) {
      if (mahal[v] > mahal[worst]) worst = v;
    }
    active.erase(std::find(active.begin(), active.end(), worst));
    ++sel.removed;
    evaluate(sel);
  }
  std::sort(sel.vertices.begin(), sel.vertices.end());
  return sel;
}

}  // namespace cardiorom::podgeom
