#pragma once

#include <vector>

#include <Eigen/Core>

namespace cardiorom::podgeom {

/// Convex hull of a point cloud in R^d (d >= 2) as simplicial facets with
/// outward unit normals. Built by incremental insertion; points within `eps`
/// of a facet plane count as inside.
class ConvexHull {
 public:
  struct Facet {
    std::vector<int> vertices;  // d point indices
    Eigen::VectorXd normal;
    double offset;  // normal . x <= offset inside
  };

  /// Rows of `points` are the points. Throws DegenerateHull when the cloud
  /// does not span R^d.
  explicit ConvexHull(const Eigen::MatrixXd& points, double eps = 1e-9);

  const std::vector<Facet>& facets() const { return facets_; }
  /// Sorted indices of hull vertices.
  std::vector<int> vertices() const;
  bool contains(const Eigen::VectorXd& x) const;
  /// Largest signed distance of x beyond any facet (<= 0 inside).
  double max_violation(const Eigen::VectorXd& x) const;
  int dimension() const { return static_cast<int>(points_.cols()); }

 private:
  Facet make_facet(std::vector<int> verts) const;
  void insert(int idx);

  Eigen::MatrixXd points_;
  double eps_;
  Eigen::VectorXd interior_;
  std::vector<Facet> facets_;
};

struct HullSelection {
  std::vector<int> vertices;  // indices into the full cloud, sorted
  double fraction = 1.0;       // share of the cloud inside or on the returned hull
  int removed = 0;             // vertices dropped by pruning
};

/// Hull of the cloud, then repeatedly drops the hull vertex with the lowest
/// density under a Gaussian fitted to the full cloud and recomputes, until the
/// share of cloud points inside or on the hull first falls to target_fraction
/// or below.
HullSelection select_training_hull(const Eigen::MatrixXd& coeffs, double target_fraction = 0.90,
                                   double eps = 1e-9);

}  // namespace cardiorom::podgeom
