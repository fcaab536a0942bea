#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cardiorom/geometry/surface.hpp"

namespace cardiorom::podgeom {

/// Truncated modal basis of shape deformations relative to a reference
/// lattice. `singular_values` keeps the full spectrum for energy reporting;
/// `modes` holds the first n_geom left singular vectors.
struct ShapeBasis {
  geometry::LatticeSize lattice;
  Eigen::VectorXd x_ref;
  Eigen::MatrixXd modes;
  Eigen::VectorXd singular_values;
  int n_samples = 0;

  int n_geom() const { return static_cast<int>(modes.cols()); }
  /// Cumulative fraction of squared singular values captured by modes 1..k.
  Eigen::VectorXd cumulative_energy() const;
  /// Typical coefficient magnitude of mode k over the population, s_k / sqrt(n).
  double coefficient_scale(int k) const;
};

/// Columns of `shapes` are population shape vectors.
ShapeBasis build_basis(const Eigen::MatrixXd& shapes, const Eigen::VectorXd& x_ref, int n_geom,
                       geometry::LatticeSize lattice);

Eigen::VectorXd reconstruct(const ShapeBasis& basis, const Eigen::VectorXd& c);
Eigen::VectorXd fit_coefficients(const ShapeBasis& basis, const Eigen::VectorXd& target);
Eigen::VectorXd fit_coefficients(const ShapeBasis& basis, const geometry::SurfaceGrid& target);

/// Cavity and wall volume (ml) of the lattice shape X(c).
geometry::LatticeVolumes shape_volumes(const ShapeBasis& basis, const Eigen::VectorXd& c);

nlohmann::json to_json(const ShapeBasis& basis);
ShapeBasis basis_from_json(const nlohmann::json& j);

nlohmann::json coefficients_to_json(const Eigen::VectorXd& c);
Eigen::VectorXd coefficients_from_json(const nlohmann::json& j);

}  // namespace cardiorom::podgeom
