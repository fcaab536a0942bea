#pragma once

// Discrete (theta, phi) point lattices on the endo- and epicardial surfaces.
// The flattened lattice is the shape vector used by the modal decomposition.

#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "cardiorom/geometry/ellipsoid.hpp"

namespace cardiorom::geometry {

struct LatticeSize {
  int n_theta = 16;
  int n_phi = 32;

  int points_per_surface() const { return n_theta * n_phi; }
  /// Length of the flattened endo+epi vector.
  Eigen::Index shape_length() const { return 6 * static_cast<Eigen::Index>(points_per_surface()); }
};

/// Points are stored row-wise, theta-major: row j*n_phi + k holds
/// (theta_j, phi_k). theta_0 is the truncation plane, theta_{n_theta-1} = pi.
struct SurfaceGrid {
  LatticeSize size;
  Eigen::VectorXd theta_endo;
  Eigen::VectorXd theta_epi;
  Eigen::VectorXd phi;
  Eigen::MatrixX3d endo;
  Eigen::MatrixX3d epi;

  /// [endo x0 y0 z0 x1 ... , epi x0 y0 z0 ...]
  Eigen::VectorXd flatten() const;
};

SurfaceGrid surface_grid(const EllipsoidParams& g, int n_theta, int n_phi);
SurfaceGrid surface_grid(const EllipsoidParams& g, LatticeSize size = {});

/// Rebuilds the endo/epi point blocks of a flattened shape vector.
void unflatten(const Eigen::VectorXd& X, LatticeSize size, Eigen::MatrixX3d& endo,
               Eigen::MatrixX3d& epi);

/// Volume enclosed by one lattice surface closed by a flat fan at its first
/// theta ring.
double lattice_enclosed_volume(const Eigen::MatrixX3d& pts, LatticeSize size);

struct LatticeVolumes {
  double cavity;
  double wall;
};
LatticeVolumes lattice_volumes(const Eigen::VectorXd& X, LatticeSize size);

void write_surface_csv(std::ostream& out, const SurfaceGrid& grid);

}  // namespace cardiorom::geometry
