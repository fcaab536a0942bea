#include "cardiorom/geometry/surface.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <Eigen/Geometry>

#include "cardiorom/errors.hpp"

namespace cardiorom::geometry {

Eigen::VectorXd SurfaceGrid::flatten() const {
  const Eigen::Index n = endo.rows();
  Eigen::VectorXd X(6 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.segment<3>(3 * i) = endo.row(i).transpose();
    X.segment<3>(3 * (n + i)) = epi.row(i).transpose();
  }
  return X;
}

namespace {

void fill_surface(double C, double xi, const Eigen::VectorXd& theta, const Eigen::VectorXd& phi,
                  Eigen::MatrixX3d& out) {
  const Eigen::Index n_phi = phi.size();
  out.resize(theta.size() * n_phi, 3);
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    for (Eigen::Index k = 0; k < n_phi; ++k) {
      out.row(j * n_phi + k) = prolate_point(C, xi, theta[j], phi[k]).transpose();
    }
  }
}

}  // namespace

SurfaceGrid surface_grid(const EllipsoidParams& g, int n_theta, int n_phi) {
  if (n_theta < 2 || n_phi < 2) throw ValidationError("lattice needs at least 2x2 points");
  g.validate();
  SurfaceGrid s;
  s.size = {n_theta, n_phi};
  s.phi.resize(n_phi);
  for (int k = 0; k < n_phi; ++k) s.phi[k] = 2.0 * std::numbers::pi * k / n_phi;
  auto thetas = [&](double xi) {
    const double t0 = truncation_angle(g.C, g.H, xi);
    Eigen::VectorXd t(n_theta);
    for (int j = 0; j < n_theta; ++j) {
      t[j] = t0 + (std::numbers::pi - t0) * j / (n_theta - 1);
    }
    t[n_theta - 1] = std::numbers::pi;
    return t;
  };
  s.theta_endo = thetas(g.xi_endo);
  s.theta_epi = thetas(g.xi_epi);
  fill_surface(g.C, g.xi_endo, s.theta_endo, s.phi, s.endo);
  fill_surface(g.C, g.xi_epi, s.theta_epi, s.phi, s.epi);
  return s;
}

SurfaceGrid surface_grid(const EllipsoidParams& g, LatticeSize size) {
  return surface_grid(g, size.n_theta, size.n_phi);
}

void unflatten(const Eigen::VectorXd& X, LatticeSize size, Eigen::MatrixX3d& endo,
               Eigen::MatrixX3d& epi) {
  if (X.size() != size.shape_length()) throw ValidationError("shape vector length mismatch");
  const Eigen::Index n = size.points_per_surface();
  endo.resize(n, 3);
  epi.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    endo.row(i) = X.segment<3>(3 * i).transpose();
    epi.row(i) = X.segment<3>(3 * (n + i)).transpose();
  }
}

double lattice_enclosed_volume(const Eigen::MatrixX3d& pts, LatticeSize size) {
  const int nt = size.n_theta;
  const int np = size.n_phi;
  auto P = [&](int j, int k) -> Eigen::Vector3d { return pts.row(j * np + (k % np)).transpose(); };
  auto tet = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    return a.dot(b.cross(c)) / 6.0;
  };
  double v = 0.0;
  for (int j = 0; j + 1 < nt; ++j) {
    for (int k = 0; k < np; ++k) {
      v += tet(P(j, k), P(j + 1, k), P(j + 1, k + 1));
      v += tet(P(j, k), P(j + 1, k + 1), P(j, k + 1));
    }
  }
  Eigen::Vector3d centre = Eigen::Vector3d::Zero();
  for (int k = 0; k < np; ++k) centre += P(0, k);
  centre /= np;
  for (int k = 0; k < np; ++k) v += tet(centre, P(0, k), P(0, k + 1));
  return std::abs(v);
}

LatticeVolumes lattice_volumes(const Eigen::VectorXd& X, LatticeSize size) {
  Eigen::MatrixX3d endo;
  Eigen::MatrixX3d epi;
  unflatten(X, size, endo, epi);
  const double cav = lattice_enclosed_volume(endo, size);
  return {cav, lattice_enclosed_volume(epi, size) - cav};
}

void write_surface_csv(std::ostream& out, const SurfaceGrid& grid) {
  out << "surface,theta,phi,x,y,z\n";
  char buf[256];
  auto emit = [&](const char* name, const Eigen::VectorXd& theta, const Eigen::MatrixX3d& pts) {
    const Eigen::Index np = grid.phi.size();
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", name, theta[i / np],
                    grid.phi[i % np], pts(i, 0), pts(i, 1), pts(i, 2));
      out << buf;
    }
  };
  emit("endo", grid.theta_endo, grid.endo);
  emit("epi", grid.theta_epi, grid.epi);
}

}  // namespace cardiorom::geometry
