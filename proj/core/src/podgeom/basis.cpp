#include "cardiorom/podgeom/basis.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "cardiorom/errors.hpp"

namespace cardiorom::podgeom {

Eigen::VectorXd ShapeBasis::cumulative_energy() const {
  const Eigen::VectorXd e = singular_values.array().square();
  Eigen::VectorXd out(e.size());
  double acc = 0.0;
  const double total = e.sum();
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    acc += e[i];
    out[i] = total > 0.0 ? acc / total : 0.0;
  }
  return out;
}

double ShapeBasis::coefficient_scale(int k) const {
  if (k < 0 || k >= singular_values.size() || n_samples < 1) {
    throw ValidationError("mode index out of range");
  }
  return singular_values[k] / std::sqrt(static_cast<double>(n_samples));
}

ShapeBasis build_basis(const Eigen::MatrixXd& shapes, const Eigen::VectorXd& x_ref, int n_geom,
                       geometry::LatticeSize lattice) {
  if (n_geom < 1) throw ValidationError("n_geom must be positive");
  if (shapes.rows() != x_ref.size() || x_ref.size() != lattice.shape_length()) {
    throw ValidationError("shape vectors do not match the lattice");
  }
  if (shapes.cols() < n_geom) throw DegenerateData("population smaller than n_geom");

  const Eigen::MatrixXd dX = shapes.colwise() - x_ref;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dX, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, s.size() ? s[0] : 0.0);
  if (s.size() < n_geom || s[n_geom - 1] <= tol) {
    throw DegenerateData("deformation matrix has rank below n_geom");
  }

  ShapeBasis b;
  b.lattice = lattice;
  b.x_ref = x_ref;
  b.singular_values = s;
  b.n_samples = static_cast<int>(shapes.cols());
  b.modes = svd.matrixU().leftCols(n_geom);
  // Fix the sign of each mode so that its largest-magnitude entry is positive.
  for (int k = 0; k < n_geom; ++k) {
    Eigen::Index i_max = 0;
    b.modes.col(k).cwiseAbs().maxCoeff(&i_max);
    if (b.modes(i_max, k) < 0.0) b.modes.col(k) *= -1.0;
  }
  return b;
}

Eigen::VectorXd reconstruct(const ShapeBasis& basis, const Eigen::VectorXd& c) {
  if (c.size() != basis.n_geom()) throw ValidationError("coefficient vector has wrong length");
  return basis.x_ref + basis.modes * c;
}

Eigen::VectorXd fit_coefficients(const ShapeBasis& basis, const Eigen::VectorXd& target) {
  if (target.size() != basis.x_ref.size()) throw ValidationError("target lattice mismatch");
  return basis.modes.transpose() * (target - basis.x_ref);
}

Eigen::VectorXd fit_coefficients(const ShapeBasis& basis, const geometry::SurfaceGrid& target) {
  if (target.size.n_theta != basis.lattice.n_theta || target.size.n_phi != basis.lattice.n_phi) {
    throw ValidationError("target lattice resolution differs from the basis");
  }
  return fit_coefficients(basis, target.flatten());
}

geometry::LatticeVolumes shape_volumes(const ShapeBasis& basis, const Eigen::VectorXd& c) {
  return geometry::lattice_volumes(reconstruct(basis, c), basis.lattice);
}

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const ShapeBasis& b) {
  nlohmann::json modes = nlohmann::json::array();
  for (int k = 0; k < b.n_geom(); ++k) modes.push_back(to_vec(b.modes.col(k)));
  return {{"version", 1},
          {"lattice", {{"n_theta", b.lattice.n_theta}, {"n_phi", b.lattice.n_phi}}},
          {"n_samples", b.n_samples},
          {"x_ref", to_vec(b.x_ref)},
          {"modes", modes},
          {"singular_values", to_vec(b.singular_values)}};
}

ShapeBasis basis_from_json(const nlohmann::json& j) {
  try {
    ShapeBasis b;
    b.lattice.n_theta = j.at("lattice").at("n_theta").get<int>();
    b.lattice.n_phi = j.at("lattice").at("n_phi").get<int>();
    b.n_samples = j.value("n_samples", 0);
    b.x_ref = from_vec(j.at("x_ref").get<std::vector<double>>());
    b.singular_values = from_vec(j.at("singular_values").get<std::vector<double>>());
    const auto& modes = j.at("modes");
    b.modes.resize(b.x_ref.size(), static_cast<Eigen::Index>(modes.size()));
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const auto col = modes[k].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(col.size()) != b.x_ref.size()) {
        throw ParseError("basis mode length differs from x_ref");
      }
      b.modes.col(static_cast<Eigen::Index>(k)) = from_vec(col);
    }
    if (b.x_ref.size() != b.lattice.shape_length()) throw ParseError("x_ref does not match lattice");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("basis file: ") + e.what());
  }
}

nlohmann::json coefficients_to_json(const Eigen::VectorXd& c) { return {{"c", to_vec(c)}}; }

Eigen::VectorXd coefficients_from_json(const nlohmann::json& j) {
  try {
    return from_vec(j.at("c").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("coefficients file: ") + e.what());
  }
}

}  // namespace cardiorom::podgeom
