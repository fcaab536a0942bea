#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cardiorom/calibration/noise.hpp"
#include "cardiorom/onefiber/parameters.hpp"
#include "cardiorom/onefiber/simulator.hpp"

namespace cardiorom::oracle {

/// theta(c) = base + slope . z + amp * tanh(dir . z), z = (c - center) / scale.
struct FactorField {
  double base = 1.0;
  Eigen::VectorXd slope;
  double amp = 0.0;
  Eigen::VectorXd dir;
};

struct GroundTruthField {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  std::array<FactorField, 4> factors;

  int dimension() const { return static_cast<int>(center.size()); }
  Eigen::Vector4d operator()(const Eigen::VectorXd& c) const;
  /// d theta_k / d c_j by central differences of the closed form.
  Eigen::Matrix4Xd jacobian(const Eigen::VectorXd& c) const;

  /// Throws ConstraintViolation unless every output over `points` (rows) lies
  /// in [0.5, 1.5] with beta >= 0.2.
  void check_range(const Eigen::MatrixXd& points) const;
};

/// Default field in n_geom dimensions: alpha, gamma and lambda grow with the
/// first coefficient, beta falls, each with a small tanh bend.
GroundTruthField default_field(const Eigen::VectorXd& center, const Eigen::VectorXd& scale);

nlohmann::json to_json(const GroundTruthField& f);
GroundTruthField field_from_json(const nlohmann::json& j);

/// Steady ROM cycle at theta*(c) plus one correlated noise draw scaled by
/// `noise_scale` (0 returns the clean trace).
onefiber::PVTrace synth_fom_trace(const Eigen::Vector4d& theta_true,
                                  const onefiber::ROMParameters& params,
                                  const onefiber::SimulationOptions& sim,
                                  const calibration::NoiseModel& noise, std::uint64_t seed,
                                  double noise_scale = 1.0);

struct GridSpec {
  double dt = 2.0;
  Eigen::Index n = 400;
  double span_tolerance = 0.01;
};

/// Reads `t_ms,p_mmHg,V_ml` (extra columns ignored) and resamples one cycle
/// onto the grid. ParseError for malformed rows or non-increasing time,
/// GridError when the covered span differs from n*dt by more than the tolerance.
onefiber::PVTrace ingest_fom_csv(const std::string& path, const GridSpec& grid);
onefiber::PVTrace ingest_fom_csv(std::istream& in, const GridSpec& grid);

enum class Provenance { Synthetic, File };

struct FomRecord {
  int index = 0;
  Eigen::VectorXd c;
  std::string trace_file;
  Provenance provenance = Provenance::Synthetic;
  Eigen::Vector4d theta_true = Eigen::Vector4d::Ones();
  std::uint64_t seed = 0;
};

nlohmann::json dataset_manifest(const std::vector<FomRecord>& records);
std::vector<FomRecord> dataset_from_manifest(const nlohmann::json& j);

}  // namespace cardiorom::oracle
