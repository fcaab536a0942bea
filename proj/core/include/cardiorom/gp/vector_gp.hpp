#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cardiorom/gp/scalar_gp.hpp"

namespace cardiorom::gp {

inline constexpr int kFactors = 4;
inline constexpr int kPairs = kFactors * (kFactors - 1) / 2;

/// Calibrated correction-factor moments at one geometry.
struct TrainingRecord {
  Eigen::VectorXd c;
  Eigen::Vector4d mu;
  Eigen::Matrix4d sigma_mat;

  /// Throws ValidationError unless sigma_mat is symmetric with a nonnegative
  /// diagonal and implied correlations in [-1, 1].
  void validate() const;
  /// Correlation matrix implied by sigma_mat; entries with a zero variance are 0.
  Eigen::Matrix4d correlation() const;
};

struct VectorGPConfig {
  double lo_fraction = 0.02;
  double hi_fraction = 2.0;
  /// Minimum normalized distance to existing inputs for a new record.
  double min_distance = 0.02;
  bool reoptimize_on_insert = true;
  OptimizerConfig optimizer;
};

struct FactorPrediction {
  Eigen::Vector4d mu;
  Eigen::Matrix4d sigma;      // after the positive-semidefinite shift
  Eigen::Vector4d sd;         // per-factor posterior std before the shift
  Eigen::Matrix4d rho;        // clamped correlations, unit diagonal
  double lambda_min = 0.0;    // min(eig, 0) of the unshifted matrix
};

/// Four mean GPs on (mu - 1) with per-record noise sqrt(Sigma_kk), and six
/// zero-noise GPs on the off-diagonal correlations. All share the inputs.
class VectorGP {
 public:
  VectorGP() = default;

  /// Builds and optimizes every component GP.
  static VectorGP train(std::vector<TrainingRecord> records, const VectorGPConfig& cfg = {});

  /// Builds the component GPs with given length scales, no optimization.
  /// `length_scales` holds 4 mean entries followed by 6 correlation entries.
  static VectorGP assemble(std::vector<TrainingRecord> records,
                           const std::vector<Eigen::VectorXd>& length_scales,
                           const VectorGPConfig& cfg = {});

  FactorPrediction predict_factors(const Eigen::VectorXd& c) const;

  /// Smallest input-range-normalized Euclidean distance to a training input.
  double min_normalized_distance(const Eigen::VectorXd& c) const;

  struct Insertion;
  /// Returns the updated GP (or a copy of *this when rejected).
  Insertion add_observation(const TrainingRecord& record) const;

  const std::vector<TrainingRecord>& records() const { return records_; }
  const VectorGPConfig& config() const { return cfg_; }
  const ScalarGP& mean_gp(int k) const { return mean_gps_.at(static_cast<std::size_t>(k)); }
  const ScalarGP& corr_gp(int i, int j) const;
  /// 4 mean then 6 correlation length-scale vectors.
  std::vector<Eigen::VectorXd> length_scales() const;
  int dimension() const { return records_.empty() ? 0 : static_cast<int>(records_.front().c.size()); }

  static std::string pair_name(int i, int j);
  static std::array<std::pair<int, int>, kPairs> pairs();

 private:
  static VectorGP build(std::vector<TrainingRecord> records, const VectorGPConfig& cfg,
                        const std::vector<Eigen::VectorXd>* length_scales);

  std::vector<TrainingRecord> records_;
  VectorGPConfig cfg_;
  std::vector<ScalarGP> mean_gps_;
  std::vector<ScalarGP> corr_gps_;
};

struct VectorGP::Insertion {
  VectorGP gp;
  bool accepted;
  double distance;
};

nlohmann::json to_json(const TrainingRecord& r);
TrainingRecord training_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const VectorGPConfig& c);
/// Missing keys keep their defaults.
VectorGPConfig vector_gp_config_from_json(const nlohmann::json& j);

/// Versioned GP state: records, length scales and config.
nlohmann::json to_json(const VectorGP& gp);
VectorGP vector_gp_from_json(const nlohmann::json& j);

}  // namespace cardiorom::gp
