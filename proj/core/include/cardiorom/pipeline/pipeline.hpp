#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cardiorom/geometry/surface.hpp"
#include "cardiorom/gp/vector_gp.hpp"
#include "cardiorom/oracle/oracle.hpp"
#include "cardiorom/pipeline/artifacts.hpp"
#include "cardiorom/pipeline/config.hpp"
#include "cardiorom/podgeom/basis.hpp"
#include "cardiorom/podgeom/hull.hpp"
#include "cardiorom/podgeom/population.hpp"

namespace cardiorom::pipeline {

/// ROM parameters for the lattice shape X(c): V0 is the configured fraction of
/// the lattice cavity volume, Vw the lattice wall volume.
onefiber::ROMParameters rom_params_for(const PipelineConfig& cfg, const podgeom::ShapeBasis& basis,
                                       const Eigen::VectorXd& c);

/// Reference lattice the basis deforms.
Eigen::VectorXd reference_shape(const PipelineConfig& cfg);

// Offline stages. Each reads its inputs from the store, writes its outputs
// and returns them. Errors are rethrown with the stage name in the message.
std::vector<podgeom::PopulationSample> stage_population(const PipelineConfig& cfg, ArtifactStore& store);
podgeom::ShapeBasis stage_basis(const PipelineConfig& cfg, ArtifactStore& store);
podgeom::HullSelection stage_hull(const PipelineConfig& cfg, ArtifactStore& store);
std::vector<oracle::FomRecord> stage_oracle(const PipelineConfig& cfg, ArtifactStore& store);
std::vector<gp::TrainingRecord> stage_calibrate(const PipelineConfig& cfg, ArtifactStore& store);
gp::VectorGP stage_gp_train(const PipelineConfig& cfg, ArtifactStore& store);

/// Oracle trace for one population point, written to traces/trace_<index>.csv.
oracle::FomRecord generate_trace(const PipelineConfig& cfg, ArtifactStore& store,
                                 const podgeom::ShapeBasis& basis, const oracle::GroundTruthField& field,
                                 int index, const Eigen::VectorXd& c);

/// Calibrates one stored trace; writes calibration/vertex_<index>.json.
gp::TrainingRecord calibrate_record(const PipelineConfig& cfg, ArtifactStore& store,
                                    const podgeom::ShapeBasis& basis, const oracle::FomRecord& rec);

/// All offline stages in order.
gp::VectorGP run_offline(const PipelineConfig& cfg, ArtifactStore& store);

// Artifact readers.
std::vector<podgeom::PopulationSample> load_population(const PipelineConfig& cfg, const ArtifactStore& store);
podgeom::ShapeBasis load_basis(const ArtifactStore& store);
/// Population coefficients, one row per sample.
Eigen::MatrixXd load_coefficients(const ArtifactStore& store);
oracle::GroundTruthField load_field(const ArtifactStore& store);
std::vector<gp::TrainingRecord> load_training(const ArtifactStore& store);
gp::VectorGP load_gp(const ArtifactStore& store);

/// Pointwise credible band at one level.
struct Band {
  double level = 0.0;
  std::vector<double> p_lo, p_med, p_hi;
  std::vector<double> V_lo, V_med, V_hi;
};

/// Quantiles of a scalar biomarker over the Monte-Carlo draws.
struct QuantileTriple {
  double lo = 0.0;
  double med = 0.0;
  double hi = 0.0;
};

struct SummaryQuantiles {
  double level = 0.0;
  QuantileTriple V_ED, V_ES, p_max, EF;
};

struct TrustCheck {
  double band_halfwidth_VED = 0.0;  // 99% half-width, ml
  double noise_level = 0.0;         // 2.576 * sigma_V_min, ml
  double ratio = 0.0;
  bool flag = false;                // true: prediction not trustworthy
};

struct Histogram {
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // integrates to 1
};

struct PredictionReport {
  Eigen::VectorXd c;
  Eigen::Vector4d mu_hat;
  Eigen::Matrix4d sigma_hat;
  Eigen::Vector4d factor_sd;
  double lambda_min = 0.0;
  double dt = 0.0;
  std::size_t n_steps = 0;
  std::vector<Band> bands;
  std::vector<SummaryQuantiles> summaries;
  TrustCheck trust;
  int n_draws = 0;
  int n_failed = 0;
  std::vector<Histogram> histograms;  // alpha, beta, gamma, lambda
  std::string gp_hash;
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Linear-interpolation sample quantile of sorted data, q in [0, 1].
double sorted_quantile(const std::vector<double>& sorted, double q);

/// GP prediction at c, Monte-Carlo propagation through the ROM, pointwise
/// bands and the trust check. Throws SimulationFailed when more than the
/// configured share of draws fail.
PredictionReport predict_at(const PipelineConfig& cfg, const podgeom::ShapeBasis& basis,
                            const gp::VectorGP& gp, const Eigen::VectorXd& c, std::uint64_t seed);

/// Fits the target lattice to the stored basis and predicts with the stored GP.
PredictionReport run_online(const PipelineConfig& cfg, const ArtifactStore& store,
                            const geometry::SurfaceGrid& target);

struct UpdateReport {
  bool accepted = false;
  double distance = 0.0;
  PredictionReport before;
  PredictionReport after;
  gp::VectorGP gp;
};

/// Adds a calibrated record to the GP and compares predictions at its input.
UpdateReport run_update(const PipelineConfig& cfg, const podgeom::ShapeBasis& basis,
                        const gp::VectorGP& gp, const gp::TrainingRecord& record);

/// Stored update: reads basis and GP state, writes the new GP state and
/// update_report.json when accepted.
UpdateReport run_update(const PipelineConfig& cfg, ArtifactStore& store,
                        const gp::TrainingRecord& record);

nlohmann::json to_json(const PredictionReport& r);
PredictionReport prediction_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UpdateReport& r);

/// Writes bands_<pct>.csv (`t,p_lo,p_med,p_hi,V_lo,V_med,V_hi`) per level,
/// pv_loop.csv (`V,p` of the median) and factor_density.csv. Returns the
/// file names written.
std::vector<std::string> emit_plot_data(const PredictionReport& r, const std::filesystem::path& dir);

/// p-V loop files (`cycle,V,p`) for plain traces.
std::vector<std::string> emit_plot_data(const std::vector<onefiber::PVTrace>& traces,
                                        const std::filesystem::path& dir);

}  // namespace cardiorom::pipeline
