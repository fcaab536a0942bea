#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardiorom/calibration/calibrate.hpp"
#include "cardiorom/gp/vector_gp.hpp"
#include "cardiorom/onefiber/parameters.hpp"
#include "cardiorom/onefiber/simulator.hpp"
#include "cardiorom/oracle/oracle.hpp"
#include "cardiorom/podgeom/population.hpp"

namespace cardiorom::pipeline {

/// Where training traces come from.
struct OracleConfig {
  /// "synthetic" or "files". With files, traces are read from
  /// `trace_dir/trace_<index>.csv` for each hull vertex index.
  std::string source = "synthetic";
  std::filesystem::path trace_dir;
  /// Multiplier on the correlated noise draw (0: clean traces).
  double noise_scale = 1.0;
  /// Explicit field; absent means the default field centered on the population.
  std::optional<nlohmann::json> field;
  oracle::GridSpec grid;
};

struct UQConfig {
  int n_mc = 10000;
  std::vector<double> levels{0.95, 0.99};
  /// Draws may fail up to this share before the prediction is abandoned.
  double max_failure_rate = 0.01;
  int histogram_bins = 40;
};

struct PipelineConfig {
  std::filesystem::path params_file;  // empty: built-in defaults
  onefiber::ROMParameters rom;
  std::uint64_t seed = 42;

  geometry::LatticeSize lattice;
  int n_pop = 200;
  podgeom::ShapeFilters filters;
  int n_geom = 4;
  double hull_fraction = 0.90;

  /// The population shapes are end-diastolic; the ROM needs the unloaded
  /// cavity volume, taken as this multiple of the lattice cavity volume.
  double unloaded_volume_fraction = 0.45;

  onefiber::SimulationOptions sim;
  OracleConfig oracle;
  calibration::NoiseSpec noise;
  calibration::Prior prior;
  calibration::ChainConfig chain;
  gp::VectorGPConfig gp;
  UQConfig uq;
  double trust_threshold = 0.1;

  /// Throws ValidationError on inconsistent values or unresolvable files.
  void validate() const;
  /// Calibration settings shared by every vertex; the chain seed is set per vertex.
  calibration::CalibrationConfig calibration_config() const;
};

/// Reads a config. Relative paths resolve against `base_dir`. Missing keys
/// keep their defaults; unknown top-level keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& c);

/// SHA-256 of the canonical JSON form.
std::string config_hash(const PipelineConfig& c);

/// Seed streams derived from the master seed.
enum class SeedStream : std::uint64_t {
  Population = 1,
  Oracle = 2,
  Chain = 3,
  Optimizer = 4,
  MonteCarlo = 5,
};
std::uint64_t stream_seed(const PipelineConfig& c, SeedStream s, std::uint64_t index = 0);

}  // namespace cardiorom::pipeline
