#include "cardiorom/pipeline/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "cardiorom/errors.hpp"
#include "cardiorom/pipeline/artifacts.hpp"

namespace cardiorom::pipeline {

namespace {

constexpr int kConfigVersion = 1;

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> k{
      "version", "params_file", "rom",   "seed",   "lattice", "population",
      "basis",   "hull",        "unloaded_volume_fraction", "simulation", "oracle",
      "noise",   "prior",       "chain", "gp",     "uq",      "trust_threshold"};
  return k;
}

}  // namespace

void PipelineConfig::validate() const {
  rom.validate();
  if (lattice.n_theta < 3 || lattice.n_phi < 3) throw ValidationError("lattice needs at least 3x3 points");
  if (n_geom < 1) throw ValidationError("n_geom must be positive");
  if (n_pop < n_geom + 2) throw ValidationError("n_pop must exceed n_geom + 1 to span a hull");
  if (!(hull_fraction > 0.0 && hull_fraction <= 1.0)) throw ValidationError("hull fraction must be in (0, 1]");
  if (!(unloaded_volume_fraction > 0.0 && unloaded_volume_fraction <= 1.0)) {
    throw ValidationError("unloaded_volume_fraction must be in (0, 1]");
  }
  if (!(sim.dt > 0.0) || sim.n_cycles < 2) throw ValidationError("simulation needs dt > 0 and at least 2 cycles");
  if (oracle.source != "synthetic" && oracle.source != "files") {
    throw ValidationError("oracle source must be 'synthetic' or 'files'");
  }
  if (oracle.source == "files" && !std::filesystem::is_directory(oracle.trace_dir)) {
    throw ValidationError("trace directory not found: " + oracle.trace_dir.string());
  }
  if (oracle.noise_scale < 0.0) throw ValidationError("oracle noise_scale must be nonnegative");
  if (std::abs(static_cast<double>(oracle.grid.n) * oracle.grid.dt - rom.tcycle) > 1e-9 * rom.tcycle) {
    throw ValidationError("data grid must cover exactly one cycle");
  }
  prior.validate();
  chain.validate();
  if (uq.n_mc < 100) throw ValidationError("n_mc must be at least 100");
  if (uq.levels.empty()) throw ValidationError("at least one credible level is required");
  for (double l : uq.levels) {
    if (!(l > 0.0 && l < 1.0)) throw ValidationError("credible levels must be in (0, 1)");
  }
  if (!(uq.max_failure_rate >= 0.0 && uq.max_failure_rate < 1.0)) {
    throw ValidationError("max_failure_rate must be in [0, 1)");
  }
  if (uq.histogram_bins < 1) throw ValidationError("histogram_bins must be positive");
  if (!(trust_threshold > 0.0)) throw ValidationError("trust threshold must be positive");
}

calibration::CalibrationConfig PipelineConfig::calibration_config() const {
  calibration::CalibrationConfig c;
  c.noise = noise;
  c.prior = prior;
  c.chain = chain;
  c.sim = sim;
  return c;
}

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().count(key)) throw ParseError("unknown config key '" + key + "'");
  }
  if (j.value("version", kConfigVersion) != kConfigVersion) throw ParseError("unsupported config version");

  PipelineConfig c;
  try {
    if (j.contains("params_file") && !j.at("params_file").get<std::string>().empty()) {
      c.params_file = resolve(j.at("params_file").get<std::string>(), base_dir);
      if (!std::filesystem::exists(c.params_file)) {
        throw ValidationError("parameter file not found: " + c.params_file.string());
      }
      c.rom = onefiber::load_rom_parameters(c.params_file.string());
    }
    if (j.contains("rom")) {
      // Inline values override the file.
      nlohmann::json merged = onefiber::to_json(c.rom);
      merged.merge_patch(j.at("rom"));
      c.rom = onefiber::rom_parameters_from_json(merged);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("lattice")) {
      c.lattice.n_theta = j.at("lattice").value("n_theta", c.lattice.n_theta);
      c.lattice.n_phi = j.at("lattice").value("n_phi", c.lattice.n_phi);
    }
    if (j.contains("population")) {
      const auto& p = j.at("population");
      c.n_pop = p.value("n_pop", c.n_pop);
      if (p.contains("filters")) {
        const auto& f = p.at("filters");
        c.filters.min_wall_thickness = f.value("min_wall_thickness", c.filters.min_wall_thickness);
        c.filters.max_length_to_diameter = f.value("max_length_to_diameter", c.filters.max_length_to_diameter);
        c.filters.min_transmural_gap = f.value("min_transmural_gap", c.filters.min_transmural_gap);
      }
    }
    if (j.contains("basis")) c.n_geom = j.at("basis").value("n_geom", c.n_geom);
    if (j.contains("hull")) c.hull_fraction = j.at("hull").value("fraction", c.hull_fraction);
    c.unloaded_volume_fraction = j.value("unloaded_volume_fraction", c.unloaded_volume_fraction);
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      c.sim.dt = s.value("dt", c.sim.dt);
      c.sim.n_cycles = s.value("n_cycles", c.sim.n_cycles);
      c.sim.volume_tol = s.value("volume_tol", c.sim.volume_tol);
      c.sim.max_iterations = s.value("max_iterations", c.sim.max_iterations);
    }
    c.oracle.grid.dt = c.sim.dt;
    c.oracle.grid.n = static_cast<Eigen::Index>(std::llround(c.rom.tcycle / c.sim.dt));
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      c.oracle.source = o.value("source", c.oracle.source);
      if (o.contains("trace_dir")) c.oracle.trace_dir = resolve(o.at("trace_dir").get<std::string>(), base_dir);
      c.oracle.noise_scale = o.value("noise_scale", c.oracle.noise_scale);
      if (o.contains("field") && !o.at("field").is_null()) c.oracle.field = o.at("field");
      if (o.contains("grid")) {
        const auto& g = o.at("grid");
        c.oracle.grid.dt = g.value("dt", c.oracle.grid.dt);
        c.oracle.grid.n = g.value("n", c.oracle.grid.n);
        c.oracle.grid.span_tolerance = g.value("span_tolerance", c.oracle.grid.span_tolerance);
      }
    }
    if (j.contains("noise")) c.noise = calibration::noise_spec_from_json(j.at("noise"));
    if (j.contains("prior")) c.prior = calibration::prior_from_json(j.at("prior"));
    if (j.contains("chain")) c.chain = calibration::chain_config_from_json(j.at("chain"));
    if (j.contains("gp")) c.gp = gp::vector_gp_config_from_json(j.at("gp"));
    if (j.contains("uq")) {
      const auto& u = j.at("uq");
      c.uq.n_mc = u.value("n_mc", c.uq.n_mc);
      if (u.contains("levels")) c.uq.levels = u.at("levels").get<std::vector<double>>();
      c.uq.max_failure_rate = u.value("max_failure_rate", c.uq.max_failure_rate);
      c.uq.histogram_bins = u.value("histogram_bins", c.uq.histogram_bins);
    }
    c.trust_threshold = j.value("trust_threshold", c.trust_threshold);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["version"] = kConfigVersion;
  j["params_file"] = c.params_file.string();
  auto rom = onefiber::to_json(c.rom);
  rom.erase("version");
  j["rom"] = rom;
  j["seed"] = c.seed;
  j["lattice"] = {{"n_theta", c.lattice.n_theta}, {"n_phi", c.lattice.n_phi}};
  j["population"] = {{"n_pop", c.n_pop},
                     {"filters",
                      {{"min_wall_thickness", c.filters.min_wall_thickness},
                       {"max_length_to_diameter", c.filters.max_length_to_diameter},
                       {"min_transmural_gap", c.filters.min_transmural_gap}}}};
  j["basis"] = {{"n_geom", c.n_geom}};
  j["hull"] = {{"fraction", c.hull_fraction}};
  j["unloaded_volume_fraction"] = c.unloaded_volume_fraction;
  j["simulation"] = {{"dt", c.sim.dt},
                     {"n_cycles", c.sim.n_cycles},
                     {"volume_tol", c.sim.volume_tol},
                     {"max_iterations", c.sim.max_iterations}};
  j["oracle"] = {{"source", c.oracle.source},
                 {"trace_dir", c.oracle.trace_dir.string()},
                 {"noise_scale", c.oracle.noise_scale},
                 {"field", c.oracle.field ? *c.oracle.field : nlohmann::json(nullptr)},
                 {"grid",
                  {{"dt", c.oracle.grid.dt},
                   {"n", c.oracle.grid.n},
                   {"span_tolerance", c.oracle.grid.span_tolerance}}}};
  j["noise"] = calibration::to_json(c.noise);
  j["prior"] = calibration::to_json(c.prior);
  j["chain"] = calibration::to_json(c.chain);
  j["gp"] = gp::to_json(c.gp);
  j["uq"] = {{"n_mc", c.uq.n_mc},
             {"levels", c.uq.levels},
             {"max_failure_rate", c.uq.max_failure_rate},
             {"histogram_bins", c.uq.histogram_bins}};
  j["trust_threshold"] = c.trust_threshold;
  return j;
}

std::string config_hash(const PipelineConfig& c) { return sha256_hex(canonical_dump(to_json(c))); }

std::uint64_t stream_seed(const PipelineConfig& c, SeedStream s, std::uint64_t index) {
  return derive_seed(c.seed, static_cast<std::uint64_t>(s), index);
}

}  // namespace cardiorom::pipeline
