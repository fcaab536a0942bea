// Command-line front end for the offline and online stages.
//
//   cardiorom --config cfg.json --out run/ population
//   cardiorom --out run/ predict --index 17
//
// Exit codes: 0 success, 2 bad input, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cardiorom/errors.hpp"
#include "cardiorom/geometry/ellipsoid.hpp"
#include "cardiorom/pipeline/pipeline.hpp"

namespace cp = cardiorom::pipeline;

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cardiorom::ValidationError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw cardiorom::ParseError(path + ": " + e.what());
  }
}

// Coefficients of the prediction target from exactly one source.
Eigen::VectorXd target_coefficients(const cp::PipelineConfig& cfg, const cp::ArtifactStore& store,
                                    const std::string& coeffs_file, const std::string& geometry_file,
                                    int index) {
  const int given = !coeffs_file.empty() + !geometry_file.empty() + (index >= 0);
  if (given != 1) throw cardiorom::ValidationError("give exactly one of --coeffs, --geometry, --index");
  const auto basis = cp::load_basis(store);
  if (!coeffs_file.empty()) {
    auto c = cardiorom::podgeom::coefficients_from_json(read_json_file(coeffs_file));
    if (c.size() != basis.n_geom()) throw cardiorom::ValidationError("coefficient count does not match the basis");
    return c;
  }
  if (!geometry_file.empty()) {
    const auto g = cardiorom::geometry::ellipsoid_from_json(read_json_file(geometry_file));
    return cardiorom::podgeom::fit_coefficients(basis, cardiorom::geometry::surface_grid(g, cfg.lattice));
  }
  const auto coeffs = cp::load_coefficients(store);
  if (index >= coeffs.rows()) throw cardiorom::ValidationError("population index out of range");
  return coeffs.row(index).transpose();
}

void print_trust(const cp::PredictionReport& r) {
  std::printf("mu_hat   %.6f %.6f %.6f %.6f\n", r.mu_hat[0], r.mu_hat[1], r.mu_hat[2], r.mu_hat[3]);
  std::printf("V_ED 99%% half-width %.4f ml, noise level %.4f ml, ratio %.4f, %s\n",
              r.trust.band_halfwidth_VED, r.trust.noise_level, r.trust.ratio,
              r.trust.flag ? "FLAGGED" : "trusted");
  if (r.n_failed > 0) std::printf("%d of %d draws failed\n", r.n_failed, r.n_draws);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order cardiac model: offline training and online prediction"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "cardiorom_out";
  app.add_option("--config", config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out_dir, "Artifact directory");

  auto* population = app.add_subcommand("population", "Sample the synthetic population");
  auto* basis = app.add_subcommand("basis", "Build the modal shape basis and fit population coefficients");
  auto* hull = app.add_subcommand("hull", "Select training geometries on the pruned convex hull");
  auto* oracle = app.add_subcommand("oracle", "Produce or ingest training traces at the hull vertices");

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate correction factors at the hull vertices");
  int calibrate_index = -1;
  calibrate->add_option("--index", calibrate_index,
                        "Calibrate one population sample instead and write records/record_<index>.json");

  auto* gp_train = app.add_subcommand("gp-train", "Train the correction-factor GP");
  auto* offline = app.add_subcommand("offline", "Run every offline stage");

  auto* predict = app.add_subcommand("predict", "Predict p-V bands for a geometry");
  std::string coeffs_file, geometry_file, report_name = "prediction.json";
  int predict_index = -1;
  predict->add_option("--coeffs", coeffs_file, "Coefficient file {c: [...]}")->check(CLI::ExistingFile);
  predict->add_option("--geometry", geometry_file, "Ellipsoid parameter file")->check(CLI::ExistingFile);
  predict->add_option("--index", predict_index, "Population sample index");
  predict->add_option("--report", report_name, "Report file name inside --out");

  auto* update = app.add_subcommand("update", "Insert a calibrated record into the GP");
  std::string record_file;
  update->add_option("--record", record_file, "Training record JSON")->required()->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("plot", "Write plot-ready CSV files from a prediction report");
  std::string plot_report, plot_dir;
  plot->add_option("--report", plot_report, "Prediction report (default <out>/prediction.json)");
  plot->add_option("--dir", plot_dir, "Output directory (default <out>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto cfg = config_path.empty() ? cp::config_from_json(nlohmann::json::object())
                                   : cp::load_config(config_path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    cp::ArtifactStore store(out_dir);

    if (*population) {
      const auto pop = cp::stage_population(cfg, store);
      std::printf("%zu samples -> %s\n", pop.size(), store.path("population.json").c_str());
    } else if (*basis) {
      const auto b = cp::stage_basis(cfg, store);
      const auto e = b.cumulative_energy();
      std::printf("%d modes, captured energy %.4f\n", b.n_geom(), e[b.n_geom() - 1]);
    } else if (*hull) {
      const auto h = cp::stage_hull(cfg, store);
      std::printf("%zu hull vertices, %.3f of the population inside (%d pruned)\n", h.vertices.size(),
                  h.fraction, h.removed);
    } else if (*oracle) {
      const auto d = cp::stage_oracle(cfg, store);
      std::printf("%zu traces -> %s\n", d.size(), store.path("dataset.json").c_str());
    } else if (*calibrate) {
      if (calibrate_index >= 0) {
        const auto b = cp::load_basis(store);
        const auto coeffs = cp::load_coefficients(store);
        if (calibrate_index >= coeffs.rows()) throw cardiorom::ValidationError("population index out of range");
        const auto rec = cp::generate_trace(cfg, store, b, cp::load_field(store), calibrate_index,
                                            coeffs.row(calibrate_index).transpose());
        const auto t = cp::calibrate_record(cfg, store, b, rec);
        char name[40];
        std::snprintf(name, sizeof name, "records/record_%04d.json", calibrate_index);
        store.write_json(name, cardiorom::gp::to_json(t));
        std::printf("record -> %s\n", store.path(name).c_str());
      } else {
        const auto t = cp::stage_calibrate(cfg, store);
        std::printf("%zu training records -> %s\n", t.size(), store.path("training.json").c_str());
      }
    } else if (*gp_train) {
      const auto g = cp::stage_gp_train(cfg, store);
      std::printf("GP trained on %zu records\n", g.records().size());
    } else if (*offline) {
      const auto g = cp::run_offline(cfg, store);
      std::printf("offline stage complete, GP trained on %zu records\n", g.records().size());
    } else if (*predict) {
      const auto c = target_coefficients(cfg, store, coeffs_file, geometry_file, predict_index);
      const auto r = cp::predict_at(cfg, cp::load_basis(store), cp::load_gp(store), c,
                                    cp::stream_seed(cfg, cp::SeedStream::MonteCarlo));
      store.write_json(report_name, cp::to_json(r));
      print_trust(r);
    } else if (*update) {
      const auto rec = cardiorom::gp::training_record_from_json(read_json_file(record_file));
      const auto u = cp::run_update(cfg, store, rec);
      std::printf("%s (normalized distance %.4f)\n", u.accepted ? "accepted" : "rejected", u.distance);
      std::printf("before: ");
      print_trust(u.before);
      std::printf("after:  ");
      print_trust(u.after);
    } else if (*plot) {
      const std::string src = plot_report.empty() ? store.path("prediction.json").string() : plot_report;
      const auto r = cp::prediction_report_from_json(read_json_file(src));
      const auto dir = plot_dir.empty() ? store.path("plots") : std::filesystem::path(plot_dir);
      for (const auto& f : cp::emit_plot_data(r, dir)) std::printf("%s\n", (dir / f).c_str());
    }
  } catch (const cardiorom::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.error_class() == cardiorom::ErrorClass::Validation ? 2 : 3;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
