#include "cardiorom/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cardiorom/calibration/calibrate.hpp"
#include "cardiorom/errors.hpp"

namespace cardiorom::pipeline {

namespace {

constexpr int kReportVersion = 1;
// 99% two-sided standard-normal half-width used by the trust check.
constexpr double kZ99 = 2.576;

const std::array<const char*, 4> kFactorNames{"alpha", "beta", "gamma", "lambda"};

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json mat(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd from_mat(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ParseError("ragged matrix");
    m.row(static_cast<Eigen::Index>(i)) = from_vec(rows[i]).transpose();
  }
  return m;
}

std::string trace_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traces/trace_%04d.csv", index);
  return buf;
}

std::string vertex_name(int index) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "calibration/vertex_%04d.json", index);
  return buf;
}

// Runs a stage and tags any library error with its name.
template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string msg = e.what();
    const std::string body = msg.substr(std::min(msg.size(), e.kind().size() + 2));
    throw Error(e.error_class(), e.kind(), std::string("[stage ") + stage + "] " + body);
  }
}

std::string text_of(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

oracle::GroundTruthField field_for(const PipelineConfig& cfg, const Eigen::MatrixXd& coeffs) {
  if (cfg.oracle.field) return oracle::field_from_json(*cfg.oracle.field);
  const Eigen::VectorXd center = coeffs.colwise().mean().transpose();
  const Eigen::MatrixXd centered = coeffs.rowwise() - center.transpose();
  Eigen::VectorXd scale = (centered.colwise().squaredNorm() / static_cast<double>(coeffs.rows())).cwiseSqrt().transpose();
  for (Eigen::Index k = 0; k < scale.size(); ++k) {
    if (!(scale[k] > 0.0)) scale[k] = 1.0;
  }
  return oracle::default_field(center, scale);
}

onefiber::PVTrace simulate_steady(const onefiber::ROMParameters& params, const Eigen::Vector4d& theta,
                                  const PipelineConfig& cfg) {
  calibration::RomContext ctx{params, cfg.sim, cfg.oracle.grid.dt, cfg.oracle.grid.n};
  return calibration::model_trace(theta, ctx);
}

}  // namespace

onefiber::ROMParameters rom_params_for(const PipelineConfig& cfg, const podgeom::ShapeBasis& basis,
                                       const Eigen::VectorXd& c) {
  const auto vols = podgeom::shape_volumes(basis, c);
  if (!(vols.cavity > 0.0) || !(vols.wall > 0.0)) {
    throw DomainError("shape at the given coefficients has a non-positive volume");
  }
  onefiber::ROMParameters p = cfg.rom;
  p.V0 = cfg.unloaded_volume_fraction * vols.cavity;
  p.Vw = vols.wall;
  return p;
}

Eigen::VectorXd reference_shape(const PipelineConfig& cfg) {
  return geometry::surface_grid(geometry::reference_geometry(), cfg.lattice).flatten();
}

// ---------------------------------------------------------------- stages

std::vector<podgeom::PopulationSample> stage_population(const PipelineConfig& cfg, ArtifactStore& store) {
  return staged("population", [&] {
    podgeom::PopulationConfig pc;
    pc.filters = cfg.filters;
    pc.lattice = cfg.lattice;
    podgeom::SamplingStats stats;
    const auto seed = stream_seed(cfg, SeedStream::Population);
    auto pop = podgeom::sample_population(cfg.n_pop, seed, pc, &stats);
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : pop) {
      samples.push_back({{"geometry", geometry::to_json(s.geom)}, {"dimensions", geometry::to_json(s.dims)}});
    }
    store.write_json("population.json", {{"version", 1},
                                         {"seed", seed},
                                         {"draws", stats.draws},
                                         {"acceptance", stats.acceptance()},
                                         {"samples", samples}});
    store.write_text("population.csv", text_of([&](std::ostream& os) { podgeom::write_population_csv(os, pop); }));
    store.set_meta("config_hash", config_hash(cfg));
    store.set_meta("seed", cfg.seed);
    store.set_meta("population_size", pop.size());
    return pop;
  });
}

std::vector<podgeom::PopulationSample> load_population(const PipelineConfig& cfg, const ArtifactStore& store) {
  const auto j = store.read_json("population.json");
  std::vector<podgeom::PopulationSample> pop;
  try {
    for (const auto& s : j.at("samples")) {
      podgeom::PopulationSample p;
      p.geom = geometry::ellipsoid_from_json(s.at("geometry"));
      p.dims = geometry::clinical_dimensions(p.geom);
      p.shape = geometry::surface_grid(p.geom, cfg.lattice).flatten();
      pop.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("population.json: ") + e.what());
  }
  return pop;
}

podgeom::ShapeBasis stage_basis(const PipelineConfig& cfg, ArtifactStore& store) {
  return staged("basis", [&] {
    const auto pop = load_population(cfg, store);
    const Eigen::VectorXd x_ref = reference_shape(cfg);
    Eigen::MatrixXd shapes(x_ref.size(), static_cast<Eigen::Index>(pop.size()));
    for (std::size_t i = 0; i < pop.size(); ++i) shapes.col(static_cast<Eigen::Index>(i)) = pop[i].shape;
    auto basis = podgeom::build_basis(shapes, x_ref, cfg.n_geom, cfg.lattice);
    Eigen::MatrixXd coeffs(static_cast<Eigen::Index>(pop.size()), basis.n_geom());
    for (std::size_t i = 0; i < pop.size(); ++i) {
      coeffs.row(static_cast<Eigen::Index>(i)) = podgeom::fit_coefficients(basis, pop[i].shape).transpose();
    }
    store.write_json("basis.json", podgeom::to_json(basis));
    store.write_json("coefficients.json", {{"version", 1}, {"coefficients", mat(coeffs)}});
    store.set_meta("cumulative_energy", vec(basis.cumulative_energy().head(basis.n_geom())));
    return basis;
  });
}

podgeom::ShapeBasis load_basis(const ArtifactStore& store) {
  return podgeom::basis_from_json(store.read_json("basis.json"));
}

Eigen::MatrixXd load_coefficients(const ArtifactStore& store) {
  try {
    return from_mat(store.read_json("coefficients.json").at("coefficients"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("coefficients.json: ") + e.what());
  }
}

podgeom::HullSelection stage_hull(const PipelineConfig& cfg, ArtifactStore& store) {
  return staged("hull", [&] {
    const auto coeffs = load_coefficients(store);
    auto sel = podgeom::select_training_hull(coeffs, cfg.hull_fraction);
    store.write_json("hull.json", {{"version", 1},
                                   {"vertices", sel.vertices},
                                   {"fraction", sel.fraction},
                                   {"removed", sel.removed},
                                   {"target_fraction", cfg.hull_fraction}});
    store.set_meta("hull_vertices", sel.vertices.size());
    return sel;
  });
}

oracle::FomRecord generate_trace(const PipelineConfig& cfg, ArtifactStore& store,
                                 const podgeom::ShapeBasis& basis, const oracle::GroundTruthField& field,
                                 int index, const Eigen::VectorXd& c) {
  oracle::FomRecord r;
  r.index = index;
  r.c = c;
  r.trace_file = trace_name(index);
  onefiber::PVTrace trace;
  if (cfg.oracle.source == "files") {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trace_%04d.csv", index);
    trace = oracle::ingest_fom_csv((cfg.oracle.trace_dir / buf).string(), cfg.oracle.grid);
    r.provenance = oracle::Provenance::File;
    r.theta_true = Eigen::Vector4d::Constant(std::nan(""));
  } else {
    const auto params = rom_params_for(cfg, basis, c);
    r.theta_true = field(c);
    r.seed = stream_seed(cfg, SeedStream::Oracle, static_cast<std::uint64_t>(index));
    const auto clean = simulate_steady(params, r.theta_true, cfg);
    const auto noise = calibration::noise_model_for(params, cfg.noise, cfg.prior, cfg.sim, clean);
    trace = oracle::synth_fom_trace(r.theta_true, params, cfg.sim, noise, r.seed, cfg.oracle.noise_scale);
  }
  store.write_text(r.trace_file, text_of([&](std::ostream& os) { onefiber::write_trace_csv(os, {trace}); }));
  return r;
}

std::vector<oracle::FomRecord> stage_oracle(const PipelineConfig& cfg, ArtifactStore& store) {
  return staged("oracle", [&] {
    const auto basis = load_basis(store);
    const auto coeffs = load_coefficients(store);
    const auto vertices = store.read_json("hull.json").at("vertices").get<std::vector<int>>();
    const auto field = field_for(cfg, coeffs);
    field.check_range(coeffs);
    store.write_json("field.json", oracle::to_json(field));

    std::vector<oracle::FomRecord> records;
    for (int idx : vertices) records.push_back(generate_trace(cfg, store, basis, field, idx, coeffs.row(idx).transpose()));
    store.write_json("dataset.json", oracle::dataset_manifest(records));
    return records;
  });
}

oracle::GroundTruthField load_field(const ArtifactStore& store) {
  return oracle::field_from_json(store.read_json("field.json"));
}

gp::TrainingRecord calibrate_record(const PipelineConfig& cfg, ArtifactStore& store,
                                    const podgeom::ShapeBasis& basis, const oracle::FomRecord& rec) {
  const auto data = oracle::ingest_fom_csv(store.path(rec.trace_file).string(), cfg.oracle.grid);
  const auto params = rom_params_for(cfg, basis, rec.c);
  auto ccfg = cfg.calibration_config();
  ccfg.chain.seed = stream_seed(cfg, SeedStream::Chain, static_cast<std::uint64_t>(rec.index));
  const auto result = calibration::calibrate(data, params, ccfg);
  auto report = calibration::report_to_json(result, ccfg);
  report["index"] = rec.index;
  report["c"] = vec(rec.c);
  report["record"] = gp::to_json(gp::TrainingRecord{rec.c, result.summary.mu, result.summary.sigma_mat});
  store.write_json(vertex_name(rec.index), report);

  gp::TrainingRecord t;
  t.c = rec.c;
  t.mu = result.summary.mu;
  t.sigma_mat = 0.5 * (result.summary.sigma_mat + result.summary.sigma_mat.transpose());
  return t;
}

std::vector<gp::TrainingRecord> stage_calibrate(const PipelineConfig& cfg, ArtifactStore& store) {
  return staged("calibrate", [&] {
    const auto basis = load_basis(store);
    const auto dataset = oracle::dataset_from_manifest(store.read_json("dataset.json"));
    std::vector<gp::TrainingRecord> training;
    nlohmann::json records = nlohmann::json::array();
    std::vector<int> indices;
    for (const auto& rec : dataset) {
      training.push_back(calibrate_record(cfg, store, basis, rec));
      records.push_back(gp::to_json(training.back()));
      indices.push_back(rec.index);
    }
    store.write_json("training.json", {{"version", 1}, {"indices", indices}, {"records", records}});
    return training;
  });
}

std::vector<gp::TrainingRecord> load_training(const ArtifactStore& store) {
  const auto j = store.read_json("training.json");
  std::vector<gp::TrainingRecord> out;
  for (const auto& r : j.at("records")) out.push_back(gp::training_record_from_json(r));
  return out;
}

gp::VectorGP stage_gp_train(const PipelineConfig& cfg, ArtifactStore& store) {
  return staged("gp-train", [&] {
    auto gcfg = cfg.gp;
    gcfg.optimizer.seed = stream_seed(cfg, SeedStream::Optimizer);
    auto model = gp::VectorGP::train(load_training(store), gcfg);
    store.write_json("gp_state.json", gp::to_json(model));
    store.set_meta("training_set_size", model.records().size());
    return model;
  });
}

gp::VectorGP load_gp(const ArtifactStore& store) {
  return gp::vector_gp_from_json(store.read_json("gp_state.json"));
}

gp::VectorGP run_offline(const PipelineConfig& cfg, ArtifactStore& store) {
  cfg.validate();
  stage_population(cfg, store);
  stage_basis(cfg, store);
  stage_hull(cfg, store);
  stage_oracle(cfg, store);
  stage_calibrate(cfg, store);
  return stage_gp_train(cfg, store);
}

// ---------------------------------------------------------------- online

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

QuantileTriple triple(std::vector<double> x, double level) {
  std::sort(x.begin(), x.end());
  return {sorted_quantile(x, 0.5 * (1.0 - level)), sorted_quantile(x, 0.5),
          sorted_quantile(x, 0.5 * (1.0 + level))};
}

Histogram histogram(std::vector<double> x, int bins) {
  std::sort(x.begin(), x.end());
  double lo = x.front();
  double hi = x.back();
  if (!(hi > lo)) {
    lo -= 0.5e-6;
    hi += 0.5e-6;
  }
  Histogram h;
  const double w = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + b * w);
  h.density.assign(static_cast<std::size_t>(bins), 0.0);
  for (double v : x) {
    auto b = static_cast<int>((v - lo) / w);
    b = std::clamp(b, 0, bins - 1);
    h.density[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& d : h.density) d /= static_cast<double>(x.size()) * w;
  return h;
}

}  // namespace

PredictionReport predict_at(const PipelineConfig& cfg, const podgeom::ShapeBasis& basis,
                            const gp::VectorGP& gp, const Eigen::VectorXd& c, std::uint64_t seed) {
  PredictionReport r;
  r.c = c;
  r.seed = seed;
  r.config_hash = config_hash(cfg);
  r.gp_hash = sha256_hex(canonical_dump(gp::to_json(gp)));

  const auto fp = gp.predict_factors(c);
  r.mu_hat = fp.mu;
  r.sigma_hat = fp.sigma;
  r.factor_sd = fp.sd;
  r.lambda_min = fp.lambda_min;

  // Square root of the (PSD) covariance through its eigendecomposition; a
  // zero covariance gives identical draws.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(fp.sigma);
  const Eigen::Matrix4d A =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  const auto params = rom_params_for(cfg, basis, c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z01;
  const auto n_mc = static_cast<std::size_t>(cfg.uq.n_mc);
  std::vector<onefiber::PVTrace> traces;
  traces.reserve(n_mc);
  std::vector<Eigen::Vector4d> thetas;
  thetas.reserve(n_mc);
  for (std::size_t k = 0; k < n_mc; ++k) {
    Eigen::Vector4d z;
    for (int i = 0; i < 4; ++i) z[i] = z01(rng);
    const Eigen::Vector4d theta = fp.mu + A * z;
    try {
      traces.push_back(simulate_steady(params, theta, cfg));
      thetas.push_back(theta);
    } catch (const Error& e) {
      if (e.error_class() != ErrorClass::Numerical) throw;
      ++r.n_failed;
    }
  }
  r.n_draws = static_cast<int>(n_mc);
  if (traces.empty() ||
      static_cast<double>(r.n_failed) > cfg.uq.max_failure_rate * static_cast<double>(n_mc)) {
    throw SimulationFailed(std::to_string(r.n_failed) + " of " + std::to_string(n_mc) +
                           " Monte-Carlo simulations failed");
  }

  const std::size_t n = traces.front().size();
  r.dt = traces.front().dt;
  r.n_steps = n;
  for (double level : cfg.uq.levels) {
    Band b;
    b.level = level;
    for (auto* v : {&b.p_lo, &b.p_med, &b.p_hi, &b.V_lo, &b.V_med, &b.V_hi}) v->resize(n);
    r.bands.push_back(std::move(b));
  }
  std::vector<double> col(traces.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (int which = 0; which < 2; ++which) {
      for (std::size_t k = 0; k < traces.size(); ++k) col[k] = which == 0 ? traces[k].p[i] : traces[k].V[i];
      std::sort(col.begin(), col.end());
      for (auto& b : r.bands) {
        const double lo = sorted_quantile(col, 0.5 * (1.0 - b.level));
        const double med = sorted_quantile(col, 0.5);
        const double hi = sorted_quantile(col, 0.5 * (1.0 + b.level));
        if (which == 0) {
          b.p_lo[i] = lo, b.p_med[i] = med, b.p_hi[i] = hi;
        } else {
          b.V_lo[i] = lo, b.V_med[i] = med, b.V_hi[i] = hi;
        }
      }
    }
  }

  std::vector<double> ved, ves, pmax, ef, stroke;
  for (const auto& t : traces) {
    const auto s = onefiber::summarize(t);
    ved.push_back(s.V_ED);
    ves.push_back(s.V_ES);
    pmax.push_back(s.p_max);
    ef.push_back(s.EF);
    stroke.push_back(s.V_stroke);
  }
  for (double level : cfg.uq.levels) {
    r.summaries.push_back({level, triple(ved, level), triple(ves, level), triple(pmax, level), triple(ef, level)});
  }

  const auto ved99 = triple(ved, 0.99);
  r.trust.band_halfwidth_VED = 0.5 * (ved99.hi - ved99.lo);
  double sigma_V_min = cfg.noise.sigma_V_min;
  if (cfg.noise.kind == calibration::NoiseKind::Landmark) {
    sigma_V_min = cfg.noise.V_min_frac * triple(stroke, 0.5).med;
  }
  r.trust.noise_level = kZ99 * sigma_V_min;
  r.trust.ratio = r.trust.band_halfwidth_VED / r.trust.noise_level;
  r.trust.flag = r.trust.ratio > cfg.trust_threshold;

  for (int f = 0; f < 4; ++f) {
    std::vector<double> x;
    x.reserve(thetas.size());
    for (const auto& t : thetas) x.push_back(t[f]);
    r.histograms.push_back(histogram(std::move(x), cfg.uq.histogram_bins));
  }
  return r;
}

PredictionReport run_online(const PipelineConfig& cfg, const ArtifactStore& store,
                            const geometry::SurfaceGrid& target) {
  return staged("predict", [&] {
    const auto basis = load_basis(store);
    const auto model = load_gp(store);
    const Eigen::VectorXd c = podgeom::fit_coefficients(basis, target);
    return predict_at(cfg, basis, model, c, stream_seed(cfg, SeedStream::MonteCarlo));
  });
}

UpdateReport run_update(const PipelineConfig& cfg, const podgeom::ShapeBasis& basis,
                        const gp::VectorGP& model, const gp::TrainingRecord& record) {
  record.validate();
  const auto seed = stream_seed(cfg, SeedStream::MonteCarlo);
  UpdateReport u;
  u.before = predict_at(cfg, basis, model, record.c, seed);
  auto ins = model.add_observation(record);
  u.accepted = ins.accepted;
  u.distance = ins.distance;
  u.gp = std::move(ins.gp);
  u.after = u.accepted ? predict_at(cfg, basis, u.gp, record.c, seed) : u.before;
  return u;
}

UpdateReport run_update(const PipelineConfig& cfg, ArtifactStore& store, const gp::TrainingRecord& record) {
  return staged("update", [&] {
    const auto basis = load_basis(store);
    auto u = run_update(cfg, basis, load_gp(store), record);
    if (u.accepted) {
      store.write_json("gp_state.json", gp::to_json(u.gp));
      store.set_meta("training_set_size", u.gp.records().size());
    }
    store.write_json("update_report.json", to_json(u));
    return u;
  });
}

// ---------------------------------------------------------------- io

namespace {

nlohmann::json to_json(const QuantileTriple& q) { return {q.lo, q.med, q.hi}; }

QuantileTriple triple_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::array<double, 3>>();
  return {v[0], v[1], v[2]};
}

}  // namespace

nlohmann::json to_json(const PredictionReport& r) {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : r.bands) {
    bands.push_back({{"level", b.level},
                     {"p_lo", b.p_lo}, {"p_med", b.p_med}, {"p_hi", b.p_hi},
                     {"V_lo", b.V_lo}, {"V_med", b.V_med}, {"V_hi", b.V_hi}});
  }
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& s : r.summaries) {
    summaries.push_back({{"level", s.level},
                         {"V_ED", to_json(s.V_ED)},
                         {"V_ES", to_json(s.V_ES)},
                         {"p_max", to_json(s.p_max)},
                         {"EF", to_json(s.EF)}});
  }
  nlohmann::json hist;
  for (std::size_t f = 0; f < r.histograms.size(); ++f) {
    hist[kFactorNames[f]] = {{"edges", r.histograms[f].edges}, {"density", r.histograms[f].density}};
  }
  return {{"schema_version", kReportVersion},
          {"c", vec(r.c)},
          {"mu_hat", vec(r.mu_hat)},
          {"sigma_hat", mat(r.sigma_hat)},
          {"factor_sd", vec(r.factor_sd)},
          {"lambda_min", r.lambda_min},
          {"dt", r.dt},
          {"n_steps", r.n_steps},
          {"bands", bands},
          {"summaries", summaries},
          {"trust",
           {{"band_halfwidth_VED", r.trust.band_halfwidth_VED},
            {"noise_level", r.trust.noise_level},
            {"ratio", r.trust.ratio},
            {"flag", r.trust.flag}}},
          {"n_draws", r.n_draws},
          {"n_failed", r.n_failed},
          {"histograms", hist},
          {"gp_hash", r.gp_hash},
          {"config_hash", r.config_hash},
          {"seed", r.seed}};
}

PredictionReport prediction_report_from_json(const nlohmann::json& j) {
  PredictionReport r;
  try {
    if (j.at("schema_version").get<int>() != kReportVersion) throw ParseError("unsupported report version");
    r.c = from_vec(j.at("c").get<std::vector<double>>());
    r.mu_hat = from_vec(j.at("mu_hat").get<std::vector<double>>());
    r.sigma_hat = from_mat(j.at("sigma_hat"));
    r.factor_sd = from_vec(j.at("factor_sd").get<std::vector<double>>());
    r.lambda_min = j.at("lambda_min").get<double>();
    r.dt = j.at("dt").get<double>();
    r.n_steps = j.at("n_steps").get<std::size_t>();
    for (const auto& b : j.at("bands")) {
      Band x;
      x.level = b.at("level").get<double>();
      x.p_lo = b.at("p_lo").get<std::vector<double>>();
      x.p_med = b.at("p_med").get<std::vector<double>>();
      x.p_hi = b.at("p_hi").get<std::vector<double>>();
      x.V_lo = b.at("V_lo").get<std::vector<double>>();
      x.V_med = b.at("V_med").get<std::vector<double>>();
      x.V_hi = b.at("V_hi").get<std::vector<double>>();
      r.bands.push_back(std::move(x));
    }
    for (const auto& s : j.at("summaries")) {
      r.summaries.push_back({s.at("level").get<double>(), triple_from_json(s.at("V_ED")),
                             triple_from_json(s.at("V_ES")), triple_from_json(s.at("p_max")),
                             triple_from_json(s.at("EF"))});
    }
    const auto& t = j.at("trust");
    r.trust = {t.at("band_halfwidth_VED").get<double>(), t.at("noise_level").get<double>(),
               t.at("ratio").get<double>(), t.at("flag").get<bool>()};
    r.n_draws = j.at("n_draws").get<int>();
    r.n_failed = j.at("n_failed").get<int>();
    const auto& h = j.at("histograms");
    for (const char* name : kFactorNames) {
      if (!h.contains(name)) continue;
      r.histograms.push_back({h.at(name).at("edges").get<std::vector<double>>(),
                              h.at(name).at("density").get<std::vector<double>>()});
    }
    r.gp_hash = j.at("gp_hash").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("prediction report: ") + e.what());
  }
  return r;
}

nlohmann::json to_json(const UpdateReport& u) {
  return {{"schema_version", kReportVersion},
          {"accepted", u.accepted},
          {"distance", u.distance},
          {"training_set_size", u.gp.records().size()},
          {"before", to_json(u.before)},
          {"after", to_json(u.after)}};
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << content;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::vector<std::string> emit_plot_data(const PredictionReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (const auto& b : r.bands) {
    std::ostringstream os;
    os << "t,p_lo,p_med,p_hi,V_lo,V_med,V_hi\n";
    for (std::size_t i = 0; i < b.p_med.size(); ++i) {
      os << fmt(static_cast<double>(i) * r.dt) << ',' << fmt(b.p_lo[i]) << ',' << fmt(b.p_med[i]) << ','
         << fmt(b.p_hi[i]) << ',' << fmt(b.V_lo[i]) << ',' << fmt(b.V_med[i]) << ',' << fmt(b.V_hi[i]) << '\n';
    }
    char name[32];
    std::snprintf(name, sizeof name, "bands_%02d.csv", static_cast<int>(std::lround(100.0 * b.level)));
    write_file(dir / name, os.str());
    files.emplace_back(name);
  }
  if (!r.bands.empty()) {
    std::ostringstream os;
    os << "V,p\n";
    const auto& b = r.bands.front();
    for (std::size_t i = 0; i < b.p_med.size(); ++i) os << fmt(b.V_med[i]) << ',' << fmt(b.p_med[i]) << '\n';
    write_file(dir / "pv_loop.csv", os.str());
    files.emplace_back("pv_loop.csv");
  }
  {
    std::ostringstream os;
    os << "factor,bin_lo,bin_hi,density\n";
    for (std::size_t f = 0; f < r.histograms.size(); ++f) {
      const auto& h = r.histograms[f];
      for (std::size_t k = 0; k < h.density.size(); ++k) {
        os << kFactorNames[f] << ',' << fmt(h.edges[k]) << ',' << fmt(h.edges[k + 1]) << ',' << fmt(h.density[k]) << '\n';
      }
    }
    write_file(dir / "factor_density.csv", os.str());
    files.emplace_back("factor_density.csv");
  }
  return files;
}

std::vector<std::string> emit_plot_data(const std::vector<onefiber::PVTrace>& traces,
                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream os;
  os << "cycle,V,p\n";
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.size(); ++i) os << t.cycle_index << ',' << fmt(t.V[i]) << ',' << fmt(t.p[i]) << '\n';
  }
  write_file(dir / "pv_loop.csv", os.str());
  return {"pv_loop.csv"};
}

}  // namespace cardiorom::pipeline
