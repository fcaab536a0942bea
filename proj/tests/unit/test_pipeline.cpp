#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "cardiorom/errors.hpp"
#include "cardiorom/pipeline/pipeline.hpp"

using namespace cardiorom;
using namespace cardiorom::pipeline;
namespace fs = std::filesystem;

namespace {

nlohmann::json miniature_json() {
  return {{"seed", 7},
          {"population", {{"n_pop", 40}}},
          {"basis", {{"n_geom", 2}}},
          {"oracle", {{"noise_scale", 0.0}}},
          {"chain", {{"n_adaptive", 400}, {"reset_every", 200}, {"n_regular", 600}, {"n_burnin", 100}}},
          {"uq", {{"n_mc", 100}}}};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::path(::testing::TempDir()) / ("cardiorom_" + name);
  fs::remove_all(d);
  return d;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

struct OfflineRun {
  PipelineConfig cfg;
  fs::path dir;
  gp::VectorGP gp;
};

const OfflineRun& miniature_run() {
  static const OfflineRun run = [] {
    OfflineRun r{config_from_json(miniature_json()), fresh_dir("offline_a"), {}};
    ArtifactStore store(r.dir);
    r.gp = run_offline(r.cfg, store);
    return r;
  }();
  return run;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Config, JsonRoundTripAndHash) {
  const auto cfg = config_from_json(miniature_json());
  EXPECT_EQ(cfg.n_pop, 40);
  EXPECT_EQ(cfg.n_geom, 2);
  EXPECT_EQ(cfg.chain.n_regular, 600);
  EXPECT_EQ(cfg.oracle.grid.n * cfg.oracle.grid.dt, cfg.rom.tcycle);
  const auto back = config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  auto other = miniature_json();
  other["seed"] = 8;
  EXPECT_NE(config_hash(config_from_json(other)), config_hash(cfg));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  auto j = miniature_json();
  j["n_mcmc"] = 5;
  EXPECT_THROW(config_from_json(j), ParseError);
  j = miniature_json();
  j["uq"]["n_mc"] = 50;
  EXPECT_THROW(config_from_json(j), ValidationError);
  j = miniature_json();
  j["uq"]["levels"] = {0.95, 1.0};
  EXPECT_THROW(config_from_json(j), ValidationError);
}

TEST(Seeds, StreamsAreDistinctAndStable) {
  const auto cfg = config_from_json(miniature_json());
  EXPECT_EQ(stream_seed(cfg, SeedStream::Chain, 3), stream_seed(cfg, SeedStream::Chain, 3));
  EXPECT_NE(stream_seed(cfg, SeedStream::Chain, 3), stream_seed(cfg, SeedStream::Chain, 4));
  EXPECT_NE(stream_seed(cfg, SeedStream::Chain, 0), stream_seed(cfg, SeedStream::Oracle, 0));
}

TEST(Artifacts, HashesAndManifest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto dir = fresh_dir("store");
  {
    ArtifactStore s(dir);
    s.write_text("a.txt", "hello");
    s.write_json("b.json", {{"x", 1}});
    s.set_meta("answer", 42);
    EXPECT_EQ(s.hash("a.txt"), sha256_hex("hello"));
    EXPECT_THROW(s.hash("missing"), ValidationError);
  }
  const ArtifactStore s(dir);
  EXPECT_EQ(s.hash("a.txt"), sha256_file(dir / "a.txt"));
  EXPECT_EQ(s.read_json("b.json").at("x"), 1);
  EXPECT_EQ(s.manifest().at("answer"), 42);
}

TEST(Quantiles, LinearInterpolation) {
  const std::vector<double> v{1.0, 2.0, 4.0, 8.0};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0), 8.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(sorted_quantile({5.0}, 0.3), 5.0);
}

TEST(Offline, ManifestRecordsEveryStage) {
  const auto& run = miniature_run();
  const ArtifactStore store(run.dir);
  const auto& m = store.manifest();
  EXPECT_EQ(m.at("hull_vertices"), m.at("training_set_size"));
  EXPECT_EQ(m.at("training_set_size").get<std::size_t>(), run.gp.records().size());
  EXPECT_EQ(m.at("config_hash"), config_hash(run.cfg));
  for (const auto* name : {"population.json", "basis.json", "hull.json", "dataset.json", "training.json", "gp_state.json"}) {
    EXPECT_EQ(store.hash(name), sha256_file(run.dir / name)) << name;
  }
}

TEST(Offline, RerunIsByteIdentical) {
  const auto& run = miniature_run();
  const auto dir = fresh_dir("offline_b");
  ArtifactStore store(dir);
  run_offline(run.cfg, store);
  const auto a = tree_contents(run.dir), b = tree_contents(dir);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, bytes] : a) {
    ASSERT_TRUE(b.count(name)) << name;
    EXPECT_TRUE(b.at(name) == bytes) << name;
  }
}

TEST(Offline, StageErrorsCarryTheStageName) {
  auto cfg = miniature_run().cfg;
  const auto dir = fresh_dir("missing");
  ArtifactStore store(dir);
  try {
    stage_hull(cfg, store);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("hull"), std::string::npos) << e.what();
  }
}

TEST(Online, PredictionReportInvariants) {
  const auto& run = miniature_run();
  const ArtifactStore store(run.dir);
  const auto basis = load_basis(store);
  const Eigen::VectorXd c = load_coefficients(store).colwise().mean().transpose();
  const auto r = predict_at(run.cfg, basis, run.gp, c, 11);
  EXPECT_EQ(r.n_draws, 100);
  ASSERT_EQ(r.bands.size(), 2u);
  for (const auto& b : r.bands) {
    ASSERT_EQ(b.p_med.size(), r.n_steps);
    for (std::size_t i = 0; i < r.n_steps; ++i) {
      EXPECT_LE(b.p_lo[i], b.p_med[i]);
      EXPECT_LE(b.p_med[i], b.p_hi[i]);
      EXPECT_LE(b.V_lo[i], b.V_med[i]);
      EXPECT_LE(b.V_med[i], b.V_hi[i]);
    }
  }
  // The wider level contains the narrower one.
  for (std::size_t i = 0; i < r.n_steps; ++i) {
    EXPECT_LE(r.bands[1].V_lo[i], r.bands[0].V_lo[i]);
    EXPECT_GE(r.bands[1].V_hi[i], r.bands[0].V_hi[i]);
  }
  EXPECT_GE(r.trust.ratio, 0.0);
  EXPECT_NEAR(r.trust.ratio, r.trust.band_halfwidth_VED / r.trust.noise_level, 1e-12);
  EXPECT_EQ(r.trust.flag, r.trust.ratio > run.cfg.trust_threshold);
  EXPECT_EQ(r.gp_hash, store.hash("gp_state.json"));
  EXPECT_EQ(r.config_hash, config_hash(run.cfg));
  for (const auto& h : r.histograms) {
    double mass = 0.0;
    for (std::size_t k = 0; k < h.density.size(); ++k) mass += h.density[k] * (h.edges[k + 1] - h.edges[k]);
    EXPECT_NEAR(mass, 1.0, 1e-9);
  }
  EXPECT_EQ(to_json(prediction_report_from_json(to_json(r))), to_json(r));
  const auto again = predict_at(run.cfg, basis, run.gp, c, 11);
  EXPECT_EQ(to_json(again).dump(), to_json(r).dump());
}

TEST(Online, CollapsedCovarianceGivesASingleTrace) {
  const auto& run = miniature_run();
  const auto basis = load_basis(ArtifactStore(run.dir));
  auto recs = run.gp.records();
  for (auto& rec : recs) rec.sigma_mat.setZero();
  const auto sharp = gp::VectorGP::assemble(recs, run.gp.length_scales(), run.gp.config());
  const auto r = predict_at(run.cfg, basis, sharp, recs.front().c, 3);
  EXPECT_LT(r.sigma_hat.cwiseAbs().maxCoeff(), 1e-8);
  for (const auto& b : r.bands) {
    for (std::size_t i = 0; i < r.n_steps; ++i) {
      EXPECT_NEAR(b.V_hi[i], b.V_lo[i], 1e-4);
      EXPECT_NEAR(b.p_hi[i], b.p_lo[i], 1e-4);
    }
  }
  EXPECT_NEAR(r.trust.band_halfwidth_VED, 0.0, 1e-4);
  EXPECT_FALSE(r.trust.flag);
}

TEST(Online, TargetLatticeMatchesCoefficientPrediction) {
  const auto& run = miniature_run();
  const ArtifactStore store(run.dir);
  const auto pop = load_population(run.cfg, store);
  const auto grid = geometry::surface_grid(pop[5].geom, run.cfg.lattice);
  const auto r = run_online(run.cfg, store, grid);
  const auto basis = load_basis(store);
  EXPECT_LT((r.c - podgeom::fit_coefficients(basis, grid.flatten())).norm(), 1e-12);
}

TEST(Update, DuplicateRejectedAndFarRecordTightensPrediction) {
  const auto& run = miniature_run();
  const auto basis = load_basis(ArtifactStore(run.dir));
  const auto dup = run_update(run.cfg, basis, run.gp, run.gp.records().front());
  EXPECT_FALSE(dup.accepted);

  // A sharp record at an interior point not in the training set.
  const auto C = load_coefficients(ArtifactStore(run.dir));
  gp::TrainingRecord rec;
  rec.c = C.colwise().mean().transpose();
  rec.mu = run.gp.predict_factors(rec.c).mu;
  rec.sigma_mat = 1e-6 * Eigen::Matrix4d::Identity();
  const auto up = run_update(run.cfg, basis, run.gp, rec);
  ASSERT_TRUE(up.accepted);
  EXPECT_LT(up.after.trust.band_halfwidth_VED, up.before.trust.band_halfwidth_VED);
  EXPECT_LT((up.after.mu_hat - rec.mu).cwiseAbs().maxCoeff(), 1e-2);
  EXPECT_FALSE(run_update(run.cfg, basis, up.gp, rec).accepted);
}

TEST(PlotData, BandFilesAreOrderedAndIdempotent) {
  const auto& run = miniature_run();
  const ArtifactStore store(run.dir);
  const auto r = predict_at(run.cfg, load_basis(store), run.gp, run.gp.records().front().c, 1);
  const auto dir = fresh_dir("plots");
  const auto files = emit_plot_data(r, dir);
  EXPECT_EQ(files.size(), r.bands.size() + 2);
  const auto first = tree_contents(dir);
  emit_plot_data(r, dir);
  EXPECT_EQ(tree_contents(dir), first);

  const auto rows = read_csv(dir / "bands_99.csv");
  ASSERT_EQ(rows.size(), r.n_steps + 1);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "p_lo", "p_med", "p_hi", "V_lo", "V_med", "V_hi"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 7u);
    EXPECT_LE(std::stod(rows[i][1]), std::stod(rows[i][2]));
    EXPECT_LE(std::stod(rows[i][2]), std::stod(rows[i][3]));
    EXPECT_LE(std::stod(rows[i][4]), std::stod(rows[i][5]));
    EXPECT_LE(std::stod(rows[i][5]), std::stod(rows[i][6]));
  }
  EXPECT_EQ(read_csv(dir / "pv_loop.csv").size(), r.n_steps + 1);
}
