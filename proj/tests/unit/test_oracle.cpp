#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cardiorom/calibration/likelihood.hpp"
#include "cardiorom/errors.hpp"
#include "cardiorom/oracle/oracle.hpp"

using namespace cardiorom;
using namespace cardiorom::oracle;

namespace {

GroundTruthField field4() {
  return default_field(Eigen::Vector4d(1.0, -2.0, 0.5, 0.0), Eigen::Vector4d(10.0, 5.0, 3.0, 2.0));
}

struct Fixture {
  onefiber::ROMParameters params;
  onefiber::SimulationOptions sim;
  onefiber::PVTrace clean;
  calibration::NoiseModel noise;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    x.clean = onefiber::simulate(x.params, {}, x.sim).steady_cycle();
    x.noise = calibration::make_noise_model(calibration::NoiseSpec{}, x.clean, x.clean, x.params.tcycle);
    return x;
  }();
  return f;
}

std::string csv_of(const onefiber::PVTrace& tr) {
  std::ostringstream os;
  onefiber::write_trace_csv(os, {tr});
  return os.str();
}

}  // namespace

TEST(GroundTruthField, RangeAndTrends) {
  const auto f = field4();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Eigen::MatrixXd P(500, 4);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (int k = 0; k < 4; ++k) P(i, k) = f.center[k] + 2.0 * f.scale[k] * z(rng);
  }
  EXPECT_NO_THROW(f.check_range(P));
  for (Eigen::Index i = 0; i < 50; ++i) {
    const auto J = f.jacobian(P.row(i).transpose());
    EXPECT_GT(J(0, 0), 0.0);
    EXPECT_LT(J(1, 0), 0.0);
    EXPECT_GT(J(2, 0), 0.0);
    EXPECT_GT(J(3, 0), 0.0);
  }
  EXPECT_TRUE(f(f.center).isApprox(Eigen::Vector4d::Ones(), 1e-12));
  Eigen::MatrixXd far = f.center.transpose();
  far(0, 0) += 1e3 * f.scale[0];
  EXPECT_THROW(f.check_range(far), ConstraintViolation);
}

TEST(GroundTruthField, JacobianMatchesClosedFormDerivative) {
  const auto f = field4();
  const Eigen::Vector4d c(3.0, -1.0, 1.0, 0.5);
  const auto J = f.jacobian(c);
  const Eigen::Vector4d z = (c - f.center).cwiseQuotient(f.scale);
  for (int k = 0; k < 4; ++k) {
    const auto& ff = f.factors[static_cast<std::size_t>(k)];
    const double sech2 = 1.0 / std::pow(std::cosh(ff.dir.dot(z)), 2);
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(J(k, j), (ff.slope[j] + ff.amp * sech2 * ff.dir[j]) / f.scale[j], 1e-7);
    }
  }
}

TEST(GroundTruthField, JsonRoundTrip) {
  const auto f = field4();
  const auto g = field_from_json(to_json(f));
  const Eigen::Vector4d c(0.3, 0.1, -0.4, 2.0);
  EXPECT_EQ(f(c), g(c));
  auto bad = to_json(f);
  bad["scale"] = {1.0, 2.0};
  EXPECT_THROW(field_from_json(bad), ParseError);
}

TEST(SyntheticTrace, ZeroNoiseIsTheCleanTrace) {
  const auto& fx = fixture();
  const auto tr = synth_fom_trace(Eigen::Vector4d::Ones(), fx.params, fx.sim, fx.noise, 5, 0.0);
  EXPECT_EQ(tr.p, fx.clean.p);
  EXPECT_EQ(tr.V, fx.clean.V);
}

TEST(SyntheticTrace, SeedsDifferOnlyInNoise) {
  const auto& fx = fixture();
  const auto a = synth_fom_trace(Eigen::Vector4d::Ones(), fx.params, fx.sim, fx.noise, 1);
  const auto b = synth_fom_trace(Eigen::Vector4d::Ones(), fx.params, fx.sim, fx.noise, 1);
  const auto c = synth_fom_trace(Eigen::Vector4d::Ones(), fx.params, fx.sim, fx.noise, 2);
  EXPECT_EQ(a.p, b.p);
  EXPECT_EQ(a.V, b.V);
  EXPECT_NE(a.p, c.p);
  const calibration::GaussianLikelihood L(calibration::build_noise_covariance(fx.noise));
  // Both residuals are plausible draws from the noise model.
  const double n2 = static_cast<double>(L.dimension());
  for (const auto* t : {&a, &c}) {
    const Eigen::VectorXd r = t->concatenated() - fx.clean.concatenated();
    const double chi2 = -2.0 * (L.log_density(r) + 0.5 * L.log_determinant()) - n2 * std::log(2.0 * std::numbers::pi);
    EXPECT_NEAR(chi2, n2, 6.0 * std::sqrt(2.0 * n2));
  }
}

TEST(SyntheticTrace, NoiseCovarianceMonteCarlo) {
  // Coarse 100-sample grid keeps 10^4 draws cheap.
  Fixture fx;
  fx.sim.dt = 8.0;
  fx.clean = onefiber::simulate(fx.params, {}, fx.sim).steady_cycle();
  fx.noise = calibration::make_noise_model(calibration::NoiseSpec{}, fx.clean, fx.clean, fx.params.tcycle);
  const Eigen::MatrixXd S = calibration::build_noise_covariance(fx.noise);
  const Eigen::VectorXd clean = fx.clean.concatenated();
  const int n = 10000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(S.rows(), S.cols());
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd r =
        synth_fom_trace(Eigen::Vector4d::Ones(), fx.params, fx.sim, fx.noise, static_cast<std::uint64_t>(s)).concatenated() - clean;
    acc.selfadjointView<Eigen::Lower>().rankUpdate(r);
  }
  acc = acc.selfadjointView<Eigen::Lower>();
  acc /= n;
  EXPECT_LT((acc - S).norm() / S.norm(), 0.05);
}

TEST(Ingest, AlignedRoundTripIsLossless) {
  const auto& fx = fixture();
  std::istringstream in(csv_of(fx.clean));
  const auto tr = ingest_fom_csv(in, {fx.clean.dt, static_cast<Eigen::Index>(fx.clean.size())});
  ASSERT_EQ(tr.size(), fx.clean.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_DOUBLE_EQ(tr.p[i], fx.clean.p[i]);
    EXPECT_DOUBLE_EQ(tr.V[i], fx.clean.V[i]);
  }
}

TEST(Ingest, OffGridSineWithinInterpolationBound) {
  // 800 ms sine sampled every 3 ms with a phase offset, read onto a 2 ms grid.
  const double period = 810.0, h = 3.0, amp = 10.0, w = 2.0 * std::numbers::pi / period;
  std::ostringstream os;
  os << "t_ms,p_mmHg,V_ml\n";
  os.precision(17);
  for (int i = 0; i < 270; ++i) {
    const double t = 1.3 + i * h;
    os << t << "," << amp * std::sin(w * t) << "," << 100.0 + amp * std::cos(w * t) << "\n";
  }
  std::istringstream in(os.str());
  const auto tr = ingest_fom_csv(in, {2.0, 405});
  const double lipschitz = amp * w;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = 1.3 + static_cast<double>(i) * 2.0;
    EXPECT_LE(std::abs(tr.p[i] - amp * std::sin(w * t)), lipschitz * h);
    EXPECT_LE(std::abs(tr.V[i] - 100.0 - amp * std::cos(w * t)), lipschitz * h);
  }
}

TEST(Ingest, MalformedInputs) {
  const GridSpec grid{2.0, 3};
  auto ingest = [&](const std::string& s) {
    std::istringstream in(s);
    return ingest_fom_csv(in, grid);
  };
  EXPECT_THROW(ingest(""), ParseError);
  EXPECT_THROW(ingest("t_ms,p_mmHg\n0,1\n"), ParseError);
  EXPECT_THROW(ingest("t_ms,p_mmHg,V_ml\n0,1,2\n4,1,2\n2,1,2\n"), ParseError);
  EXPECT_THROW(ingest("t_ms,p_mmHg,V_ml\n0,1,2\n2,x,2\n4,1,2\n"), ParseError);
  EXPECT_THROW(ingest("t_ms,p_mmHg,V_ml\n0,1,2\n2,1\n"), ParseError);
  EXPECT_THROW(ingest("t_ms,p_mmHg,V_ml\n0,1,2\n5,1,2\n10,1,2\n"), GridError);
  EXPECT_NO_THROW(ingest("t_ms,p_mmHg,V_ml\n0,1,2\n2,1,2\n4,1,2\n"));
}

TEST(Ingest, ShuffledRowsRejected) {
  const auto& fx = fixture();
  std::istringstream src(csv_of(fx.clean));
  std::string header, line;
  std::getline(src, header);
  std::vector<std::string> rows;
  while (std::getline(src, line)) rows.push_back(line);
  std::mt19937 rng(4);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::string s = header + "\n";
  for (const auto& r : rows) s += r + "\n";
  std::istringstream in(s);
  EXPECT_THROW(ingest_fom_csv(in, {fx.clean.dt, static_cast<Eigen::Index>(fx.clean.size())}), ParseError);
}

TEST(DatasetManifest, RoundTrip) {
  std::vector<FomRecord> recs(2);
  recs[0] = {0, Eigen::Vector2d(1.0, -2.0), "traces/trace_0000.csv", Provenance::Synthetic, Eigen::Vector4d(1.1, 0.9, 1.0, 1.05), 17};
  recs[1] = {3, Eigen::Vector2d(0.5, 0.25), "ext/a.csv", Provenance::File, Eigen::Vector4d::Ones(), 0};
  const auto back = dataset_from_manifest(dataset_manifest(recs));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].index, recs[i].index);
    EXPECT_EQ(back[i].c, recs[i].c);
    EXPECT_EQ(back[i].trace_file, recs[i].trace_file);
    EXPECT_EQ(back[i].provenance, recs[i].provenance);
    EXPECT_EQ(back[i].seed, recs[i].seed);
  }
  EXPECT_EQ(back[0].theta_true, recs[0].theta_true);
}
