#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "cardiorom/errors.hpp"
#include "cardiorom/podgeom/basis.hpp"
#include "cardiorom/podgeom/hull.hpp"
#include "cardiorom/podgeom/population.hpp"

using namespace cardiorom;
using namespace cardiorom::podgeom;

namespace {

Eigen::MatrixXd shape_matrix(const std::vector<PopulationSample>& pop) {
  Eigen::MatrixXd S(pop.front().shape.size(), static_cast<Eigen::Index>(pop.size()));
  for (std::size_t i = 0; i < pop.size(); ++i) S.col(static_cast<Eigen::Index>(i)) = pop[i].shape;
  return S;
}

Eigen::VectorXd reference_lattice() {
  return geometry::surface_grid(geometry::reference_geometry(), geometry::LatticeSize{}).flatten();
}

const std::vector<PopulationSample>& population60() {
  static const auto pop = sample_population(60, 7);
  return pop;
}

}  // namespace

TEST(LogNormalFit, QuantilesMatchInterval) {
  const auto ln = LogNormal::from_interval(62.0, 150.0);
  EXPECT_NEAR(ln.quantile(0.025), 62.0, 1e-9);
  EXPECT_NEAR(ln.quantile(0.975), 150.0, 1e-9);
  EXPECT_THROW(LogNormal::from_interval(5.0, 1.0), ValidationError);
}

TEST(Population, RawDrawPercentilesMatchRanges) {
  const auto X = draw_dimensions(100000, 3);
  const geometry::PhysiologicalRanges r;
  const std::array<geometry::Range, 4> ranges{r.ed_D, r.ed_B, r.ed_V, r.ed_Vw};
  for (int k = 0; k < 4; ++k) {
    std::vector<double> col(X.col(k).data(), X.col(k).data() + X.rows());
    std::sort(col.begin(), col.end());
    const double lo = col[static_cast<std::size_t>(0.025 * col.size())];
    const double hi = col[static_cast<std::size_t>(0.975 * col.size())];
    EXPECT_NEAR(lo, ranges[static_cast<std::size_t>(k)].lo, 0.03 * ranges[static_cast<std::size_t>(k)].lo);
    EXPECT_NEAR(hi, ranges[static_cast<std::size_t>(k)].hi, 0.03 * ranges[static_cast<std::size_t>(k)].hi);
  }
}

TEST(Population, AcceptedSamplesInsideRangesAndDeterministic) {
  SamplingStats stats;
  const auto pop = sample_population(60, 7, {}, &stats);
  ASSERT_EQ(pop.size(), 60u);
  EXPECT_GT(stats.acceptance(), 0.3);
  const geometry::PhysiologicalRanges r;
  for (const auto& s : pop) {
    EXPECT_TRUE(r.ed_V.contains(s.dims.V));
    EXPECT_TRUE(r.ed_Vw.contains(s.dims.Vw));
    EXPECT_TRUE(r.ed_D.contains(s.dims.D_lv));
    EXPECT_TRUE(r.ed_B.contains(s.dims.B_lv));
    EXPECT_TRUE(passes_filters(s.geom, s.dims, ShapeFilters{}));
  }
  const auto& again = population60();
  for (std::size_t i = 0; i < pop.size(); ++i) EXPECT_EQ(pop[i].shape, again[i].shape);
}

TEST(Population, TinyBudgetIsExhausted) {
  PopulationConfig cfg;
  cfg.min_draw_budget = 1;
  cfg.filters.min_wall_thickness = 100.0;  // nothing passes
  EXPECT_THROW(sample_population(1, 1, cfg), ExhaustedSampling);
}

TEST(DimensionInversion, RoundTrip) {
  const auto ref = geometry::reference_geometry();
  const auto d = geometry::clinical_dimensions(ref);
  const auto g = invert_dimensions(d.D_lv, d.B_lv, d.V, d.Vw);
  EXPECT_NEAR(g.C, ref.C, 1e-3);
  EXPECT_NEAR(g.H, ref.H, 1e-3);
  EXPECT_NEAR(g.xi_endo, ref.xi_endo, 1e-3);
  EXPECT_NEAR(g.xi_epi, ref.xi_epi, 1e-3);
  for (auto [D, B, V, Vw] : {std::array{5.0, 3.4, 100.0, 150.0}, std::array{4.5, 2.8, 80.0, 120.0}}) {
    const auto e = geometry::clinical_dimensions(invert_dimensions(D, B, V, Vw));
    EXPECT_NEAR(e.D_lv, D, 1e-4);
    EXPECT_NEAR(e.B_lv, B, 1e-4);
    EXPECT_NEAR(e.V, V, 1e-4);
    EXPECT_NEAR(e.Vw, Vw, 1e-4);
  }
  EXPECT_THROW(invert_dimensions(4.0, 4.5, 100.0, 150.0), NoSolution);
}

TEST(ShapeBasis, SpectrumAndOrthonormalModes) {
  const auto& pop = population60();
  const auto b = build_basis(shape_matrix(pop), reference_lattice(), 4, {});
  for (Eigen::Index k = 1; k < b.singular_values.size(); ++k) {
    EXPECT_LE(b.singular_values[k], b.singular_values[k - 1]);
  }
  EXPECT_TRUE((b.modes.transpose() * b.modes).isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-12));
  const auto e = b.cumulative_energy();
  EXPECT_NEAR(e[e.size() - 1], 1.0, 1e-12);
  EXPECT_GT(e[3], 0.95);
}

TEST(ShapeBasis, FullRankReconstructionIsExact) {
  // Lattice shapes of a four-parameter family are numerically low rank, so
  // perturb the reference with generic deformations instead.
  const auto x_ref = reference_lattice();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 0.05);
  Eigen::MatrixXd S(x_ref.size(), 12);
  for (Eigen::Index i = 0; i < S.cols(); ++i) {
    S.col(i) = x_ref;
    for (Eigen::Index r = 0; r < S.rows(); ++r) S(r, i) += z(rng);
  }
  const auto b = build_basis(S, x_ref, 12, {});
  for (int i : {0, 5, 11}) {
    const Eigen::VectorXd X = S.col(i);
    const auto rec = reconstruct(b, fit_coefficients(b, X));
    EXPECT_LT((rec - X).norm(), 1e-10 * (X - x_ref).norm());
  }
}

TEST(ShapeBasis, HoldoutReconstructionError) {
  const auto& pop = population60();
  const auto x_ref = reference_lattice();
  const auto b = build_basis(shape_matrix(pop).leftCols(48), x_ref, 4, {});
  double err = 0.0, norm = 0.0;
  for (std::size_t i = 48; i < 60; ++i) {
    const Eigen::VectorXd X = pop[i].shape;
    err += (reconstruct(b, fit_coefficients(b, X)) - X).norm();
    norm += (X - x_ref).norm();
  }
  RecordProperty("relative_error", std::to_string(err / norm));
  EXPECT_LT(err / norm, 0.05);
}

TEST(ShapeBasis, ProjectionIdentities) {
  const auto& pop = population60();
  const auto x_ref = reference_lattice();
  const auto b = build_basis(shape_matrix(pop), x_ref, 4, {});
  EXPECT_EQ(reconstruct(b, Eigen::VectorXd::Zero(4)), x_ref);
  EXPECT_LT(fit_coefficients(b, x_ref).norm(), 1e-10);
  const Eigen::Vector4d c(12.0, -3.0, 5.5, 0.25);
  EXPECT_LT((fit_coefficients(b, reconstruct(b, c)) - c).norm(), 1e-10 * c.norm());
  const Eigen::Vector4d c2(-1.0, 2.0, 0.0, 4.0);
  EXPECT_LT((reconstruct(b, c + 2.0 * c2) - (reconstruct(b, c) + 2.0 * (reconstruct(b, c2) - x_ref))).norm(), 1e-9);
  const Eigen::VectorXd X = pop[3].shape;
  const Eigen::VectorXd resid = X - reconstruct(b, fit_coefficients(b, X));
  EXPECT_LT((b.modes.transpose() * resid).cwiseAbs().maxCoeff(), 1e-10 * X.norm());
}

TEST(ShapeBasis, JsonRoundTrip) {
  const auto b = build_basis(shape_matrix(population60()), reference_lattice(), 4, {});
  const auto c = basis_from_json(to_json(b));
  EXPECT_EQ(c.modes, b.modes);
  EXPECT_EQ(c.x_ref, b.x_ref);
  EXPECT_EQ(c.singular_values, b.singular_values);
  EXPECT_EQ(coefficients_from_json(coefficients_to_json(Eigen::Vector4d(1, 2, 3, 4))), Eigen::VectorXd(Eigen::Vector4d(1, 2, 3, 4)));
}

TEST(ShapeBasis, DegenerateInputRejected) {
  const auto x_ref = reference_lattice();
  Eigen::MatrixXd S(x_ref.size(), 3);
  S.colwise() = x_ref;
  EXPECT_THROW(build_basis(S, x_ref, 2, {}), DegenerateData);
}

TEST(ConvexHull, CubeCornersAreTheVertices) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  Eigen::MatrixXd P(16 + 40, 4);
  for (int i = 0; i < 16; ++i) {
    for (int k = 0; k < 4; ++k) P(i, k) = (i >> k) & 1;
  }
  for (int i = 16; i < P.rows(); ++i) {
    for (int k = 0; k < 4; ++k) P(i, k) = u(rng);
  }
  const auto sel = select_training_hull(P, 1.0);
  std::vector<int> corners(16);
  for (int i = 0; i < 16; ++i) corners[static_cast<std::size_t>(i)] = i;
  EXPECT_EQ(sel.vertices, corners);
  EXPECT_DOUBLE_EQ(sel.fraction, 1.0);
  EXPECT_EQ(sel.removed, 0);
}

TEST(ConvexHull, FacetsSupportTheCloud) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  Eigen::MatrixXd P(200, 4);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (int k = 0; k < 4; ++k) P(i, k) = z(rng) * (k + 1);
  }
  const ConvexHull hull(P);
  const auto verts = hull.vertices();
  const std::set<int> vset(verts.begin(), verts.end());
  for (Eigen::Index i = 0; i < P.rows(); ++i) EXPECT_TRUE(hull.contains(P.row(i).transpose()));
  for (const auto& f : hull.facets()) {
    EXPECT_NEAR(f.normal.norm(), 1.0, 1e-12);
    EXPECT_LE((P * f.normal).maxCoeff(), f.offset + 1e-9);
    for (int v : f.vertices) EXPECT_NEAR(P.row(v).dot(f.normal), f.offset, 1e-9);
  }
  // The maximizer of any linear functional is a hull vertex.
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::Vector4d d;
    for (int k = 0; k < 4; ++k) d[k] = z(rng);
    Eigen::Index arg;
    (P * d).maxCoeff(&arg);
    EXPECT_TRUE(vset.count(static_cast<int>(arg)));
  }
  EXPECT_FALSE(hull.contains(Eigen::Vector4d::Constant(100.0)));
  EXPECT_GT(hull.max_violation(Eigen::Vector4d::Constant(100.0)), 0.0);
}

TEST(ConvexHull, FlatCloudIsDegenerate) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Random(30, 4);
  P.col(3).setZero();
  EXPECT_THROW(ConvexHull{P}, DegenerateHull);
}

TEST(HullSelection, PrunesToTargetFraction) {
  const auto& pop = population60();
  const auto b = build_basis(shape_matrix(pop), reference_lattice(), 4, {});
  Eigen::MatrixXd C(60, 4);
  for (int i = 0; i < 60; ++i) C.row(i) = fit_coefficients(b, pop[static_cast<std::size_t>(i)].shape).transpose();
  const auto sel = select_training_hull(C, 0.9);
  EXPECT_LE(sel.fraction, 0.9);
  EXPECT_GE(sel.fraction, 0.9 - 0.03);
  EXPECT_TRUE(std::is_sorted(sel.vertices.begin(), sel.vertices.end()));
  EXPECT_GE(sel.vertices.size(), 5u);
}
