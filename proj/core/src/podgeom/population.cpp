#include "cardiorom/podgeom/population.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <numbers>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "cardiorom/errors.hpp"

namespace cardiorom::podgeom {

namespace {

constexpr double kZ975 = 1.959963984540054;

}  // namespace

LogNormal LogNormal::from_interval(double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw ValidationError("log-normal interval must satisfy 0 < lo < hi");
  return {0.5 * (std::log(lo) + std::log(hi)), (std::log(hi) - std::log(lo)) / (2.0 * kZ975)};
}

double LogNormal::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must be in (0, 1)");
  return std::exp(mu + sigma * boost::math::quantile(boost::math::normal(), p));
}

double SamplingStats::acceptance() const {
  const auto accepted = draws - no_solution - out_of_range - filtered;
  return draws > 0 ? static_cast<double>(accepted) / static_cast<double>(draws) : 0.0;
}

geometry::EllipsoidParams invert_dimensions(double D, double B, double V, double Vw) {
  if (!(D > 0.0) || !(B > 0.0) || !(V > 0.0) || !(Vw > 0.0)) {
    throw ValidationError("dimensions must be positive");
  }
  if (!(B < D)) throw NoSolution("basal diameter must be smaller than the diameter");
  // B = D sin(acos(H/c)) fixes the relative truncation height h = H/c; the
  // cavity volume pi a^2 c (2/3 + h - h^3/3) then fixes c.
  const double a = 0.5 * D;
  const double ratio = B / D;
  const double h = std::sqrt(1.0 - ratio * ratio);
  const double c = V / (std::numbers::pi * a * a * (2.0 / 3.0 + h - h * h * h / 3.0));
  if (!(c > a)) throw NoSolution("dimensions imply an oblate cavity");
  geometry::EllipsoidParams g;
  g.C = std::sqrt(c * c - a * a);
  g.H = c * h;
  g.xi_endo = std::atanh(a / c);
  try {
    g.xi_epi = geometry::solve_transmural(g.C, g.H, V, Vw).xi_epi;
  } catch (const NoBracket&) {
    throw NoSolution("wall volume not attainable");
  }
  if (!g.valid()) throw NoSolution("inverted geometry is invalid");
  return g;
}

bool passes_filters(const geometry::EllipsoidParams& g, const geometry::ClinicalDimensions& d,
                    const ShapeFilters& f) {
  const double thickness = g.C * (std::sinh(g.xi_epi) - std::sinh(g.xi_endo));
  return thickness >= f.min_wall_thickness && d.L_lv / d.D_lv <= f.max_length_to_diameter &&
         g.xi_epi - g.xi_endo >= f.min_transmural_gap;
}

namespace {

struct DimensionSampler {
  LogNormal D, B, V, Vw;
  std::normal_distribution<double> z{0.0, 1.0};

  explicit DimensionSampler(const geometry::PhysiologicalRanges& r)
      : D(LogNormal::from_interval(r.ed_D.lo, r.ed_D.hi)),
        B(LogNormal::from_interval(r.ed_B.lo, r.ed_B.hi)),
        V(LogNormal::from_interval(r.ed_V.lo, r.ed_V.hi)),
        Vw(LogNormal::from_interval(r.ed_Vw.lo, r.ed_Vw.hi)) {}

  Eigen::Vector4d operator()(std::mt19937_64& rng) {
    auto draw = [&](const LogNormal& ln) { return std::exp(ln.mu + ln.sigma * z(rng)); };
    const double d = draw(D);
    const double b = draw(B);
    const double v = draw(V);
    const double vw = draw(Vw);
    return {d, b, v, vw};
  }
};

}  // namespace

Eigen::MatrixX4d draw_dimensions(std::int64_t n, std::uint64_t seed,
                                 const geometry::PhysiologicalRanges& ranges) {
  std::mt19937_64 rng(seed);
  DimensionSampler sampler(ranges);
  Eigen::MatrixX4d out(n, 4);
  for (std::int64_t i = 0; i < n; ++i) out.row(i) = sampler(rng).transpose();
  return out;
}

std::vector<PopulationSample> sample_population(int n_pop, std::uint64_t seed,
                                                const PopulationConfig& cfg,
                                                SamplingStats* stats_out) {
  if (n_pop < 1) throw ValidationError("population size must be at least 1");
  std::mt19937_64 rng(seed);
  DimensionSampler sampler(cfg.ranges);
  SamplingStats stats;
  std::vector<PopulationSample> pop;
  pop.reserve(static_cast<std::size_t>(n_pop));
  const std::int64_t budget = std::max<std::int64_t>(cfg.min_draw_budget, 100LL * n_pop);

  while (static_cast<int>(pop.size()) < n_pop) {
    if (stats.draws >= budget) {
      if (stats_out) *stats_out = stats;
      throw ExhaustedSampling("population sampling acceptance below 1%");
    }
    const Eigen::Vector4d x = sampler(rng);
    ++stats.draws;
    geometry::EllipsoidParams g;
    try {
      g = invert_dimensions(x[0], x[1], x[2], x[3]);
    } catch (const NoSolution&) {
      ++stats.no_solution;
      continue;
    }
    const auto dims = geometry::clinical_dimensions(g);
    if (!geometry::check_physiological(dims, geometry::Stage::EndDiastole, cfg.ranges).all_pass()) {
      ++stats.out_of_range;
      continue;
    }
    if (!passes_filters(g, dims, cfg.filters)) {
      ++stats.filtered;
      continue;
    }
    PopulationSample s;
    s.dims = dims;
    s.geom = g;
    s.shape = geometry::surface_grid(g, cfg.lattice).flatten();
    pop.push_back(std::move(s));
  }
  if (stats_out) *stats_out = stats;
  return pop;
}

void write_population_csv(std::ostream& out, const std::vector<PopulationSample>& pop) {
  out << "index,D_lv,B_lv,L_lv,V,Vw,C_cm,H_cm,xi_endo,xi_epi";
  const auto n_c = pop.empty() ? 0 : pop.front().coeffs.size();
  for (Eigen::Index k = 0; k < n_c; ++k) out << ",c" << (k + 1);
  out << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& s = pop[i];
    out << i;
    for (double v : {s.dims.D_lv, s.dims.B_lv, s.dims.L_lv, s.dims.V, s.dims.Vw, s.geom.C, s.geom.H,
                     s.geom.xi_endo, s.geom.xi_epi}) {
      num(v);
    }
    for (Eigen::Index k = 0; k < s.coeffs.size(); ++k) num(s.coeffs[k]);
    out << '\n';
  }
}

}  // namespace cardiorom::podgeom
