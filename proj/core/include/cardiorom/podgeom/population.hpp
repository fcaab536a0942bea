#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "cardiorom/geometry/ellipsoid.hpp"
#include "cardiorom/geometry/surface.hpp"

namespace cardiorom::podgeom {

/// Extra filters against thin-walled or slender shapes produced by the
/// uncorrelated sampling.
struct ShapeFilters {
  double min_wall_thickness = 0.5;  // cm, at the equator
  double max_length_to_diameter = 2.5;
  double min_transmural_gap = 0.05;
};

struct PopulationConfig {
  geometry::PhysiologicalRanges ranges;
  ShapeFilters filters;
  geometry::LatticeSize lattice;
  /// Sampling stops with ExhaustedSampling once this many draws were rejected
  /// without reaching n_pop at 1% acceptance or better.
  std::int64_t min_draw_budget = 10000;
};

struct PopulationSample {
  geometry::ClinicalDimensions dims;
  geometry::EllipsoidParams geom;
  Eigen::VectorXd shape;
  Eigen::VectorXd coeffs;  // filled after a basis fit
};

struct LogNormal {
  double mu;
  double sigma;
  /// Log-normal whose 2.5% and 97.5% quantiles are lo and hi.
  static LogNormal from_interval(double lo, double hi);
  double quantile(double p) const;
};

struct SamplingStats {
  std::int64_t draws = 0;
  std::int64_t no_solution = 0;
  std::int64_t out_of_range = 0;
  std::int64_t filtered = 0;
  double acceptance() const;
};

/// Ellipsoid with end-diastolic dimensions (D, B, V, Vw). Throws NoSolution
/// for infeasible combinations.
geometry::EllipsoidParams invert_dimensions(double D, double B, double V, double Vw);

/// True when the shape passes the extra filters.
bool passes_filters(const geometry::EllipsoidParams& g, const geometry::ClinicalDimensions& d,
                    const ShapeFilters& f);

std::vector<PopulationSample> sample_population(int n_pop, std::uint64_t seed,
                                                const PopulationConfig& cfg = {},
                                                SamplingStats* stats = nullptr);

/// Raw (D, B, V, Vw) draws without inversion or filtering; one row per draw.
Eigen::MatrixX4d draw_dimensions(std::int64_t n, std::uint64_t seed,
                                 const geometry::PhysiologicalRanges& ranges = {});

void write_population_csv(std::ostream& out, const std::vector<PopulationSample>& pop);

}  // namespace cardiorom::podgeom
