#pragma once

#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cardiorom/onefiber/simulator.hpp"

namespace cardiorom::calibration {

/// Per-sample standard deviations for pressure (mmHg) and volume (ml) with
/// exponential correlation in time.
struct NoiseModel {
  Eigen::VectorXd sigma_p;
  Eigen::VectorXd sigma_V;
  double tau_p = 1.0;  // ms
  double tau_V = 1.0;  // ms
  double dt = 1.0;     // ms

  Eigen::Index n() const { return sigma_p.size(); }
  void validate() const;
};

/// Sigma_ij = s_i s_j exp(-|i - j| dt / tau)
Eigen::MatrixXd correlated_block(const Eigen::VectorXd& sigma, double tau, double dt);

/// Block-diagonal [pressure block, 0; 0, volume block] of size 2n.
Eigen::MatrixXd build_noise_covariance(const NoiseModel& m);

struct TimeInterval {
  double start;
  double end;
};

/// Maximal runs of samples with both valves closed, as [first, last] sample
/// times. A run crossing the end of the cycle is joined with the one at the
/// start (end > cycle end in that case).
std::vector<TimeInterval> isovolumetric_intervals(const onefiber::PVTrace& trace);

/// Blend weight in [0, 1]: near 1 inside an interval, near 0 far from all.
/// Intervals repeat with the cycle period.
double isovolumetric_weight(double t, const std::vector<TimeInterval>& intervals, double period,
                            double width);

/// sigma_max + (sigma_min - sigma_max) * w(t) at every sample of `trace`,
/// using its valve states.
Eigen::VectorXd phase_weighted_sigma(const onefiber::PVTrace& trace, double sigma_min,
                                     double sigma_max, double transition_width);

enum class NoiseKind { Fixed, Landmark };

/// Fixed: absolute levels. Landmark: sigma_p = p_frac * p_max,
/// sigma_V in [Vmin_frac, Vmax_frac] * V_stroke, from the landmark trace.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::Fixed;
  double sigma_p = 2.5;       // mmHg
  double sigma_V_min = 0.25;  // ml
  double sigma_V_max = 1.15;  // ml
  double p_frac = 0.05;
  double V_min_frac = 0.017;
  double V_max_frac = 0.033;
  double transition_width = 5.0;  // ms
  /// Correlation time; non-positive means t_cycle - dt.
  double tau = 0.0;
};

/// `valve_trace` supplies valve states and time grid; `landmark_trace`
/// supplies p_max and stroke volume for landmark scaling.
NoiseModel make_noise_model(const NoiseSpec& spec, const onefiber::PVTrace& valve_trace,
                            const onefiber::PVTrace& landmark_trace, double t_cycle);

/// sigma_V_min actually used by a noise model (its smallest volume std).
double volume_noise_floor(const NoiseModel& m);

nlohmann::json to_json(const NoiseSpec& s);
NoiseSpec noise_spec_from_json(const nlohmann::json& j);

}  // namespace cardiorom::calibration
