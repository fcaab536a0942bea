#include "cardiorom/calibration/noise.hpp"

#include <algorithm>
#include <cmath>

#include "cardiorom/errors.hpp"

namespace cardiorom::calibration {

void NoiseModel::validate() const {
  if (sigma_p.size() != sigma_V.size() || sigma_p.size() == 0) {
    throw ValidationError("noise model needs equal, nonzero pressure and volume lengths");
  }
  if ((sigma_p.array() <= 0.0).any() || (sigma_V.array() <= 0.0).any()) {
    throw ValidationError("noise standard deviations must be positive");
  }
  if (!(tau_p > 0.0) || !(tau_V > 0.0) || !(dt > 0.0)) {
    throw ValidationError("noise correlation times and dt must be positive");
  }
}

Eigen::MatrixXd correlated_block(const Eigen::VectorXd& sigma, double tau, double dt) {
  const auto n = sigma.size();
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      S(i, j) = sigma[i] * sigma[j] * std::exp(-std::abs(static_cast<double>(i - j)) * dt / tau);
    }
  }
  return S;
}

Eigen::MatrixXd build_noise_covariance(const NoiseModel& m) {
  m.validate();
  const auto n = m.n();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  S.topLeftCorner(n, n) = correlated_block(m.sigma_p, m.tau_p, m.dt);
  S.bottomRightCorner(n, n) = correlated_block(m.sigma_V, m.tau_V, m.dt);
  return S;
}

std::vector<TimeInterval> isovolumetric_intervals(const onefiber::PVTrace& trace) {
  const auto n = trace.valves.size();
  if (n != trace.size()) throw ValidationError("trace has no valve states");
  std::vector<TimeInterval> out;
  std::size_t i = 0;
  while (i < n) {
    if (!trace.valves[i].isovolumetric()) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && trace.valves[j + 1].isovolumetric()) ++j;
    out.push_back({trace.time(i), trace.time(j)});
    i = j + 1;
  }
  // Join a run touching the last sample with one starting at the first.
  if (out.size() >= 2 && trace.valves.front().isovolumetric() && trace.valves.back().isovolumetric()) {
    const double period = static_cast<double>(n) * trace.dt;
    out.front().start = out.back().start - period;
    out.pop_back();
  }
  return out;
}

double isovolumetric_weight(double t, const std::vector<TimeInterval>& intervals, double period,
                            double width) {
  if (!(width > 0.0)) throw ValidationError("transition width must be positive");
  double w = 0.0;
  for (const auto& iv : intervals) {
    for (int shift = -1; shift <= 1; ++shift) {
      const double s = iv.start + shift * period;
      const double e = iv.end + shift * period;
      w = std::max(w, 0.5 * (std::tanh((t - s) / width) - std::tanh((t - e) / width)));
    }
  }
  return std::clamp(w, 0.0, 1.0);
}

Eigen::VectorXd phase_weighted_sigma(const onefiber::PVTrace& trace, double sigma_min,
                                     double sigma_max, double transition_width) {
  if (!(sigma_min > 0.0) || !(sigma_min < sigma_max)) {
    throw ValidationError("phase weighting needs 0 < sigma_min < sigma_max");
  }
  const auto intervals = isovolumetric_intervals(trace);
  const double period = static_cast<double>(trace.size()) * trace.dt;
  Eigen::VectorXd s(static_cast<Eigen::Index>(trace.size()));
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double w = isovolumetric_weight(trace.time(i), intervals, period, transition_width);
    s[static_cast<Eigen::Index>(i)] =
        std::clamp(sigma_max + (sigma_min - sigma_max) * w, sigma_min, sigma_max);
  }
  return s;
}

NoiseModel make_noise_model(const NoiseSpec& spec, const onefiber::PVTrace& valve_trace,
                            const onefiber::PVTrace& landmark_trace, double t_cycle) {
  double sp = spec.sigma_p;
  double vmin = spec.sigma_V_min;
  double vmax = spec.sigma_V_max;
  if (spec.kind == NoiseKind::Landmark) {
    const auto s = onefiber::summarize(landmark_trace);
    sp = spec.p_frac * s.p_max;
    vmin = spec.V_min_frac * s.V_stroke;
    vmax = spec.V_max_frac * s.V_stroke;
  }
  NoiseModel m;
  m.dt = valve_trace.dt;
  const auto n = static_cast<Eigen::Index>(valve_trace.size());
  m.sigma_p = Eigen::VectorXd::Constant(n, sp);
  m.sigma_V = phase_weighted_sigma(valve_trace, vmin, vmax, spec.transition_width);
  const double tau = spec.tau > 0.0 ? spec.tau : t_cycle - valve_trace.dt;
  m.tau_p = tau;
  m.tau_V = tau;
  m.validate();
  return m;
}

double volume_noise_floor(const NoiseModel& m) { return m.sigma_V.minCoeff(); }

nlohmann::json to_json(const NoiseSpec& s) {
  return {{"kind", s.kind == NoiseKind::Fixed ? "fixed" : "landmark"},
          {"sigma_p", s.sigma_p},
          {"sigma_V_min", s.sigma_V_min},
          {"sigma_V_max", s.sigma_V_max},
          {"p_frac", s.p_frac},
          {"V_min_frac", s.V_min_frac},
          {"V_max_frac", s.V_max_frac},
          {"transition_width", s.transition_width},
          {"tau", s.tau}};
}

NoiseSpec noise_spec_from_json(const nlohmann::json& j) {
  NoiseSpec s;
  try {
    const auto kind = j.value("kind", std::string("fixed"));
    if (kind == "fixed") {
      s.kind = NoiseKind::Fixed;
    } else if (kind == "landmark") {
      s.kind = NoiseKind::Landmark;
    } else {
      throw ParseError("noise kind must be 'fixed' or 'landmark'");
    }
    s.sigma_p = j.value("sigma_p", s.sigma_p);
    s.sigma_V_min = j.value("sigma_V_min", s.sigma_V_min);
    s.sigma_V_max = j.value("sigma_V_max", s.sigma_V_max);
    s.p_frac = j.value("p_frac", s.p_frac);
    s.V_min_frac = j.value("V_min_frac", s.V_min_frac);
    s.V_max_frac = j.value("V_max_frac", s.V_max_frac);
    s.transition_width = j.value("transition_width", s.transition_width);
    s.tau = j.value("tau", s.tau);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("noise spec: ") + e.what());
  }
  return s;
}

}  // namespace cardiorom::calibration
