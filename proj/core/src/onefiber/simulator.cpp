#include "cardiorom/onefiber/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "cardiorom/errors.hpp"
#include "cardiorom/onefiber/relations.hpp"

namespace cardiorom::onefiber {

Eigen::VectorXd PVTrace::concatenated() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::VectorXd y(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = p[static_cast<std::size_t>(i)];
    y[n + i] = V[static_cast<std::size_t>(i)];
  }
  return y;
}

double contractile_step(double lc, double ls, double dt, double Ea, double v0,
                        double t_in_cycle, double tact) {
  if (t_in_cycle <= tact) return ls;
  return lc + dt * (Ea * (ls - lc) - 1.0) * v0;
}

double arterial_pressure(double Vart, const CirculationParameters& c) {
  return (Vart - c.Vart0) / c.Cart;
}

double venous_pressure(double Vven, const CirculationParameters& c) {
  return (Vven - c.Vven0) / c.Cven;
}

CirculationFlows circulation_step(const CardiacState& s, const CirculationParameters& c, double dt) {
  CirculationFlows r{};
  r.p_art = arterial_pressure(s.Vart, c);
  r.p_ven = venous_pressure(s.Vven, c);
  r.q_art = std::max(s.p - r.p_art, 0.0) / c.Rart;
  r.q_ven = std::max(r.p_ven - s.p, 0.0) / c.Rven;
  r.q_per = (r.p_art - r.p_ven) / c.Rper;
  r.V_next = s.V + dt * (r.q_ven - r.q_art);
  r.Vart_next = s.Vart + dt * (r.q_art - r.q_per);
  r.Vven_next = s.Vven + dt * (r.q_per - r.q_ven);
  return r;
}

double activation_time(double t, const ROMParameters& p) {
  double tc = std::fmod(t, p.tcycle);
  if (tc < 0.0) tc += p.tcycle;
  return tc - p.tact;
}

namespace {

struct FiberKinematics {
  double f;
  double ls;
  double dls_dV;
};

FiberKinematics kinematics(double V, const ROMParameters& p, const CorrectionFactors& f) {
  const double eps = fiber_strain(V, p.V0, p.Vw, f.alpha, f.beta);
  const double ls = sarcomere_length(eps, p.ls0);
  return {f_generalized(V / p.Vw, f.alpha, f.beta), ls,
          ls * fiber_strain_derivative(V, p.Vw, f.alpha, f.beta)};
}

}  // namespace

double total_fiber_stress(const CardiacState& s, const ROMParameters& p, const CorrectionFactors& f) {
  const auto k = kinematics(s.V, p, f);
  const auto stiff = adapt_stiffness(p, f);
  const double ta = activation_time(s.t, p);
  const double passive = passive_fiber_stress(k.ls, p.ls0, stiff.Tp0, stiff.cp);
  const double active = ta > 0.0 ? active_fiber_stress(k.ls, s.lc, ta, p) : 0.0;
  return k.ls / p.ls0 * (passive + active);
}

double cavity_pressure(const CardiacState& s, const ROMParameters& p, const CorrectionFactors& f) {
  const auto k = kinematics(s.V, p, f);
  return kMmHgPerKPa * total_fiber_stress(s, p, f) / k.f;
}

PressureEval cavity_pressure_with_slope(double V, double lc, double ta, const ROMParameters& p,
                                        const CorrectionFactors& f) {
  const auto k = kinematics(V, p, f);
  const auto stiff = adapt_stiffness(p, f);
  const double passive = passive_fiber_stress(k.ls, p.ls0, stiff.Tp0, stiff.cp);
  const double dpassive = passive_fiber_stress_derivative(k.ls, p.ls0, stiff.Tp0, stiff.cp);

  double active = 0.0;
  double dactive = 0.0;
  if (ta > 0.0) {
    const double twitch = f_twitch(ta, k.ls, p.taur, p.taud, p.b, p.ld);
    const double iso = f_iso(lc, p.lc0, p.T0, p.al);
    if (twitch > 0.0 && iso > 0.0) {
      const double dtwitch = f_twitch_dls(ta, k.ls, p.taur, p.taud, p.b, p.ld);
      active = iso * twitch * p.Ea * (k.ls - lc);
      dactive = iso * p.Ea * (twitch + dtwitch * (k.ls - lc));
    }
  }

  const double sigma = passive + active;
  const double tau = k.ls / p.ls0 * sigma;
  const double dtau = k.dls_dV / p.ls0 * sigma + k.ls / p.ls0 * (dpassive + dactive) * k.dls_dV;
  const double df = 3.0 * f.beta / p.Vw;
  return {kMmHgPerKPa * tau / k.f, kMmHgPerKPa * (dtau / k.f - tau * df / (k.f * k.f))};
}

CardiacState init_end_diastole(const ROMParameters& p, const CorrectionFactors& f, double p_ED) {
  p.validate();
  f.validate();
  if (!(p_ED >= 0.0) || !std::isfinite(p_ED)) {
    throw DomainError("end-diastolic pressure must be finite and nonnegative");
  }
  auto passive_p = [&](double V) { return cavity_pressure_with_slope(V, 0.0, -1.0, p, f).p; };

  double lo = p.V0;
  double hi = p.V0 + 0.25 * p.Vw;
  const double hi_limit = p.V0 + 50.0 * p.Vw;
  while (passive_p(hi) < p_ED) {
    lo = hi;
    hi = p.V0 + 2.0 * (hi - p.V0);
    if (hi > hi_limit) throw NoBracket("no volume reaches the requested end-diastolic pressure");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (passive_p(mid) < p_ED ? lo : hi) = mid;
  }

  CardiacState s;
  s.t = 0.0;
  s.V = 0.5 * (lo + hi);
  s.lc = sarcomere_length(fiber_strain(s.V, p.V0, p.Vw, f.alpha, f.beta), p.ls0);
  s.p = passive_p(s.V);
  s.Vart = p.circ.Vart0 + p.circ.Cart * p.init.p_art;
  s.Vven = p.circ.Vven0 + p.circ.Cven * p.init.p_ven;
  return s;
}

CardiacState default_initial_state(const ROMParameters& p, const CorrectionFactors& f) {
  return init_end_diastole(p, f, p.init.p_ED);
}

namespace {

// Arterial and venous compartments are treated implicitly through their valve
// flows; the peripheral flow uses the pressures from the previous step. For a
// given cavity pressure both valve flows then have closed forms.
struct ImplicitFlows {
  double A;  // arterial pressure with only peripheral outflow applied
  double B;  // venous pressure with only peripheral inflow applied
  double gart;
  double gven;

  double q_art(double p) const { return std::max(p - A, 0.0) * gart; }
  double q_ven(double p) const { return std::max(B - p, 0.0) * gven; }
  double dq_art(double p) const { return p > A ? gart : 0.0; }
  double dq_ven(double p) const { return p < B ? -gven : 0.0; }
};

// Smallest volume with a positive stress-pressure ratio.
double volume_floor(const ROMParameters& p, const CorrectionFactors& f) {
  const double v_min = -2.0 * f.alpha / (3.0 * f.beta) * p.Vw;
  return std::max(v_min, 0.0) + 1e-9 * p.Vw;
}

}  // namespace

SimulationResult simulate(const ROMParameters& p, const CorrectionFactors& f,
                          const SimulationOptions& opts, const CardiacState& init) {
  p.validate();
  f.validate();
  if (!(opts.dt > 0.0) || opts.n_cycles < 1) throw ValidationError("invalid simulation options");
  const double steps_real = p.tcycle / opts.dt;
  const auto n = static_cast<long>(std::llround(steps_real));
  if (n < 2 || std::abs(steps_real - static_cast<double>(n)) > 1e-9 * steps_real) {
    throw ValidationError("cycle length must be an integer multiple of dt");
  }
  const auto& c = p.circ;
  const double dt = opts.dt;
  const double V_floor = volume_floor(p, f);

  SimulationResult out;
  out.cycles.resize(static_cast<std::size_t>(opts.n_cycles));
  for (int k = 0; k < opts.n_cycles; ++k) {
    auto& tr = out.cycles[static_cast<std::size_t>(k)];
    tr.dt = dt;
    tr.t0 = k * p.tcycle;
    tr.cycle_index = k;
    tr.p.reserve(static_cast<std::size_t>(n));
    tr.V.reserve(static_cast<std::size_t>(n));
    tr.valves.reserve(static_cast<std::size_t>(n));
    tr.lc.reserve(static_cast<std::size_t>(n));
  }

  CardiacState s = init;
  s.p = cavity_pressure(s, p, f);
  out.initial_total_volume = s.total_volume();
  {
    const double pa = arterial_pressure(s.Vart, c);
    const double pv = venous_pressure(s.Vven, c);
    auto& tr = out.cycles.front();
    tr.p.push_back(s.p);
    tr.V.push_back(s.V);
    tr.valves.push_back({pv > s.p, s.p > pa});
    tr.lc.push_back(s.lc);
  }

  const long total_steps = n * opts.n_cycles;
  double last_net_inflow = 0.0;
  for (long step = 1; step <= total_steps; ++step) {
    const double t_new = static_cast<double>(step) * dt;
    const double tc_new = static_cast<double>(step % n) * dt;
    const double ta_new = tc_new - p.tact;

    const double ls_old =
        sarcomere_length(fiber_strain(s.V, p.V0, p.Vw, f.alpha, f.beta), p.ls0);
    const bool active = tc_new > p.tact;
    const double lc_new = active ? contractile_step(s.lc, ls_old, dt, p.Ea, p.v0, tc_new, p.tact)
                                 : 0.0;

    const double pa_old = arterial_pressure(s.Vart, c);
    const double pv_old = venous_pressure(s.Vven, c);
    const double q_per = (pa_old - pv_old) / c.Rper;
    const ImplicitFlows fl{(s.Vart - dt * q_per - c.Vart0) / c.Cart,
                           (s.Vven + dt * q_per - c.Vven0) / c.Cven, 1.0 / (c.Rart + dt / c.Cart),
                           1.0 / (c.Rven + dt / c.Cven)};

    // Before activation the active term vanishes, so lc does not enter p.
    const double ta_eval = active ? ta_new : -1.0;
    auto residual = [&](double V, double* dR) {
      const auto pe = cavity_pressure_with_slope(V, lc_new, ta_eval, p, f);
      if (dR) *dR = 1.0 - dt * (fl.dq_ven(pe.p) - fl.dq_art(pe.p)) * pe.dp_dV;
      return V - s.V - dt * (fl.q_ven(pe.p) - fl.q_art(pe.p));
    };

    // Newton from the previous volume. Every evaluation tightens a bracket;
    // steps leaving it fall back to bisection.
    double lo = V_floor;
    double hi = std::numeric_limits<double>::infinity();
    bool lo_checked = false;
    double V = std::max(s.V + dt * last_net_inflow, V_floor);
    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
      ++out.newton_iterations;
      double dR = 0.0;
      const double R = residual(V, &dR);
      if (std::abs(R) <= opts.volume_tol) {
        converged = true;
        break;
      }
      if (R < 0.0) {
        lo = V;
        lo_checked = true;
      } else {
        hi = V;
      }
      double V_next = (dR > 0.0 && std::isfinite(dR)) ? V - R / dR : std::nan("");
      if (!(V_next > lo && V_next < hi)) {
        if (std::isfinite(hi)) {
          V_next = 0.5 * (lo + hi);
        } else {
          V_next = V + std::max(1.0, std::abs(V - lo));
        }
      }
      const double step_size = std::abs(V_next - V);
      V = V_next;
      if (step_size < opts.volume_tol) {
        converged = true;
        break;
      }
    }
    if (!converged || !std::isfinite(V)) {
      if (!lo_checked && residual(V_floor, nullptr) > 0.0) {
        throw SimulationFailed("cavity volume collapsed to the model's lower limit");
      }
      throw NonConvergence("cavity volume update did not converge");
    }

    const double p_solved = cavity_pressure_with_slope(V, lc_new, ta_eval, p, f).p;
    const double q_art = fl.q_art(p_solved);
    const double q_ven = fl.q_ven(p_solved);

    last_net_inflow = q_ven - q_art;
    CardiacState next;
    next.t = t_new;
    next.V = s.V + dt * (q_ven - q_art);
    next.Vart = s.Vart + dt * (q_art - q_per);
    next.Vven = s.Vven + dt * (q_per - q_ven);
    next.lc = active ? lc_new
                     : sarcomere_length(fiber_strain(next.V, p.V0, p.Vw, f.alpha, f.beta), p.ls0);
    next.p = cavity_pressure_with_slope(next.V, next.lc, ta_eval, p, f).p;
    if (!std::isfinite(next.p) || !std::isfinite(next.V) || next.V <= 0.0) {
      throw SimulationFailed("simulation produced a non-physical state");
    }
    s = next;
    out.max_conservation_drift =
        std::max(out.max_conservation_drift, std::abs(s.total_volume() - out.initial_total_volume));

    if (step < total_steps) {
      auto& tr = out.cycles[static_cast<std::size_t>(step / n)];
      tr.p.push_back(s.p);
      tr.V.push_back(s.V);
      tr.valves.push_back({q_ven > 0.0, q_art > 0.0});
      tr.lc.push_back(s.lc);
    }
  }
  out.final_state = s;
  return out;
}

SimulationResult simulate(const ROMParameters& p, const CorrectionFactors& f,
                          const SimulationOptions& opts) {
  return simulate(p, f, opts, default_initial_state(p, f));
}

HemodynamicSummary summarize(const PVTrace& trace) {
  if (trace.size() == 0) throw ValidationError("empty trace");
  HemodynamicSummary s;
  s.V_ED = *std::max_element(trace.V.begin(), trace.V.end());
  s.V_ES = *std::min_element(trace.V.begin(), trace.V.end());
  s.p_max = *std::max_element(trace.p.begin(), trace.p.end());
  s.V_stroke = s.V_ED - s.V_ES;
  s.EF = s.V_stroke / s.V_ED;
  return s;
}

void write_trace_csv(std::ostream& out, const std::vector<PVTrace>& traces) {
  out << "t_ms,p_mmHg,V_ml,cycle\n";
  char buf[128];
  for (const auto& tr : traces) {
    for (std::size_t i = 0; i < tr.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", tr.time(i), tr.p[i], tr.V[i],
                    tr.cycle_index);
      out << buf;
    }
  }
}

void write_trace_csv(const std::string& path, const std::vector<PVTrace>& traces) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open " + path + " for writing");
  write_trace_csv(f, traces);
}

}  // namespace cardiorom::onefiber
