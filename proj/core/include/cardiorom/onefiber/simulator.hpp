#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cardiorom/onefiber/parameters.hpp"

namespace cardiorom::onefiber {

struct CardiacState {
  double t = 0.0;     // ms
  double V = 0.0;     // ml
  double p = 0.0;     // mmHg
  double lc = 0.0;    // um
  double Vart = 0.0;  // ml
  double Vven = 0.0;  // ml

  double total_volume() const { return V + Vart + Vven; }
};

struct ValveState {
  bool mitral_open = false;
  bool aortic_open = false;
  bool isovolumetric() const { return !mitral_open && !aortic_open; }
};

/// One cycle of cavity pressure and volume on a uniform grid. Sample i sits at
/// t0 + i*dt. `valves` is filled by the simulator and may be empty for data
/// read from files.
struct PVTrace {
  double dt = 0.0;
  double t0 = 0.0;
  int cycle_index = 0;
  std::vector<double> p;
  std::vector<double> V;
  std::vector<ValveState> valves;
  /// Contractile length per sample; simulator output only.
  std::vector<double> lc;

  std::size_t size() const { return p.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }

  /// [p_0 .. p_{n-1}, V_0 .. V_{n-1}]
  Eigen::VectorXd concatenated() const;
};

struct HemodynamicSummary {
  double V_ED = 0.0;
  double V_ES = 0.0;
  double p_max = 0.0;
  double EF = 0.0;
  double V_stroke = 0.0;
};

struct SimulationOptions {
  double dt = 2.0;          // ms
  int n_cycles = 6;
  double volume_tol = 1e-10;  // ml, Newton step tolerance
  int max_iterations = 100;
};

struct SimulationResult {
  std::vector<PVTrace> cycles;
  CardiacState final_state;
  double initial_total_volume = 0.0;
  double max_conservation_drift = 0.0;  // max |V+Vart+Vven - initial| over the run
  std::uint64_t newton_iterations = 0;

  const PVTrace& steady_cycle() const { return cycles.back(); }
};

/// Contractile length after one explicit step. Before activation (t_in_cycle <=
/// tact) the contractile element follows the sarcomere: returns ls.
double contractile_step(double lc, double ls, double dt, double Ea, double v0,
                        double t_in_cycle, double tact);

struct CirculationFlows {
  double Vart_next;
  double Vven_next;
  double V_next;
  double q_art;  // aortic valve, ventricle -> arteries
  double q_ven;  // mitral valve, veins -> ventricle
  double q_per;  // arteries -> veins
  double p_art;
  double p_ven;
};

/// Explicit conservative update of the closed loop for a given cavity pressure.
CirculationFlows circulation_step(const CardiacState& s, const CirculationParameters& c, double dt);

double arterial_pressure(double Vart, const CirculationParameters& c);
double venous_pressure(double Vven, const CirculationParameters& c);

/// Time since activation for absolute time t.
double activation_time(double t, const ROMParameters& p);

/// Fiber stress (kPa) for the state's volume, contractile length and time.
double total_fiber_stress(const CardiacState& s, const ROMParameters& p, const CorrectionFactors& f);

/// Cavity pressure (mmHg) from mechanical equilibrium p = tau / f(V/Vw).
double cavity_pressure(const CardiacState& s, const ROMParameters& p, const CorrectionFactors& f);

/// Pressure and its volume derivative with lc and activation time held fixed.
struct PressureEval {
  double p;
  double dp_dV;
};
PressureEval cavity_pressure_with_slope(double V, double lc, double ta, const ROMParameters& p,
                                        const CorrectionFactors& f);

/// Passive end-diastolic state: V solves p(V) = p_ED with no activation.
CardiacState init_end_diastole(const ROMParameters& p, const CorrectionFactors& f, double p_ED);

/// init_end_diastole at params.init.p_ED, arteries and veins at their
/// configured initial pressures.
CardiacState default_initial_state(const ROMParameters& p, const CorrectionFactors& f);

SimulationResult simulate(const ROMParameters& p, const CorrectionFactors& f,
                          const SimulationOptions& opts, const CardiacState& init);

/// simulate() from default_initial_state().
SimulationResult simulate(const ROMParameters& p, const CorrectionFactors& f,
                          const SimulationOptions& opts);

HemodynamicSummary summarize(const PVTrace& trace);

void write_trace_csv(std::ostream& out, const std::vector<PVTrace>& traces);
void write_trace_csv(const std::string& path, const std::vector<PVTrace>& traces);

}  // namespace cardiorom::onefiber
