#pragma once

#include <array>
#include <string>

#include <nlohmann/json.hpp>

namespace cardiorom::onefiber {

/// The four dimensionless correction factors of the generalized one-fiber
/// model. alpha and beta enter the stress-pressure ratio 2*alpha + 3*beta*V/Vw;
/// gamma and lambda scale the passive stiffness pair (Tp0, cp).
struct CorrectionFactors {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double lambda = 1.0;

  static constexpr std::size_t size = 4;
  static const std::array<std::string, 4>& names();

  std::array<double, 4> as_array() const { return {alpha, beta, gamma, lambda}; }
  static CorrectionFactors from_array(const std::array<double, 4>& a) {
    return {a[0], a[1], a[2], a[3]};
  }

  // Throws DomainError unless beta > 0 and gamma, lambda > 0.
  void validate() const;
};

/// Closed-loop circulation: arterial and venous compliance compartments, two
/// ideal-diode valves and a peripheral resistance. Volumes in ml, compliances
/// in ml/mmHg, resistances in mmHg*ms/ml.
struct CirculationParameters {
  double Vart0 = 500.0;
  double Vven0 = 3000.0;
  double Cart = 1.5;
  double Cven = 15.0;
  double Rart = 5.0;
  double Rven = 3.0;
  double Rper = 1000.0;

  void validate() const;
};

/// Pressures used to place the circulation at the start of a run.
struct InitialConditions {
  double p_ED = 12.0;   // mmHg, cavity
  double p_art = 80.0;  // mmHg
  double p_ven = 12.0;  // mmHg
};

/// ROM parameter set. Lengths in um, times in ms, stresses in kPa, volumes
/// in ml. Ea is read as 1/um so that Ea*(ls - lc) is dimensionless.
///
/// Tp0 and cp are the *unadapted* passive stiffnesses; the simulator uses
/// gamma*Tp0 and lambda*cp.
struct ROMParameters {
  double V0 = 44.0;
  double Vw = 136.0;
  double ls0 = 1.9;
  double lc0 = 1.5;
  double Tp0 = 0.4;
  double cp = 10.0;
  double T0 = 130.0;
  double al = 2.0;
  double Ea = 20.0;
  double v0 = 0.0075;
  double taur = 75.0;
  double taud = 150.0;
  double b = 160.0;
  double ld = -1.0;
  double tcycle = 800.0;
  double tact = 0.0;
  CirculationParameters circ;
  InitialConditions init;

  void validate() const;
};

/// Stiffnesses after applying the gamma/lambda adapter.
struct PassiveStiffness {
  double Tp0;
  double cp;
};
inline PassiveStiffness adapt_stiffness(const ROMParameters& p, const CorrectionFactors& f) {
  return {f.gamma * p.Tp0, f.lambda * p.cp};
}

nlohmann::json to_json(const ROMParameters& p);
ROMParameters rom_parameters_from_json(const nlohmann::json& j);
ROMParameters load_rom_parameters(const std::string& path);

nlohmann::json to_json(const CorrectionFactors& f);
CorrectionFactors correction_factors_from_json(const nlohmann::json& j);

}  // namespace cardiorom::onefiber
