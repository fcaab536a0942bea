#include "cardiorom/onefiber/relations.hpp"

#include <cmath>

#include "cardiorom/errors.hpp"

namespace cardiorom::onefiber {

double f_generalized(double v_ratio, double alpha, double beta) {
  return 2.0 * alpha + 3.0 * beta * v_ratio;
}

double f_cylindrical(double v_ratio) { return 1.0 + 3.0 * v_ratio; }

double f_rsym(double v_ratio) {
  if (!(v_ratio > 0.0)) throw DomainError("f_rsym requires V/Vw > 0");
  return 3.0 / std::log1p(1.0 / v_ratio);
}

double f_rsym_derivative(double v_ratio) {
  if (!(v_ratio > 0.0)) throw DomainError("f_rsym requires V/Vw > 0");
  const double L = std::log1p(1.0 / v_ratio);
  // d/dv [3 L^-1] = 3 L^-2 / (v^2 (1 + 1/v)) = 3 / (L^2 v (v + 1))
  return 3.0 / (L * L * v_ratio * (v_ratio + 1.0));
}

TaylorCoefficients taylor_coefficients(double eta) {
  if (!(eta > 0.0)) throw DomainError("Taylor expansion point must be positive");
  const double L = std::log1p(1.0 / eta);
  const double eL = eta * L;
  const double beta = 3.0 / (eL * eL) / (1.0 + 1.0 / eta);
  const double alpha = 3.0 / L - eta * beta;
  return {alpha, beta};
}

double fiber_strain(double V, double V0, double Vw, double alpha, double beta) {
  const double num = f_generalized(V / Vw, alpha, beta);
  const double den = f_generalized(V0 / Vw, alpha, beta);
  if (!(num > 0.0) || !(den > 0.0)) {
    throw DomainError("fiber strain log argument is nonpositive");
  }
  if (beta == 0.0) return (V - V0) / (Vw * den);
  // log1p keeps the small-beta limit (V - V0)/(2 alpha Vw) accurate.
  return std::log1p(3.0 * beta * (V - V0) / (Vw * den)) / (3.0 * beta);
}

double fiber_strain_derivative(double V, double Vw, double alpha, double beta) {
  const double f = f_generalized(V / Vw, alpha, beta);
  if (!(f > 0.0)) throw DomainError("stress-pressure ratio is nonpositive");
  return 1.0 / (Vw * f);
}

double sarcomere_length(double eps_fiber, double ls0) { return ls0 * std::exp(eps_fiber); }

double passive_fiber_stress(double ls, double ls0, double Tp0, double cp) {
  if (ls <= ls0) return 0.0;
  return Tp0 * std::expm1(cp * (ls - ls0));
}

double passive_fiber_stress_derivative(double ls, double ls0, double Tp0, double cp) {
  if (ls <= ls0) return 0.0;
  return Tp0 * cp * std::exp(cp * (ls - ls0));
}

double f_iso(double lc, double lc0, double T0, double al) {
  if (lc < lc0) return 0.0;
  const double t = std::tanh(al * (lc - lc0));
  return T0 * t * t;
}

double f_twitch(double ta, double ls, double taur, double taud, double b, double ld) {
  const double t_max = b * (ls - ld);
  if (t_max <= 0.0 || ta < 0.0 || ta > t_max) return 0.0;
  const double rise = std::tanh(ta / taur);
  const double decay = std::tanh((t_max - ta) / taud);
  return rise * rise * decay * decay;
}

double f_twitch_dls(double ta, double ls, double taur, double taud, double b, double ld) {
  const double t_max = b * (ls - ld);
  if (t_max <= 0.0 || ta < 0.0 || ta > t_max) return 0.0;
  const double rise = std::tanh(ta / taur);
  const double decay = std::tanh((t_max - ta) / taud);
  const double sech2 = 1.0 - decay * decay;
  return rise * rise * 2.0 * decay * sech2 * b / taud;
}

double active_fiber_stress(double ls, double lc, double ta, const ROMParameters& p) {
  if (ta < 0.0) return 0.0;
  const double twitch = f_twitch(ta, ls, p.taur, p.taud, p.b, p.ld);
  if (twitch == 0.0) return 0.0;
  return f_iso(lc, p.lc0, p.T0, p.al) * twitch * p.Ea * (ls - lc);
}

}  // namespace cardiorom::onefiber
