#pragma once

// Closed-form pieces of the one-fiber model: stress-pressure ratios, the
// fiber-strain integral, the sarcomere constitutive law and the active
// contraction functions. All functions are pure.

#include "cardiorom/onefiber/parameters.hpp"

namespace cardiorom::onefiber {

inline constexpr double kMmHgPerKPa = 7.5006;

/// 2*alpha + 3*beta*v, the generalized stress-pressure ratio tau/p.
double f_generalized(double v_ratio, double alpha, double beta);

/// Empirical cylindrical-shell ratio 1 + 3v (alpha = 1/2, beta = 1).
double f_cylindrical(double v_ratio);

/// Rotationally symmetric nonlinear ratio 3 / ln(1 + 1/v). Throws DomainError for v <= 0.
double f_rsym(double v_ratio);
double f_rsym_derivative(double v_ratio);

struct TaylorCoefficients {
  double alpha_star;
  double beta_star;
};

/// First-order expansion of f_rsym at eta, written as alpha* + beta* v.
TaylorCoefficients taylor_coefficients(double eta);

/// Logarithmic fiber strain between V0 and V for the generalized ratio.
double fiber_strain(double V, double V0, double Vw, double alpha, double beta);

/// d(eps)/dV = 1 / (Vw * f_generalized(V/Vw)).
double fiber_strain_derivative(double V, double Vw, double alpha, double beta);

double sarcomere_length(double eps_fiber, double ls0);

double passive_fiber_stress(double ls, double ls0, double Tp0, double cp);
double passive_fiber_stress_derivative(double ls, double ls0, double Tp0, double cp);

double f_iso(double lc, double lc0, double T0, double al);

/// Twitch envelope in [0, 1]. Returns 0 for every ta when b*(ls - ld) <= 0.
double f_twitch(double ta, double ls, double taur, double taud, double b, double ld);
double f_twitch_dls(double ta, double ls, double taur, double taud, double b, double ld);

double active_fiber_stress(double ls, double lc, double ta, const ROMParameters& p);

}  // namespace cardiorom::onefiber
