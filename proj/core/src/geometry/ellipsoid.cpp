#include "cardiorom/geometry/ellipsoid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cardiorom/errors.hpp"

namespace cardiorom::geometry {

namespace {

constexpr double kXiMax = 5.0;

// Bisection on an increasing function; throws NoBracket if target is not
// attained inside [lo, hi].
template <class F>
double bisect_increasing(F&& f, double lo, double hi, double target, const char* what) {
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (!(f_lo <= target && target <= f_hi)) {
    throw NoBracket(std::string("no ") + what + " reaches the requested value");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

bool EllipsoidParams::valid() const {
  return std::isfinite(C) && std::isfinite(H) && std::isfinite(xi_endo) && std::isfinite(xi_epi) &&
         C > 0.0 && xi_endo > 0.0 && xi_epi > xi_endo && H > 0.0 && H < C * std::cosh(xi_endo);
}

void EllipsoidParams::validate() const {
  if (!valid()) throw ValidationError("invalid ellipsoid parameters");
}

EllipsoidParams reference_geometry() { return {}; }

Eigen::Vector3d prolate_point(double C, double xi, double theta, double phi) {
  const double r = C * std::sinh(xi) * std::sin(theta);
  return {r * std::cos(phi), r * std::sin(phi), C * std::cosh(xi) * std::cos(theta)};
}

double segment_volume(double a, double c, double H) {
  return std::numbers::pi * a * a * (2.0 * c / 3.0 + H - H * H * H / (3.0 * c * c));
}

double cavity_volume(const EllipsoidParams& g) {
  return segment_volume(g.C * std::sinh(g.xi_endo), g.C * std::cosh(g.xi_endo), g.H);
}

double wall_volume(const EllipsoidParams& g) {
  return segment_volume(g.C * std::sinh(g.xi_epi), g.C * std::cosh(g.xi_epi), g.H) -
         cavity_volume(g);
}

double truncation_angle(double C, double H, double xi) {
  const double r = H / (C * std::cosh(xi));
  if (r > 1.0) throw DomainError("truncation plane lies above the ellipsoid");
  return std::acos(r);
}

ClinicalDimensions clinical_dimensions(const EllipsoidParams& g) {
  ClinicalDimensions d;
  const double c = g.C * std::cosh(g.xi_endo);
  d.D_lv = 2.0 * g.C * std::sinh(g.xi_endo);
  d.L_lv = g.H + c;
  d.B_lv = d.D_lv * std::sin(truncation_angle(g.C, g.H, g.xi_endo));
  d.V = cavity_volume(g);
  d.Vw = wall_volume(g);
  return d;
}

bool PhysiologicalCheck::all_pass() const {
  for (const auto& c : constraints) {
    if (!c.pass) return false;
  }
  return true;
}

std::string PhysiologicalCheck::failures() const {
  std::ostringstream os;
  for (const auto& c : constraints) {
    if (!c.pass) os << (os.tellp() > 0 ? ", " : "") << c.name << "=" << c.value;
  }
  return os.str();
}

PhysiologicalCheck check_physiological(const ClinicalDimensions& d, Stage stage,
                                       const PhysiologicalRanges& r) {
  PhysiologicalCheck out;
  if (stage == Stage::EndSystole) {
    out.constraints = {{"D_lv", d.D_lv, r.es_D.contains(d.D_lv)},
                       {"L_lv", d.L_lv, r.es_L.contains(d.L_lv)},
                       {"B_lv", d.B_lv, d.B_lv >= r.es_B_min}};
  } else {
    out.constraints = {{"D_lv", d.D_lv, r.ed_D.contains(d.D_lv)},
                       {"B_lv", d.B_lv, r.ed_B.contains(d.B_lv)},
                       {"V", d.V, r.ed_V.contains(d.V)},
                       {"Vw", d.Vw, r.ed_Vw.contains(d.Vw)}};
  }
  return out;
}

TransmuralCoordinates solve_transmural(double C, double H, double V_target, double Vw_target) {
  if (!(C > 0.0) || !(H > 0.0) || !(V_target > 0.0) || !(Vw_target > 0.0)) {
    throw ValidationError("transmural solve requires positive C, H and volumes");
  }
  // The plane z = H must cut the surface: C cosh(xi) > H.
  const double xi_min = H < C ? 0.0 : std::acosh(H / C);
  auto seg = [&](double xi) {
    return segment_volume(C * std::sinh(xi), C * std::cosh(xi), H);
  };
  const double lo = xi_min + 1e-12;
  const double xi_endo = bisect_increasing(seg, lo, kXiMax, V_target, "endocardial coordinate");
  const double xi_epi =
      bisect_increasing(seg, xi_endo, kXiMax, V_target + Vw_target, "epicardial coordinate");
  return {xi_endo, xi_epi};
}

EllipsoidParams variation_geometry(const ShapeVariation& var, double V_fixed, double Vw_fixed,
                                   PhysiologicalCheck* check) {
  if (!(var.H_tilde > 0.0) || !(var.C_tilde > 0.0)) {
    throw ValidationError("shape multipliers must be positive");
  }
  const auto ref = reference_geometry();
  EllipsoidParams g;
  g.C = var.C_tilde * ref.C;
  g.H = var.H_tilde * ref.H;
  const auto xi = solve_transmural(g.C, g.H, V_fixed, Vw_fixed);
  g.xi_endo = xi.xi_endo;
  g.xi_epi = xi.xi_epi;
  g.validate();
  if (check) *check = check_physiological(clinical_dimensions(g), Stage::EndSystole);
  return g;
}

EllipsoidParams variation_geometry_strict(const ShapeVariation& var, double V_fixed,
                                          double Vw_fixed) {
  PhysiologicalCheck check;
  auto g = variation_geometry(var, V_fixed, Vw_fixed, &check);
  if (!check.all_pass()) throw ConstraintViolation("non-physiological geometry: " + check.failures());
  return g;
}

nlohmann::json to_json(const EllipsoidParams& g) {
  return {{"C_cm", g.C}, {"H_cm", g.H}, {"xi_endo", g.xi_endo}, {"xi_epi", g.xi_epi}};
}

EllipsoidParams ellipsoid_from_json(const nlohmann::json& j) {
  try {
    EllipsoidParams g{j.at("C_cm").get<double>(), j.at("H_cm").get<double>(),
                      j.at("xi_endo").get<double>(), j.at("xi_epi").get<double>()};
    g.validate();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("geometry file: ") + e.what());
  }
}

nlohmann::json to_json(const ClinicalDimensions& d) {
  return {{"D_lv", d.D_lv}, {"L_lv", d.L_lv}, {"B_lv", d.B_lv}, {"V", d.V}, {"Vw", d.Vw}};
}

}  // namespace cardiorom::geometry
