#pragma once

// Truncated prolate-ellipsoid ventricle: closed-form volumes, clinical
// dimensions, physiological range checks and volume-constrained variations.

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace cardiorom::geometry {

/// Lengths in cm. Valid when C > 0, 0 < xi_endo < xi_epi and
/// 0 < H < C cosh(xi_endo).
struct EllipsoidParams {
  double C = 4.3;
  double H = 2.4;
  double xi_endo = 0.371;
  double xi_epi = 0.678;

  bool valid() const;
  void validate() const;  // throws ValidationError
};

EllipsoidParams reference_geometry();

/// Lengths in cm, volumes in ml.
struct ClinicalDimensions {
  double D_lv = 0.0;
  double L_lv = 0.0;
  double B_lv = 0.0;
  double V = 0.0;
  double Vw = 0.0;
};

struct ShapeVariation {
  double H_tilde = 1.0;
  double C_tilde = 1.0;
};

Eigen::Vector3d prolate_point(double C, double xi, double theta, double phi);

/// Volume (ml) of the ellipsoid with radius a and half-axis c below the plane z = H.
double segment_volume(double a, double c, double H);

double cavity_volume(const EllipsoidParams& g);
double wall_volume(const EllipsoidParams& g);

/// Polar angle of the truncation plane z = H on the surface xi.
double truncation_angle(double C, double H, double xi);

ClinicalDimensions clinical_dimensions(const EllipsoidParams& g);

enum class Stage { EndSystole, EndDiastole };

struct Range {
  double lo;
  double hi;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Literature ranges (95% intervals) used for the physiological checks.
struct PhysiologicalRanges {
  Range es_D{2.8, 4.0};
  Range es_L{4.2, 8.6};
  double es_B_min = 2.0;
  Range ed_D{4.2, 5.8};
  Range ed_B{2.4, 4.4};
  Range ed_V{62.0, 150.0};
  Range ed_Vw{84.0, 213.0};
};

struct ConstraintResult {
  std::string name;
  double value;
  bool pass;
};

struct PhysiologicalCheck {
  std::vector<ConstraintResult> constraints;
  bool all_pass() const;
  std::string failures() const;
};

PhysiologicalCheck check_physiological(const ClinicalDimensions& d, Stage stage,
                                       const PhysiologicalRanges& ranges = {});

struct TransmuralCoordinates {
  double xi_endo;
  double xi_epi;
};

/// Solves cavity_volume = V_target for xi_endo, then wall_volume = Vw_target
/// for xi_epi. Throws NoBracket when no xi in the admissible interval works.
TransmuralCoordinates solve_transmural(double C, double H, double V_target, double Vw_target);

/// Geometry with C, H scaled from the reference and both volumes held fixed.
/// When `check` is non-null it receives the end-systole constraint report.
EllipsoidParams variation_geometry(const ShapeVariation& var, double V_fixed, double Vw_fixed,
                                   PhysiologicalCheck* check = nullptr);

/// Like variation_geometry but throws ConstraintViolation on a failed check.
EllipsoidParams variation_geometry_strict(const ShapeVariation& var, double V_fixed,
                                          double Vw_fixed);

nlohmann::json to_json(const EllipsoidParams& g);
EllipsoidParams ellipsoid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClinicalDimensions& d);

}  // namespace cardiorom::geometry
