#include "cardiorom/onefiber/parameters.hpp"

#include <cmath>
#include <fstream>

#include "cardiorom/errors.hpp"

namespace cardiorom::onefiber {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

double get(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ParseError(std::string("field '") + key + "' must be numeric");
  return j.at(key).get<double>();
}

}  // namespace

const std::array<std::string, 4>& CorrectionFactors::names() {
  static const std::array<std::string, 4> n{"alpha", "beta", "gamma", "lambda"};
  return n;
}

void CorrectionFactors::validate() const {
  for (double v : as_array()) {
    if (!std::isfinite(v)) throw DomainError("correction factor is not finite");
  }
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (!(gamma > 0.0) || !(lambda > 0.0)) throw DomainError("gamma and lambda must be positive");
}

void CirculationParameters::validate() const {
  require(Vart0 > 0 && Vven0 > 0, "circulation reference volumes must be positive");
  require(Cart > 0 && Cven > 0, "compliances must be positive");
  require(Rart > 0 && Rven > 0 && Rper > 0, "resistances must be positive");
}

void ROMParameters::validate() const {
  require(Vw > 0 && V0 > 0, "V0 and Vw must be positive");
  require(ls0 > 0, "ls0 must be positive");
  require(tcycle > tact && tact >= 0, "activation time must lie in [0, tcycle)");
  require(taur > 0 && taud > 0, "twitch time constants must be positive");
  require(Tp0 >= 0 && cp >= 0, "passive stiffnesses must be nonnegative");
  require(v0 >= 0 && T0 >= 0, "contractile parameters must be nonnegative");
  circ.validate();
}

nlohmann::json to_json(const ROMParameters& p) {
  return {
      {"version", 1},
      {"V0", p.V0},
      {"Vw", p.Vw},
      {"ls0", p.ls0},
      {"lc0", p.lc0},
      {"Tp0", p.Tp0},
      {"cp", p.cp},
      {"T0", p.T0},
      {"al", p.al},
      {"Ea", p.Ea},
      {"v0", p.v0},
      {"taur", p.taur},
      {"taud", p.taud},
      {"b", p.b},
      {"ld", p.ld},
      {"tcycle", p.tcycle},
      {"tact", p.tact},
      {"circulation",
       {{"Vart0", p.circ.Vart0},
        {"Vven0", p.circ.Vven0},
        {"Cart", p.circ.Cart},
        {"Cven", p.circ.Cven},
        {"Rart", p.circ.Rart},
        {"Rven", p.circ.Rven},
        {"Rper", p.circ.Rper}}},
      {"init", {{"p_ED", p.init.p_ED}, {"p_art", p.init.p_art}, {"p_ven", p.init.p_ven}}},
  };
}

ROMParameters rom_parameters_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("ROM parameter document must be an object");
  ROMParameters p;
  p.V0 = get(j, "V0", p.V0);
  p.Vw = get(j, "Vw", p.Vw);
  p.ls0 = get(j, "ls0", p.ls0);
  p.lc0 = get(j, "lc0", p.lc0);
  p.Tp0 = get(j, "Tp0", p.Tp0);
  p.cp = get(j, "cp", p.cp);
  p.T0 = get(j, "T0", p.T0);
  p.al = get(j, "al", p.al);
  p.Ea = get(j, "Ea", p.Ea);
  p.v0 = get(j, "v0", p.v0);
  p.taur = get(j, "taur", p.taur);
  p.taud = get(j, "taud", p.taud);
  p.b = get(j, "b", p.b);
  p.ld = get(j, "ld", p.ld);
  p.tcycle = get(j, "tcycle", p.tcycle);
  p.tact = get(j, "tact", p.tact);
  if (j.contains("circulation")) {
    const auto& c = j.at("circulation");
    p.circ.Vart0 = get(c, "Vart0", p.circ.Vart0);
    p.circ.Vven0 = get(c, "Vven0", p.circ.Vven0);
    p.circ.Cart = get(c, "Cart", p.circ.Cart);
    p.circ.Cven = get(c, "Cven", p.circ.Cven);
    p.circ.Rart = get(c, "Rart", p.circ.Rart);
    p.circ.Rven = get(c, "Rven", p.circ.Rven);
    p.circ.Rper = get(c, "Rper", p.circ.Rper);
  }
  if (j.contains("init")) {
    const auto& i = j.at("init");
    p.init.p_ED = get(i, "p_ED", p.init.p_ED);
    p.init.p_art = get(i, "p_art", p.init.p_art);
    p.init.p_ven = get(i, "p_ven", p.init.p_ven);
  }
  p.validate();
  return p;
}

ROMParameters load_rom_parameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open parameter file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return rom_parameters_from_json(j);
}

nlohmann::json to_json(const CorrectionFactors& f) {
  return {{"alpha", f.alpha}, {"beta", f.beta}, {"gamma", f.gamma}, {"lambda", f.lambda}};
}

CorrectionFactors correction_factors_from_json(const nlohmann::json& j) {
  if (j.is_array()) {
    if (j.size() != 4) throw ParseError("correction factors need four entries");
    return CorrectionFactors::from_array(j.get<std::array<double, 4>>());
  }
  CorrectionFactors f;
  f.alpha = get(j, "alpha", f.alpha);
  f.beta = get(j, "beta", f.beta);
  f.gamma = get(j, "gamma", f.gamma);
  f.lambda = get(j, "lambda", f.lambda);
  return f;
}

}  // namespace cardiorom::onefiber
