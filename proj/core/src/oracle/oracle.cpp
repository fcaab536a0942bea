#include "cardiorom/oracle/oracle.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "cardiorom/calibration/likelihood.hpp"
#include "cardiorom/errors.hpp"

namespace cardiorom::oracle {

namespace {

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const std::array<const char*, 4> kNames{"alpha", "beta", "gamma", "lambda"};

}  // namespace

Eigen::Vector4d GroundTruthField::operator()(const Eigen::VectorXd& c) const {
  if (c.size() != center.size()) throw ValidationError("field input dimension mismatch");
  const Eigen::VectorXd z = (c - center).cwiseQuotient(scale);
  Eigen::Vector4d out;
  for (int k = 0; k < 4; ++k) {
    const auto& f = factors[static_cast<std::size_t>(k)];
    out[k] = f.base + f.slope.dot(z) + f.amp * std::tanh(f.dir.dot(z));
  }
  return out;
}

Eigen::Matrix4Xd GroundTruthField::jacobian(const Eigen::VectorXd& c) const {
  Eigen::Matrix4Xd J(4, c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double h = 1e-6 * scale[j];
    Eigen::VectorXd a = c;
    Eigen::VectorXd b = c;
    a[j] += h;
    b[j] -= h;
    J.col(j) = ((*this)(a) - (*this)(b)) / (2.0 * h);
  }
  return J;
}

void GroundTruthField::check_range(const Eigen::MatrixXd& points) const {
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto t = (*this)(points.row(i).transpose());
    if ((t.array() < 0.5).any() || (t.array() > 1.5).any() || t[1] < 0.2) {
      throw ConstraintViolation("ground-truth field leaves [0.5, 1.5] at a population point");
    }
  }
}

GroundTruthField default_field(const Eigen::VectorXd& center, const Eigen::VectorXd& scale) {
  const auto d = center.size();
  if (d < 1 || scale.size() != d || (scale.array() <= 0.0).any()) {
    throw ValidationError("field center and scale must match and scales be positive");
  }
  GroundTruthField f;
  f.center = center;
  f.scale = scale;
  auto v = [&](std::initializer_list<double> entries) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    Eigen::Index i = 0;
    for (double e : entries) {
      if (i < d) out[i] = e;
      ++i;
    }
    return out;
  };
  f.factors[0] = {1.0, v({0.03, 0.01, 0.0, 0.0}), 0.015, v({0.5, 0.0, 0.5, 0.0})};
  f.factors[1] = {1.0, v({-0.025, 0.01, 0.0, 0.0}), 0.01, v({0.0, 0.5, 0.0, 0.5})};
  f.factors[2] = {1.0, v({0.02, 0.0, 0.01, 0.0}), 0.015, v({0.5, 0.5, 0.0, 0.0})};
  f.factors[3] = {1.0, v({0.03, -0.01, 0.0, 0.01}), 0.01, v({0.0, 0.0, 0.5, 0.5})};
  return f;
}

nlohmann::json to_json(const GroundTruthField& f) {
  nlohmann::json factors;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& x = f.factors[k];
    factors[kNames[k]] = {{"base", x.base}, {"slope", vec(x.slope)}, {"amp", x.amp}, {"dir", vec(x.dir)}};
  }
  return {{"center", vec(f.center)}, {"scale", vec(f.scale)}, {"factors", factors}};
}

GroundTruthField field_from_json(const nlohmann::json& j) {
  try {
    GroundTruthField f;
    f.center = from_vec(j.at("center").get<std::vector<double>>());
    f.scale = from_vec(j.at("scale").get<std::vector<double>>());
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& x = j.at("factors").at(kNames[k]);
      f.factors[k] = {x.at("base").get<double>(), from_vec(x.at("slope").get<std::vector<double>>()),
                      x.at("amp").get<double>(), from_vec(x.at("dir").get<std::vector<double>>())};
      if (f.factors[k].slope.size() != f.center.size() || f.factors[k].dir.size() != f.center.size()) {
        throw ParseError("field vectors must match the coefficient dimension");
      }
    }
    if (f.scale.size() != f.center.size()) throw ParseError("field scale must match center");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field spec: ") + e.what());
  }
}

onefiber::PVTrace synth_fom_trace(const Eigen::Vector4d& theta_true,
                                  const onefiber::ROMParameters& params,
                                  const onefiber::SimulationOptions& sim,
                                  const calibration::NoiseModel& noise, std::uint64_t seed,
                                  double noise_scale) {
  const auto f = onefiber::CorrectionFactors::from_array(
      {theta_true[0], theta_true[1], theta_true[2], theta_true[3]});
  const auto run = onefiber::simulate(params, f, sim);
  auto trace = calibration::resample_cyclic(run.steady_cycle(), noise.dt, noise.n());
  if (noise_scale == 0.0) return trace;

  const calibration::GaussianLikelihood g(calibration::build_noise_covariance(noise));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(2 * noise.n());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  const Eigen::VectorXd e = noise_scale * g.correlate(z);
  const auto n = static_cast<std::size_t>(noise.n());
  for (std::size_t i = 0; i < n; ++i) {
    trace.p[i] += e[static_cast<Eigen::Index>(i)];
    trace.V[i] += e[static_cast<Eigen::Index>(n + i)];
  }
  return trace;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": '" + s + "' is not a number");
  }
}

}  // namespace

onefiber::PVTrace ingest_fom_csv(std::istream& in, const GridSpec& grid) {
  if (!(grid.dt > 0.0) || grid.n < 2) throw ValidationError("invalid target grid");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty trace file");
  const auto header = split_csv(line);
  auto col = [&](const char* name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ParseError(std::string("missing column ") + name);
  };
  const auto it = col("t_ms");
  const auto ip = col("p_mmHg");
  const auto iv = col("V_ml");

  std::vector<double> t, p, V;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": wrong number of fields");
    }
    const double tv = parse_number(cells[it], line_no);
    if (!t.empty() && !(tv > t.back())) {
      throw ParseError("line " + std::to_string(line_no) + ": time stamps must increase");
    }
    t.push_back(tv);
    p.push_back(parse_number(cells[ip], line_no));
    V.push_back(parse_number(cells[iv], line_no));
  }
  if (t.size() < 2) throw ParseError("trace needs at least two samples");

  // The file holds one cycle; its period is the span plus one mean spacing.
  const double spacing = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  const double period = t.back() - t.front() + spacing;
  const double target = static_cast<double>(grid.n) * grid.dt;
  if (std::abs(period - target) > grid.span_tolerance * target) {
    throw GridError("trace covers " + std::to_string(period) + " ms, grid expects " +
                    std::to_string(target) + " ms");
  }

  onefiber::PVTrace out;
  out.dt = grid.dt;
  out.t0 = 0.0;
  out.p.resize(static_cast<std::size_t>(grid.n));
  out.V.resize(static_cast<std::size_t>(grid.n));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < grid.n; ++i) {
    const double tq = t.front() + static_cast<double>(i) * grid.dt;
    while (k + 1 < t.size() && t[k + 1] <= tq) ++k;
    // Between the last sample and the wrapped first one when tq passes t.back().
    const double t0 = t[k];
    const double t1 = k + 1 < t.size() ? t[k + 1] : t.front() + period;
    const double p1 = k + 1 < t.size() ? p[k + 1] : p.front();
    const double v1 = k + 1 < t.size() ? V[k + 1] : V.front();
    const double w = (tq - t0) / (t1 - t0);
    const auto idx = static_cast<std::size_t>(i);
    out.p[idx] = w == 0.0 ? p[k] : (1.0 - w) * p[k] + w * p1;
    out.V[idx] = w == 0.0 ? V[k] : (1.0 - w) * V[k] + w * v1;
  }
  return out;
}

onefiber::PVTrace ingest_fom_csv(const std::string& path, const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file " + path);
  return ingest_fom_csv(in, grid);
}

nlohmann::json dataset_manifest(const std::vector<FomRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"index", r.index},
                   {"c", vec(r.c)},
                   {"trace_file", r.trace_file},
                   {"provenance", r.provenance == Provenance::Synthetic ? "synthetic" : "file"},
                   {"theta_true", vec(r.theta_true)},
                   {"seed", r.seed}});
  }
  return {{"version", 1}, {"records", arr}};
}

std::vector<FomRecord> dataset_from_manifest(const nlohmann::json& j) {
  std::vector<FomRecord> out;
  try {
    for (const auto& x : j.at("records")) {
      FomRecord r;
      r.index = x.at("index").get<int>();
      r.c = from_vec(x.at("c").get<std::vector<double>>());
      r.trace_file = x.at("trace_file").get<std::string>();
      r.provenance = x.at("provenance").get<std::string>() == "file" ? Provenance::File : Provenance::Synthetic;
      const auto th = x.at("theta_true").get<std::vector<double>>();
      if (th.size() != 4) throw ParseError("theta_true must have 4 entries");
      r.theta_true = Eigen::Map<const Eigen::Vector4d>(th.data());
      r.seed = x.at("seed").get<std::uint64_t>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset manifest: ") + e.what());
  }
  return out;
}

}  // namespace cardiorom::oracle
