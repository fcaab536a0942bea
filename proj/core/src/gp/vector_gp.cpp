#include "cardiorom/gp/vector_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "cardiorom/errors.hpp"

namespace cardiorom::gp {

namespace {

constexpr int kStateVersion = 1;
const std::array<const char*, kFactors> kFactorNames{"alpha", "beta", "gamma", "lambda"};

}  // namespace

void TrainingRecord::validate() const {
  if (c.size() == 0 || !c.allFinite() || !mu.allFinite() || !sigma_mat.allFinite()) {
    throw ValidationError("training record has empty or non-finite entries");
  }
  if ((sigma_mat - sigma_mat.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, sigma_mat.cwiseAbs().maxCoeff())) {
    throw ValidationError("training covariance is not symmetric");
  }
  if ((sigma_mat.diagonal().array() < 0.0).any()) {
    throw ValidationError("training covariance has a negative variance");
  }
  const auto r = correlation();
  if ((r.array().abs() > 1.0 + 1e-9).any()) {
    throw ValidationError("training covariance implies correlations outside [-1, 1]");
  }
}

Eigen::Matrix4d TrainingRecord::correlation() const {
  Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
  for (int i = 0; i < kFactors; ++i) {
    for (int j = 0; j < kFactors; ++j) {
      if (i == j) continue;
      const double den = std::sqrt(sigma_mat(i, i) * sigma_mat(j, j));
      r(i, j) = den > 0.0 ? sigma_mat(i, j) / den : 0.0;
    }
  }
  return r;
}

std::array<std::pair<int, int>, kPairs> VectorGP::pairs() {
  return {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
}

std::string VectorGP::pair_name(int i, int j) {
  return std::string("rho_") + kFactorNames.at(static_cast<std::size_t>(i)) + "_" +
         kFactorNames.at(static_cast<std::size_t>(j));
}

const ScalarGP& VectorGP::corr_gp(int i, int j) const {
  if (i > j) std::swap(i, j);
  const auto ps = pairs();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    if (ps[k].first == i && ps[k].second == j) return corr_gps_.at(k);
  }
  throw ValidationError("no correlation GP for a diagonal entry");
}

std::vector<Eigen::VectorXd> VectorGP::length_scales() const {
  std::vector<Eigen::VectorXd> out;
  for (const auto& g : mean_gps_) out.push_back(g.length_scales());
  for (const auto& g : corr_gps_) out.push_back(g.length_scales());
  return out;
}

VectorGP VectorGP::build(std::vector<TrainingRecord> records, const VectorGPConfig& cfg,
                         const std::vector<Eigen::VectorXd>* length_scales) {
  if (records.empty()) throw ValidationError("vector GP needs at least one training record");
  const auto dim = records.front().c.size();
  for (const auto& r : records) {
    r.validate();
    if (r.c.size() != dim) throw ValidationError("training inputs have inconsistent dimension");
  }
  const auto n = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd X(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = records[static_cast<std::size_t>(i)].c.transpose();
  const auto bounds = default_bounds(X, cfg.lo_fraction, cfg.hi_fraction);
  const Eigen::VectorXd l_init = (bounds.lo.array() * bounds.hi.array()).sqrt();
  if (length_scales && length_scales->size() != static_cast<std::size_t>(kFactors + kPairs)) {
    throw ValidationError("expected 10 length-scale vectors");
  }

  VectorGP out;
  out.cfg_ = cfg;
  std::size_t slot = 0;
  auto make = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& noise) {
    const Eigen::VectorXd& l = length_scales ? (*length_scales)[slot] : l_init;
    ScalarGP gp(X, y, noise, l, bounds);
    if (!length_scales) {
      auto opt = cfg.optimizer;
      opt.seed = cfg.optimizer.seed + slot;
      gp = gp.optimized(opt);
    }
    ++slot;
    return gp;
  };

  for (int k = 0; k < kFactors; ++k) {
    Eigen::VectorXd y(n);
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = records[static_cast<std::size_t>(i)];
      y[i] = r.mu[k] - 1.0;
      s[i] = std::sqrt(r.sigma_mat(k, k));
    }
    out.mean_gps_.push_back(make(y, s));
  }
  for (const auto& [i, j] : pairs()) {
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) y[r] = records[static_cast<std::size_t>(r)].correlation()(i, j);
    out.corr_gps_.push_back(make(y, Eigen::VectorXd::Zero(n)));
  }
  out.records_ = std::move(records);
  return out;
}

VectorGP VectorGP::train(std::vector<TrainingRecord> records, const VectorGPConfig& cfg) {
  return build(std::move(records), cfg, nullptr);
}

VectorGP VectorGP::assemble(std::vector<TrainingRecord> records,
                            const std::vector<Eigen::VectorXd>& length_scales,
                            const VectorGPConfig& cfg) {
  return build(std::move(records), cfg, &length_scales);
}

FactorPrediction VectorGP::predict_factors(const Eigen::VectorXd& c) const {
  if (mean_gps_.empty()) throw ValidationError("vector GP is not trained");
  if (c.size() != dimension()) throw ValidationError("query dimension mismatch");
  FactorPrediction p;
  for (int k = 0; k < kFactors; ++k) {
    const auto [m, v] = mean_gps_[static_cast<std::size_t>(k)].predict(c);
    p.mu[k] = m + 1.0;
    p.sd[k] = std::sqrt(v);
  }
  p.rho.setIdentity();
  const auto ps = pairs();
  for (std::size_t q = 0; q < ps.size(); ++q) {
    const auto [i, j] = ps[q];
    const double r = std::clamp(corr_gps_[q].predict(c).first, -1.0, 1.0);
    p.rho(i, j) = p.rho(j, i) = r;
  }
  Eigen::Matrix4d S = p.sd.asDiagonal() * p.rho * p.sd.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(S, Eigen::EigenvaluesOnly);
  p.lambda_min = std::min(eig.eigenvalues().minCoeff(), 0.0);
  S.diagonal().array() -= p.lambda_min;
  p.sigma = S;
  return p;
}

double VectorGP::min_normalized_distance(const Eigen::VectorXd& c) const {
  if (records_.empty()) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(records_.size()), c.size());
  for (std::size_t i = 0; i < records_.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = records_[i].c.transpose();
  const Eigen::VectorXd range = input_ranges(X);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    best = std::min(best, ((X.row(i).transpose() - c).array() / range.array()).matrix().norm());
  }
  return best;
}

VectorGP::Insertion VectorGP::add_observation(const TrainingRecord& record) const {
  record.validate();
  if (!records_.empty() && record.c.size() != dimension()) {
    throw ValidationError("record dimension differs from the training set");
  }
  const double dist = min_normalized_distance(record.c);
  if (!(dist > cfg_.min_distance)) return {*this, false, dist};
  auto recs = records_;
  recs.push_back(record);
  if (cfg_.reoptimize_on_insert || mean_gps_.empty()) return {train(std::move(recs), cfg_), true, dist};
  return {assemble(std::move(recs), length_scales(), cfg_), true, dist};
}

namespace {

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const TrainingRecord& r) {
  nlohmann::json s = nlohmann::json::array();
  for (int i = 0; i < kFactors; ++i) s.push_back(vec(r.sigma_mat.row(i).transpose()));
  return {{"c", vec(r.c)}, {"mu", vec(r.mu)}, {"sigma_mat", s}};
}

TrainingRecord training_record_from_json(const nlohmann::json& j) {
  try {
    TrainingRecord r;
    r.c = from_vec(j.at("c").get<std::vector<double>>());
    const auto mu = j.at("mu").get<std::vector<double>>();
    if (mu.size() != kFactors) throw ParseError("record mu must have 4 entries");
    r.mu = Eigen::Map<const Eigen::Vector4d>(mu.data());
    const auto s = j.at("sigma_mat").get<std::vector<std::vector<double>>>();
    if (s.size() != kFactors) throw ParseError("record sigma_mat must be 4x4");
    for (int i = 0; i < kFactors; ++i) {
      if (s[static_cast<std::size_t>(i)].size() != kFactors) throw ParseError("record sigma_mat must be 4x4");
      for (int k = 0; k < kFactors; ++k) r.sigma_mat(i, k) = s[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("training record: ") + e.what());
  }
}

nlohmann::json to_json(const VectorGPConfig& c) {
  return {{"lo_fraction", c.lo_fraction},
          {"hi_fraction", c.hi_fraction},
          {"min_distance", c.min_distance},
          {"reoptimize_on_insert", c.reoptimize_on_insert},
          {"starts_per_dimension", c.optimizer.starts_per_dimension},
          {"optimizer_seed", c.optimizer.seed},
          {"max_iterations", c.optimizer.max_iterations}};
}

VectorGPConfig vector_gp_config_from_json(const nlohmann::json& j) {
  VectorGPConfig c;
  try {
    c.lo_fraction = j.value("lo_fraction", c.lo_fraction);
    c.hi_fraction = j.value("hi_fraction", c.hi_fraction);
    c.min_distance = j.value("min_distance", c.min_distance);
    c.reoptimize_on_insert = j.value("reoptimize_on_insert", c.reoptimize_on_insert);
    c.optimizer.starts_per_dimension = j.value("starts_per_dimension", c.optimizer.starts_per_dimension);
    c.optimizer.seed = j.value("optimizer_seed", c.optimizer.seed);
    c.optimizer.max_iterations = j.value("max_iterations", c.optimizer.max_iterations);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("GP config: ") + e.what());
  }
  if (!(c.lo_fraction > 0.0 && c.hi_fraction > c.lo_fraction) || c.min_distance < 0.0 ||
      c.optimizer.starts_per_dimension < 0 || c.optimizer.max_iterations < 1) {
    throw ValidationError("invalid GP config");
  }
  return c;
}

nlohmann::json to_json(const VectorGP& gp) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : gp.records()) records.push_back(to_json(r));
  nlohmann::json ls;
  const auto scales = gp.length_scales();
  for (int k = 0; k < kFactors; ++k) ls[kFactorNames[static_cast<std::size_t>(k)]] = vec(scales[static_cast<std::size_t>(k)]);
  const auto ps = VectorGP::pairs();
  for (std::size_t q = 0; q < ps.size(); ++q) {
    ls[VectorGP::pair_name(ps[q].first, ps[q].second)] = vec(scales[kFactors + q]);
  }
  return {{"schema_version", kStateVersion},
          {"records", records},
          {"length_scales", ls},
          {"config", to_json(gp.config())}};
}

VectorGP vector_gp_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kStateVersion) {
      throw ParseError("unsupported GP state schema version");
    }
    const VectorGPConfig cfg = vector_gp_config_from_json(j.at("config"));
    std::vector<TrainingRecord> records;
    for (const auto& r : j.at("records")) records.push_back(training_record_from_json(r));
    std::vector<Eigen::VectorXd> scales;
    const auto& ls = j.at("length_scales");
    for (const char* name : kFactorNames) scales.push_back(from_vec(ls.at(name).get<std::vector<double>>()));
    for (const auto& [a, b] : VectorGP::pairs()) {
      scales.push_back(from_vec(ls.at(VectorGP::pair_name(a, b)).get<std::vector<double>>()));
    }
    return VectorGP::assemble(std::move(records), scales, cfg);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("GP state: ") + e.what());
  }
}

}  // namespace cardiorom::gp
