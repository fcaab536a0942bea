#include "cardiorom/pipeline/artifacts.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "cardiorom/errors.hpp"

namespace cardiorom::pipeline {

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw ValidationError("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string canonical_dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage, std::uint64_t index) {
  std::uint64_t z = master ^ (stage * 0x9E3779B97F4A7C15ULL) ^ (index * 0xBF58476D1CE4E5B9ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ArtifactStore::ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw ValidationError("cannot create artifact directory " + root_.string());
  const auto m = root_ / "manifest.json";
  if (std::filesystem::exists(m)) {
    std::ifstream in(m);
    try {
      in >> manifest_;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("manifest.json: " + std::string(e.what()));
    }
  } else {
    manifest_ = {{"version", 1}, {"artifacts", nlohmann::json::object()}};
  }
}

bool ArtifactStore::exists(const std::string& name) const {
  return std::filesystem::exists(root_ / name);
}

std::string ArtifactStore::write_text(const std::string& name, const std::string& content) {
  const auto p = root_ / name;
  std::filesystem::create_directories(p.parent_path());
  {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + p.string());
    out << content;
  }
  const auto h = sha256_hex(content);
  manifest_["artifacts"][name] = h;
  save_manifest();
  return h;
}

std::string ArtifactStore::write_json(const std::string& name, const nlohmann::json& j) {
  return write_text(name, canonical_dump(j));
}

std::string ArtifactStore::read_text(const std::string& name) const {
  std::ifstream in(root_ / name, std::ios::binary);
  if (!in) throw ValidationError("missing artifact " + (root_ / name).string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json ArtifactStore::read_json(const std::string& name) const {
  try {
    return nlohmann::json::parse(read_text(name));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(name + ": " + e.what());
  }
}

std::string ArtifactStore::hash(const std::string& name) const {
  const auto& a = manifest_.at("artifacts");
  if (!a.contains(name)) throw ValidationError("artifact " + name + " is not in the manifest");
  return a.at(name).get<std::string>();
}

void ArtifactStore::set_meta(const std::string& key, const nlohmann::json& value) {
  manifest_[key] = value;
  save_manifest();
}

void ArtifactStore::save_manifest() const {
  std::ofstream out(root_ / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write manifest");
  out << canonical_dump(manifest_);
}

}  // namespace cardiorom::pipeline
