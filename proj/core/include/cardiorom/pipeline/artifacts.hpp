#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace cardiorom::pipeline {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Canonical serialization used for hashing and for every JSON artifact.
std::string canonical_dump(const nlohmann::json& j);

/// Mixes a master seed with a stage tag and index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage, std::uint64_t index = 0);

/// Plain directory of artifacts plus manifest.json mapping each artifact to
/// its SHA-256. The manifest is rewritten after every write.
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& name) const { return root_ / name; }
  bool exists(const std::string& name) const;

  /// Writes `content` to root/name and records its hash.
  std::string write_text(const std::string& name, const std::string& content);
  std::string write_json(const std::string& name, const nlohmann::json& j);
  std::string read_text(const std::string& name) const;
  nlohmann::json read_json(const std::string& name) const;
  /// Hash recorded in the manifest; throws ValidationError if absent.
  std::string hash(const std::string& name) const;

  /// Extra manifest fields (config hash, seeds, counts).
  void set_meta(const std::string& key, const nlohmann::json& value);
  const nlohmann::json& manifest() const { return manifest_; }

 private:
  void save_manifest() const;

  std::filesystem::path root_;
  nlohmann::json manifest_;
};

}  // namespace cardiorom::pipeline
