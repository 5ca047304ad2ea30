#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace abdoshape::pipeline {

inline constexpr int kManifestSchemaVersion = 1;

struct ManifestSubject {
  std::string id;
  int label = 0;
  std::string liver;   // VOX1, OFF or PCL1 file, relative to the manifest directory
  std::string spleen;

  friend bool operator==(const ManifestSubject&, const ManifestSubject&) = default;
};

struct Manifest {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<ManifestSubject> subjects;
  /// Directory that relative paths resolve against; not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  std::vector<std::string> ids() const;
  std::vector<int> labels() const;
  const ManifestSubject& find(const std::string& id) const;

  friend bool operator==(const Manifest& a, const Manifest& b) {
    return a.name == b.name && a.seed == b.seed && a.subjects == b.subjects;
  }
};

std::string manifest_to_json(const Manifest& manifest);
/// Parses and validates: schema version, unique ids, binary labels. File
/// existence is checked by load_manifest.
Manifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir);

/// Throws DataError for a malformed manifest or a missing referenced file.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace abdoshape::pipeline
