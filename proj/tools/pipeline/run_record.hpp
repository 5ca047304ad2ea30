#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace abdoshape::pipeline {

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Provenance of one command: its configuration, seeds, hashed inputs and the
/// files it wrote. Everything except wall_time is a function of the inputs.
class RunRecord {
 public:
  explicit RunRecord(std::string command);

  void set_config(nlohmann::ordered_json config) { config_ = std::move(config); }
  void add_seed(const std::string& name, std::uint64_t seed) { seeds_[name] = seed; }
  /// Hashes the file now; paths are stored relative to `root` when possible.
  void add_input(const std::filesystem::path& path, const std::filesystem::path& root);
  void add_output(const std::filesystem::path& path, const std::filesystem::path& root);

  const std::vector<std::string>& outputs() const { return outputs_; }
  nlohmann::ordered_json to_json() const;
  /// Writes `<out_dir>/<command>.run.json` atomically.
  std::filesystem::path write(const std::filesystem::path& out_dir) const;

 private:
  std::string command_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

std::string relative_or_absolute(const std::filesystem::path& path, const std::filesystem::path& root);

}  // namespace abdoshape::pipeline
