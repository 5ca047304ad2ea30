#include "pipeline/run_record.hpp"

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"

namespace abdoshape::pipeline {

namespace {

struct DigestContext {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  DigestContext() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw InternalError("SHA-256 initialization failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw InternalError("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) throw InternalError("SHA-256 finalization failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[digest[i] >> 4]);
      out.push_back(kHex[digest[i] & 15]);
    }
    return out;
  }
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  DigestContext d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  DigestContext d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::string relative_or_absolute(const std::filesystem::path& path, const std::filesystem::path& root) {
  std::error_code ec;
  const auto abs_path = std::filesystem::weakly_canonical(path, ec);
  const auto abs_root = std::filesystem::weakly_canonical(root, ec);
  const auto rel = abs_path.lexically_relative(abs_root);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return abs_path.generic_string();
}

RunRecord::RunRecord(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void RunRecord::add_input(const std::filesystem::path& path, const std::filesystem::path& root) {
  inputs_[relative_or_absolute(path, root)] = sha256_file(path);
}

void RunRecord::add_output(const std::filesystem::path& path, const std::filesystem::path& root) {
  outputs_.push_back(relative_or_absolute(path, root));
}

nlohmann::ordered_json RunRecord::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["config"] = config_;
  j["seeds"] = seeds_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return j;
}

std::filesystem::path RunRecord::write(const std::filesystem::path& out_dir) const {
  const auto path = out_dir / (command_ + ".run.json");
  geometry::write_file_atomic(path, to_json().dump(2) + "\n");
  return path;
}

}  // namespace abdoshape::pipeline
