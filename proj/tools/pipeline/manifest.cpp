#include "pipeline/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"

namespace abdoshape::pipeline {

std::filesystem::path Manifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<std::string> Manifest::ids() const {
  std::vector<std::string> out;
  for (const auto& s : subjects) out.push_back(s.id);
  return out;
}

std::vector<int> Manifest::labels() const {
  std::vector<int> out;
  for (const auto& s : subjects) out.push_back(s.label);
  return out;
}

const ManifestSubject& Manifest::find(const std::string& id) const {
  for (const auto& s : subjects) {
    if (s.id == id) return s;
  }
  throw DataError("subject '" + id + "' is not in the manifest");
}

std::string manifest_to_json(const Manifest& manifest) {
  nlohmann::ordered_json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["name"] = manifest.name;
  j["seed"] = manifest.seed;
  j["subjects"] = nlohmann::ordered_json::array();
  for (const auto& s : manifest.subjects) {
    j["subjects"].push_back({{"id", s.id}, {"label", s.label}, {"liver", s.liver}, {"spleen", s.spleen}});
  }
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  try {
    const auto j = nlohmann::json::parse(text);
    const int version = j.at("schema_version").get<int>();
    if (version != kManifestSchemaVersion) {
      throw DataError("unsupported manifest schema_version " + std::to_string(version));
    }
    m.name = j.value("name", "");
    m.seed = j.value("seed", std::uint64_t{0});
    std::set<std::string> seen;
    for (const auto& s : j.at("subjects")) {
      ManifestSubject subject;
      subject.id = s.at("id").get<std::string>();
      subject.label = s.at("label").get<int>();
      subject.liver = s.value("liver", "");
      subject.spleen = s.value("spleen", "");
      if (subject.id.empty()) throw DataError("manifest subject with empty id");
      if (!seen.insert(subject.id).second) throw DataError("duplicate subject id '" + subject.id + "'");
      if (subject.label != 0 && subject.label != 1) {
        throw DataError("subject '" + subject.id + "' has label " + std::to_string(subject.label) + " (expected 0 or 1)");
      }
      if (subject.liver.empty() && subject.spleen.empty()) {
        throw DataError("subject '" + subject.id + "' lists no organ files");
      }
      m.subjects.push_back(std::move(subject));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest JSON: ") + e.what());
  }
  if (m.subjects.empty()) throw DataError("manifest lists no subjects");
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  auto m = manifest_from_json(text.str(), path.parent_path());
  for (const auto& s : m.subjects) {
    for (const auto* file : {&s.liver, &s.spleen}) {
      if (!file->empty() && !std::filesystem::exists(m.resolve(*file))) {
        throw DataError("manifest references missing file " + m.resolve(*file).string());
      }
    }
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  geometry::write_file_atomic(path, manifest_to_json(manifest));
}

}  // namespace abdoshape::pipeline
