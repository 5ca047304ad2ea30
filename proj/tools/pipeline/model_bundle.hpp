#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "abdoshape/analysis/split.hpp"
#include "pipeline/commands.hpp"
#include "pipeline/run_record.hpp"

namespace abdoshape::pipeline {

/// Model inputs of one subject: clouds for MSPNet, an AbdomenPrint row for GBT.
struct SubjectData {
  mspnet::LabeledSubject clouds;
  std::vector<double> print;

  const std::string& id() const { return clouds.id; }
  int label() const { return clouds.label; }
};

/// Loads the subjects of `manifest` that have features for `organs`; the rest
/// are skipped with a warning. Every file read is hashed into `record`.
std::vector<SubjectData> load_subjects(const Manifest& manifest, const std::filesystem::path& features_dir,
                                       Method method, const std::vector<mspnet::Organ>& organs, std::size_t points,
                                       std::uint64_t seed, RunRecord& record, const std::filesystem::path& root);

/// A trained model directory as written by cmd_train.
struct ModelBundle {
  std::filesystem::path dir;
  std::string name;
  Method method = Method::kGbt;
  std::vector<mspnet::Organ> organs;
  std::filesystem::path manifest;
  std::filesystem::path features_dir;
  analysis::Split split;
  std::uint64_t seed = 0;
  std::optional<mspnet::MspNetModel> net;
  std::optional<baseline::GbtModel> gbt;

  std::size_t points() const { return net ? net->config().points : 0; }
  double predict(const SubjectData& subject) const;
};

ModelBundle load_bundle(const std::filesystem::path& model_dir);

/// `path` relative to `dir` (may contain ".."), in generic form.
std::string relative_to(const std::filesystem::path& path, const std::filesystem::path& dir);

const char* method_name(Method method);

/// Lowercase extension including the dot.
std::string extension_of(const std::filesystem::path& path);
/// Surface from a VOX1 file (marching cubes) or an OFF mesh.
geometry::TriMesh load_surface(const std::filesystem::path& path);

}  // namespace abdoshape::pipeline
