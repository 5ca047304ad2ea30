#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "abdoshape/baseline/gbt.hpp"
#include "abdoshape/mspnet/model.hpp"
#include "pipeline/cohort.hpp"
#include "pipeline/manifest.hpp"

namespace abdoshape::pipeline {

/// Raised for invalid command-line combinations (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Precision { kF32, kF64 };

struct GlobalOptions {
  std::uint64_t seed = 7;
  int threads = 1;
  std::filesystem::path out_dir = "out";
  Precision precision = Precision::kF64;
};

// gen-cohort ---------------------------------------------------------------

Manifest cmd_gen_cohort(const GlobalOptions& global, CohortOptions options);

// featurize ----------------------------------------------------------------

enum class FeatureMethod { kAbdomenPrint, kClouds };

struct FeaturizeOptions {
  std::filesystem::path manifest;
  FeatureMethod method = FeatureMethod::kAbdomenPrint;
  int eigenvalues = 50;    // l per organ
  std::size_t points = 1024;
  double tol = 1e-8;
};

struct FeaturizeSummary {
  std::size_t computed = 0;
  std::size_t skipped = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // subject id, reason
  std::filesystem::path matrix;                                // abdomenprint.csv, if written
};

/// AbdomenPrint: shapedna/<id>_<organ>.csv plus abdomenprint.csv.
/// Clouds: clouds/<id>_<organ>.pcl. Outputs whose cache key (input hash and
/// parameters) is unchanged are skipped. Subjects that fail are logged and
/// excluded; more than 10% failures is a DataError.
FeaturizeSummary cmd_featurize(const GlobalOptions& global, const FeaturizeOptions& options);

/// AbdomenPrint matrix: "id,label,liver_1..liver_l,spleen_1..spleen_l".
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
};
std::string feature_matrix_csv(const FeatureMatrix& matrix);
FeatureMatrix parse_feature_matrix_csv(const std::string& text);

// train / eval -------------------------------------------------------------

enum class Method { kMspNet, kGbt };

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path features_dir;  // defaults to the output directory
  Method method = Method::kMspNet;
  std::vector<mspnet::Organ> organs{mspnet::Organ::kLiver, mspnet::Organ::kSpleen};
  std::optional<std::uint64_t> split_seed;  // defaults to the global seed
  bool stratified = true;
  std::string name;  // defaults to "<method>_<organs>"
  mspnet::MspNetConfig mspnet;
  baseline::GbtConfig gbt;
};

struct TrainSummary {
  std::filesystem::path model_dir;
  double train_auc = 0.0;
  double test_auc = 0.0;
};

/// Stratified 50/50 split, training on the first half and scoring both halves.
/// Writes models/<name>/ with the model, pipeline.json, metrics.json,
/// predictions.csv and ROC CSV/JSON for each half.
TrainSummary cmd_train(const GlobalOptions& global, const TrainOptions& options);

enum class EvalSubset { kTest, kTrain, kAll };

struct EvalOptions {
  std::filesystem::path model_dir;
  std::filesystem::path manifest;       // defaults to the training manifest
  std::filesystem::path features_dir;   // defaults to the training features
  EvalSubset subset = EvalSubset::kTest;
};

/// Scores a trained model; writes eval_<name>/ with predictions, ROC and metrics.
double cmd_eval(const GlobalOptions& global, const EvalOptions& options);

// embed --------------------------------------------------------------------

enum class EmbedFeatures { kFused, kLiver, kSpleen };

struct EmbedOptions {
  std::filesystem::path model_dir;
  std::filesystem::path manifest;
  std::filesystem::path features_dir;
  double perplexity = 30.0;
  int iterations = 1000;
  /// MSPNet only: the fused pre-head feature or one branch's global feature.
  EmbedFeatures features = EmbedFeatures::kFused;
};

struct EmbedSummary {
  std::filesystem::path dir;
  double silhouette_true = 0.0;
  double kl_divergence = 0.0;
};

/// Feature dump of every subject, t-SNE, CSV and two SVG panels (true and
/// predicted labels) in embed_<name>/.
EmbedSummary cmd_embed(const GlobalOptions& global, const EmbedOptions& options);

// eigenfunctions -----------------------------------------------------------

struct EigenfunctionOptions {
  std::filesystem::path input;  // VOX1 or OFF
  int k = 7;
  double tol = 1e-8;
};

/// Writes eigenfunctions/<stem>.off and <stem>_eigenfunctions.csv, then reloads
/// both and checks B-orthonormality (NumericalError if it fails).
std::filesystem::path cmd_eigenfunctions(const GlobalOptions& global, const EigenfunctionOptions& options);

// report -------------------------------------------------------------------

/// Collects models/*/metrics.json and embed_*/embed.json into report.json and report.md.
std::filesystem::path cmd_report(const GlobalOptions& global);

// helpers shared by commands and tests ----------------------------------------

std::string organs_label(const std::vector<mspnet::Organ>& organs);
std::vector<mspnet::Organ> parse_organs(const std::string& text);
/// Stable per-item seed derived from the global seed and a key.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& key);
std::string read_text(const std::filesystem::path& path);

}  // namespace abdoshape::pipeline
