#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"
#include "abdoshape/geometry/marching_cubes.hpp"
#include "abdoshape/spectra/shape_dna.hpp"
#include "pipeline/commands.hpp"
#include "pipeline/model_bundle.hpp"
#include "pipeline/run_record.hpp"

namespace abdoshape::pipeline {

namespace fs = std::filesystem;
using mspnet::Organ;

namespace {

struct Item {
  std::size_t subject = 0;
  Organ organ = Organ::kLiver;
};

struct ItemResult {
  bool ok = false;
  bool skipped = false;
  std::string error;
  std::vector<double> reweighted;  // AbdomenPrint only
};

class Featurizer {
 public:
  Featurizer(const Manifest& manifest, const FeaturizeOptions& options, const GlobalOptions& global)
      : manifest_(manifest), options_(options), global_(global) {}

  fs::path output_for(const Item& item) const {
    const auto& id = manifest_.subjects[item.subject].id;
    const std::string stem = id + "_" + mspnet::organ_name(item.organ);
    return options_.method == FeatureMethod::kAbdomenPrint ? global_.out_dir / "shapedna" / (stem + ".csv")
                                                           : global_.out_dir / "clouds" / (stem + ".pcl");
  }

  fs::path input_for(const Item& item) const {
    const auto& s = manifest_.subjects[item.subject];
    return manifest_.resolve(item.organ == Organ::kLiver ? s.liver : s.spleen);
  }

  std::uint64_t cloud_seed(const Item& item) const {
    return derive_seed(global_.seed, manifest_.subjects[item.subject].id + "/" + mspnet::organ_name(item.organ));
  }

  std::string parameters() const {
    if (options_.method == FeatureMethod::kAbdomenPrint) {
      return "shapedna l=" + std::to_string(options_.eigenvalues) + " tol=" + detail_tol();
    }
    return "clouds n=" + std::to_string(options_.points) + " seed=" + std::to_string(global_.seed);
  }

  ItemResult run(const Item& item) const {
    ItemResult r;
    const auto input = input_for(item);
    const auto output = output_for(item);
    const auto key_path = fs::path(output.string() + ".key");
    try {
      const auto key = sha256_hex(sha256_file(input) + "|" + parameters());
      if (fs::exists(output) && fs::exists(key_path) && read_text(key_path) == key + "\n") {
        r.skipped = true;
        if (options_.method == FeatureMethod::kAbdomenPrint) {
          r.reweighted = spectra::parse_shape_dna_csv(read_text(output)).reweighted;
        }
        spdlog::info("featurize: {} skipped (up to date)", output.filename().string());
      } else {
        compute(item, input, output);
        if (options_.method == FeatureMethod::kAbdomenPrint) {
          r.reweighted = spectra::parse_shape_dna_csv(read_text(output)).reweighted;
        }
        geometry::write_file_atomic(key_path, key + "\n");
        spdlog::info("featurize: {} computed", output.filename().string());
      }
      r.ok = true;
    } catch (const Error& e) {
      r.error = e.what();
    } catch (const std::exception& e) {
      r.error = std::string("unexpected: ") + e.what();
    }
    return r;
  }

 private:
  std::string detail_tol() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", options_.tol);
    return buf;
  }

  void compute(const Item& item, const fs::path& input, const fs::path& output) const {
    if (options_.method == FeatureMethod::kAbdomenPrint) {
      spectra::SolverOptions solver;
      solver.tol = options_.tol;
      const auto dna = spectra::shape_dna(load_surface(input), options_.eigenvalues, solver);
      geometry::write_file_atomic(output, spectra::shape_dna_csv(dna));
      return;
    }
    geometry::PointCloud cloud;
    if (extension_of(input) == ".pcl") {
      cloud = geometry::read_cloud(input);
      if (cloud.size() != options_.points) cloud = geometry::resample_cloud(cloud, options_.points, cloud_seed(item));
    } else {
      cloud = geometry::sample_surface(load_surface(input), options_.points, cloud_seed(item));
    }
    geometry::write_cloud(output, geometry::center_cloud(cloud));
  }

  const Manifest& manifest_;
  const FeaturizeOptions& options_;
  const GlobalOptions& global_;
};

}  // namespace

FeaturizeSummary cmd_featurize(const GlobalOptions& global, const FeaturizeOptions& options) {
  if (options.method == FeatureMethod::kAbdomenPrint && options.eigenvalues < 1) {
    throw UsageError("--eigenvalues must be >= 1");
  }
  if (options.method == FeatureMethod::kClouds && options.points < 8) throw UsageError("--points must be >= 8");
  if (global.threads < 1) throw UsageError("--threads must be >= 1");

  RunRecord record("featurize");
  const auto manifest = load_manifest(options.manifest);
  record.add_input(options.manifest, global.out_dir);

  // Organs present anywhere in the cohort; a subject lacking one of them fails.
  std::vector<Organ> organs;
  for (const auto organ : {Organ::kLiver, Organ::kSpleen}) {
    for (const auto& s : manifest.subjects) {
      if (!(organ == Organ::kLiver ? s.liver : s.spleen).empty()) {
        organs.push_back(organ);
        break;
      }
    }
  }

  fs::create_directories(global.out_dir /
                         (options.method == FeatureMethod::kAbdomenPrint ? "shapedna" : "clouds"));
  Featurizer featurizer(manifest, options, global);

  std::vector<Item> items;
  std::vector<std::string> subject_errors(manifest.subjects.size());
  for (std::size_t i = 0; i < manifest.subjects.size(); ++i) {
    const auto& s = manifest.subjects[i];
    for (const auto organ : organs) {
      if ((organ == Organ::kLiver ? s.liver : s.spleen).empty()) {
        subject_errors[i] = std::string("no ") + mspnet::organ_name(organ) + " file";
      } else {
        items.push_back({i, organ});
      }
    }
  }

  std::vector<ItemResult> results(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < items.size(); k = next++) results[k] = featurizer.run(items[k]);
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(global.threads), std::max<std::size_t>(items.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  FeaturizeSummary summary;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& r = results[k];
    if (!r.ok) {
      auto& err = subject_errors[items[k].subject];
      if (err.empty()) err = std::string(mspnet::organ_name(items[k].organ)) + ": " + r.error;
      continue;
    }
    (r.skipped ? summary.skipped : summary.computed) += 1;
    record.add_input(featurizer.input_for(items[k]), global.out_dir);
    record.add_output(featurizer.output_for(items[k]), global.out_dir);
  }
  for (std::size_t i = 0; i < manifest.subjects.size(); ++i) {
    if (subject_errors[i].empty()) continue;
    spdlog::warn("featurize: subject {} failed: {}", manifest.subjects[i].id, subject_errors[i]);
    summary.failures.emplace_back(manifest.subjects[i].id, subject_errors[i]);
  }

  if (options.method == FeatureMethod::kAbdomenPrint) {
    FeatureMatrix matrix;
    for (const auto organ : organs) {
      for (int j = 1; j <= options.eigenvalues; ++j) {
        matrix.columns.push_back(std::string(mspnet::organ_name(organ)) + "_" + std::to_string(j));
      }
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < manifest.subjects.size(); ++i) {
      if (!subject_errors[i].empty()) continue;
      std::vector<double> row;
      for (std::size_t k = 0; k < items.size(); ++k) {
        if (items[k].subject != i) continue;
        row.insert(row.end(), results[k].reweighted.begin(), results[k].reweighted.end());
      }
      if (row.size() != matrix.columns.size()) {
        throw DataError("cached ShapeDNA for " + manifest.subjects[i].id + " has the wrong length; delete the cache");
      }
      matrix.ids.push_back(manifest.subjects[i].id);
      matrix.labels.push_back(manifest.subjects[i].label);
      rows.push_back(std::move(row));
    }
    matrix.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(matrix.columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        matrix.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    summary.matrix = global.out_dir / "abdomenprint.csv";
    geometry::write_file_atomic(summary.matrix, feature_matrix_csv(matrix));
    record.add_output(summary.matrix, global.out_dir);
  }

  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& [id, why] : summary.failures) failures.push_back({{"id", id}, {"error", why}});
  record.set_config({{"manifest", relative_or_absolute(options.manifest, global.out_dir)},
                     {"method", options.method == FeatureMethod::kAbdomenPrint ? "abdomenprint" : "clouds"},
                     {"eigenvalues", options.eigenvalues},
                     {"points", options.points},
                     {"tol", options.tol},
                     {"threads", global.threads},
                     {"computed", summary.computed},
                     {"skipped", summary.skipped},
                     {"failures", failures}});
  record.add_seed("global", global.seed);
  record.write(global.out_dir);

  spdlog::info("featurize: {} computed, {} skipped, {} of {} subjects failed", summary.computed, summary.skipped,
               summary.failures.size(), manifest.subjects.size());
  if (summary.failures.size() * 10 > manifest.subjects.size()) {
    throw DataError(std::to_string(summary.failures.size()) + " of " + std::to_string(manifest.subjects.size()) +
                    " subjects failed featurization (limit 10%)");
  }
  return summary;
}

}  // namespace abdoshape::pipeline
