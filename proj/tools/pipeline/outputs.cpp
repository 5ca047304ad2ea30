#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "abdoshape/analysis/export.hpp"
#include "abdoshape/analysis/tsne.hpp"
#include "abdoshape/detail/text.hpp"
#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"
#include "abdoshape/spectra/fem.hpp"
#include "abdoshape/spectra/shape_dna.hpp"
#include "pipeline/model_bundle.hpp"

namespace abdoshape::pipeline {

namespace fs = std::filesystem;
using mspnet::Organ;
using nlohmann::ordered_json;

Manifest cmd_gen_cohort(const GlobalOptions& global, CohortOptions options) {
  RunRecord record("gen-cohort");
  options.seed = global.seed;
  fs::create_directories(global.out_dir);
  auto manifest = generate_cohort(options, global.out_dir);
  for (const auto& s : manifest.subjects) {
    record.add_output(manifest.resolve(s.liver), global.out_dir);
    record.add_output(manifest.resolve(s.spleen), global.out_dir);
  }
  record.add_output(global.out_dir / "manifest.json", global.out_dir);
  record.set_config({{"per_class", options.per_class},
                     {"separation", options.separation},
                     {"spacing_mm", options.spacing_mm},
                     {"name", options.name}});
  record.add_seed("global", global.seed);
  record.write(global.out_dir);
  spdlog::info("gen-cohort: {} subjects written to {}", manifest.subjects.size(), global.out_dir.string());
  return manifest;
}

EmbedSummary cmd_embed(const GlobalOptions& global, const EmbedOptions& options) {
  RunRecord record("embed");
  const auto bundle = load_bundle(options.model_dir);
  const auto manifest_path = options.manifest.empty() ? bundle.manifest : options.manifest;
  const auto features_dir = options.features_dir.empty() ? bundle.features_dir : options.features_dir;
  const auto manifest = load_manifest(manifest_path);
  record.add_input(manifest_path, global.out_dir);
  const auto subjects = load_subjects(manifest, features_dir, bundle.method, bundle.organs, bundle.points(),
                                      bundle.seed, record, global.out_dir);
  if (subjects.empty()) throw DataError("no subjects with features to embed");

  const char* feature_kind = "abdomenprint";
  if (bundle.net) {
    feature_kind = options.features == EmbedFeatures::kFused ? "fused"
                   : options.features == EmbedFeatures::kLiver ? "liver"
                                                               : "spleen";
    if (options.features != EmbedFeatures::kFused) {
      const auto organ = options.features == EmbedFeatures::kLiver ? Organ::kLiver : Organ::kSpleen;
      if (std::find(bundle.organs.begin(), bundle.organs.end(), organ) == bundle.organs.end()) {
        throw UsageError(std::string("model has no ") + mspnet::organ_name(organ) + " branch");
      }
    }
  } else if (options.features != EmbedFeatures::kFused) {
    throw UsageError("per-organ embedding features need an MSPNet model");
  }

  analysis::FeatureDump dump;
  std::vector<std::vector<double>> rows;
  for (const auto& s : subjects) {
    std::vector<double> row;
    if (!bundle.net) {
      row = s.print;
    } else if (options.features == EmbedFeatures::kFused) {
      row = bundle.net->global_features(s.clouds);
    } else {
      const auto organ = options.features == EmbedFeatures::kLiver ? Organ::kLiver : Organ::kSpleen;
      row = bundle.net->branch_forward(organ, s.clouds.cloud(organ));
    }
    dump.ids.push_back(s.id());
    dump.true_labels.push_back(s.label());
    dump.predicted_labels.push_back(bundle.predict(s) >= 0.5 ? 1 : 0);
    rows.push_back(std::move(row));
  }
  dump.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      dump.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }

  analysis::TsneConfig config;
  config.perplexity = options.perplexity;
  config.iterations = options.iterations;
  config.seed = global.seed;
  const auto embedding = analysis::tsne(dump.features, config);

  EmbedSummary summary;
  summary.dir = global.out_dir / ("embed_" + bundle.name);
  summary.kl_divergence = embedding.kl_divergence;
  summary.silhouette_true = analysis::silhouette(embedding.coordinates, dump.true_labels);
  const bool both_predicted =
      std::count(dump.predicted_labels.begin(), dump.predicted_labels.end(), 1) % static_cast<long>(rows.size()) != 0;

  fs::create_directories(summary.dir);
  const auto write = [&](const std::string& file, const std::string& bytes) {
    geometry::write_file_atomic(summary.dir / file, bytes);
    record.add_output(summary.dir / file, global.out_dir);
  };
  write("features.csv", analysis::feature_dump_csv(dump));
  write("embedding.csv", analysis::embedding_csv(dump, embedding.coordinates));
  write("embedding_true.svg", analysis::scatter_svg(embedding.coordinates, dump.true_labels,
                                                    "t-SNE of " + bundle.name + " features: true labels"));
  write("embedding_predicted.svg", analysis::scatter_svg(embedding.coordinates, dump.predicted_labels,
                                                         "t-SNE of " + bundle.name + " features: predicted labels"));
  ordered_json info;
  info["name"] = bundle.name;
  info["features"] = feature_kind;
  info["subjects"] = rows.size();
  info["dimension"] = dump.features.cols();
  info["perplexity"] = embedding.perplexity;
  info["iterations"] = embedding.iterations;
  info["seed"] = embedding.seed;
  info["kl_divergence"] = embedding.kl_divergence;
  info["kl_after_exaggeration"] = embedding.kl_after_exaggeration;
  info["silhouette_true"] = summary.silhouette_true;
  if (both_predicted) {
    info["silhouette_predicted"] = analysis::silhouette(embedding.coordinates, dump.predicted_labels);
  } else {
    info["silhouette_predicted"] = nullptr;
  }
  write("embed.json", info.dump(2) + "\n");

  record.set_config({{"model_dir", relative_or_absolute(options.model_dir, global.out_dir)},
                     {"manifest", relative_or_absolute(manifest_path, global.out_dir)},
                     {"features", feature_kind},
                     {"perplexity", options.perplexity},
                     {"iterations", options.iterations}});
  record.add_seed("tsne", global.seed);
  record.write(summary.dir);
  spdlog::info("embed: {} subjects, KL {:.4f}, silhouette (true labels) {:.3f}", rows.size(), embedding.kl_divergence,
               summary.silhouette_true);
  return summary;
}

namespace {

Eigen::MatrixXd parse_eigenfunction_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("vertex", 0) != 0) throw DataError("eigenfunction CSV: bad header");
  const auto k = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    if (std::stoul(cell) != rows.size()) throw DataError("eigenfunction CSV: vertex rows out of order");
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(values.size()) != k) throw DataError("eigenfunction CSV: wrong column count");
    rows.push_back(std::move(values));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), k);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) out(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace

fs::path cmd_eigenfunctions(const GlobalOptions& global, const EigenfunctionOptions& options) {
  if (options.k < 1) throw UsageError("-k must be >= 1");
  RunRecord record("eigenfunctions");
  if (!fs::exists(options.input)) throw DataError("cannot open " + options.input.string());
  record.add_input(options.input, global.out_dir);
  const auto mesh = load_surface(options.input);
  spectra::SolverOptions solver;
  solver.tol = options.tol;
  const auto table = spectra::eigenfunction_export(mesh, options.k, solver);

  const auto dir = global.out_dir / "eigenfunctions";
  fs::create_directories(dir);
  const auto stem = options.input.stem().string();
  const auto off_path = dir / (stem + ".off");
  const auto csv_path = dir / (stem + "_eigenfunctions.csv");
  geometry::write_off(off_path, mesh);
  geometry::write_file_atomic(csv_path, spectra::eigenfunction_csv(table));

  // Re-verify from the files as written.
  const auto reloaded = geometry::read_off(off_path);
  const auto values = parse_eigenfunction_csv(read_text(csv_path));
  if (values.rows() != static_cast<Eigen::Index>(reloaded.vertex_count()) || values.cols() != options.k) {
    throw DataError("eigenfunction CSV does not match the mesh");
  }
  const auto fem = spectra::assemble_fem(reloaded);
  const Eigen::MatrixXd gram = values.transpose() * (fem.mass * values);
  const double orthonormality_error =
      (gram - Eigen::MatrixXd::Identity(options.k, options.k)).cwiseAbs().maxCoeff();
  constexpr double kOrthonormalityTolerance = 1e-6;
  if (!(orthonormality_error <= kOrthonormalityTolerance)) {
    throw NumericalError("eigenfunctions are not B-orthonormal on reload (max deviation " +
                         detail::format_double(orthonormality_error) + ")");
  }

  ordered_json info;
  info["input"] = relative_or_absolute(options.input, global.out_dir);
  info["vertices"] = mesh.vertex_count();
  info["triangles"] = mesh.triangle_count();
  info["eigenvalues"] = std::vector<double>(table.eigenvalues.data(), table.eigenvalues.data() + table.eigenvalues.size());
  info["orthonormality_error"] = orthonormality_error;
  const auto json_path = dir / (stem + "_eigenfunctions.json");
  geometry::write_file_atomic(json_path, info.dump(2) + "\n");
  for (const auto& p : {off_path, csv_path, json_path}) record.add_output(p, global.out_dir);
  record.set_config({{"input", info["input"]}, {"k", options.k}, {"tol", options.tol}});
  record.write(dir);
  spdlog::info("eigenfunctions: {} vertices, k = {}, B-orthonormality deviation {:.2e}", mesh.vertex_count(),
               options.k, orthonormality_error);
  return csv_path;
}

fs::path cmd_report(const GlobalOptions& global) {
  RunRecord record("report");
  const auto sorted_dirs = [](const fs::path& parent, const std::string& prefix) {
    std::vector<fs::path> out;
    if (!fs::is_directory(parent)) return out;
    for (const auto& e : fs::directory_iterator(parent)) {
      if (e.is_directory() && e.path().filename().string().rfind(prefix, 0) == 0) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto parse = [&](const fs::path& path) {
    record.add_input(path, global.out_dir);
    try {
      return ordered_json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  };

  ordered_json report;
  report["models"] = ordered_json::array();
  report["evaluations"] = ordered_json::array();
  report["embeddings"] = ordered_json::array();
  std::ostringstream md;
  md << "# Report\n\n## Models\n\n| model | method | organs | n train | n test | train AUC | test AUC |\n"
     << "|---|---|---|---|---|---|---|\n";
  for (const auto& dir : sorted_dirs(global.out_dir / "models", "")) {
    if (!fs::exists(dir / "metrics.json")) continue;
    const auto m = parse(dir / "metrics.json");
    std::string organs;
    for (const auto& o : m.at("organs")) organs += (organs.empty() ? "" : "+") + o.get<std::string>();
    char row[256];
    std::snprintf(row, sizeof row, "| %s | %s | %s | %zu | %zu | %.4f | %.4f |\n", m.at("name").get<std::string>().c_str(),
                  m.at("method").get<std::string>().c_str(), organs.c_str(), m.at("n_train").get<std::size_t>(),
                  m.at("n_test").get<std::size_t>(), m.at("train_auc").get<double>(), m.at("test_auc").get<double>());
    md << row;
    report["models"].push_back(m);
  }
  const auto evals = sorted_dirs(global.out_dir, "eval_");
  if (!evals.empty()) md << "\n## Evaluations\n\n| model | subset | n | AUC |\n|---|---|---|---|\n";
  for (const auto& dir : evals) {
    if (!fs::exists(dir / "metrics.json")) continue;
    const auto m = parse(dir / "metrics.json");
    char row[256];
    std::snprintf(row, sizeof row, "| %s | %s | %zu | %.4f |\n", m.at("name").get<std::string>().c_str(),
                  m.at("subset").get<std::string>().c_str(), m.at("n").get<std::size_t>(), m.at("auc").get<double>());
    md << row;
    report["evaluations"].push_back(m);
  }
  const auto embeds = sorted_dirs(global.out_dir, "embed_");
  if (!embeds.empty()) {
    md << "\n## Embeddings\n\n| model | features | subjects | KL | silhouette (true labels) |\n|---|---|---|---|---|\n";
  }
  for (const auto& dir : embeds) {
    if (!fs::exists(dir / "embed.json")) continue;
    const auto m = parse(dir / "embed.json");
    char row[256];
    std::snprintf(row, sizeof row, "| %s | %s | %zu | %.4f | %.3f |\n", m.at("name").get<std::string>().c_str(),
                  m.at("features").get<std::string>().c_str(), m.at("subjects").get<std::size_t>(),
                  m.at("kl_divergence").get<double>(), m.at("silhouette_true").get<double>());
    md << row;
    report["embeddings"].push_back(m);
  }
  if (report["models"].empty() && report["evaluations"].empty() && report["embeddings"].empty()) {
    throw DataError("nothing to report in " + global.out_dir.string());
  }
  const auto json_path = global.out_dir / "report.json";
  const auto md_path = global.out_dir / "report.md";
  geometry::write_file_atomic(json_path, report.dump(2) + "\n");
  geometry::write_file_atomic(md_path, md.str());
  record.add_output(json_path, global.out_dir);
  record.add_output(md_path, global.out_dir);
  record.write(global.out_dir);
  spdlog::info("report: {} models, {} evaluations, {} embeddings", report["models"].size(),
               report["evaluations"].size(), report["embeddings"].size());
  return md_path;
}

}  // namespace abdoshape::pipeline
