#include <map>

#include <spdlog/spdlog.h>

#include "abdoshape/analysis/export.hpp"
#include "abdoshape/analysis/roc.hpp"
#include "abdoshape/detail/text.hpp"
#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"
#include "abdoshape/mspnet/train.hpp"
#include "pipeline/model_bundle.hpp"

namespace abdoshape::pipeline {

namespace fs = std::filesystem;
using mspnet::Organ;
using nlohmann::ordered_json;

const char* method_name(Method method) { return method == Method::kMspNet ? "mspnet" : "gbt"; }

std::string relative_to(const fs::path& path, const fs::path& dir) {
  std::error_code ec;
  const auto rel = fs::weakly_canonical(path, ec).lexically_relative(fs::weakly_canonical(dir, ec));
  return rel.empty() ? fs::weakly_canonical(path, ec).generic_string() : rel.generic_string();
}

std::vector<SubjectData> load_subjects(const Manifest& manifest, const fs::path& features_dir, Method method,
                                       const std::vector<Organ>& organs, std::size_t points, std::uint64_t seed,
                                       RunRecord& record, const fs::path& root) {
  std::vector<SubjectData> out;
  if (method == Method::kGbt) {
    const auto path = features_dir / "abdomenprint.csv";
    if (!fs::exists(path)) throw DataError(path.string() + " not found; run featurize --method abdomenprint first");
    const auto matrix = parse_feature_matrix_csv(read_text(path));
    record.add_input(path, root);
    std::vector<Eigen::Index> columns;
    for (const auto organ : organs) {
      const std::string prefix = std::string(mspnet::organ_name(organ)) + "_";
      const auto before = columns.size();
      for (std::size_t c = 0; c < matrix.columns.size(); ++c) {
        if (matrix.columns[c].rfind(prefix, 0) == 0) columns.push_back(static_cast<Eigen::Index>(c));
      }
      if (columns.size() == before) throw DataError(path.string() + " has no " + mspnet::organ_name(organ) + " columns");
    }
    std::map<std::string, Eigen::Index> row_of;
    for (std::size_t r = 0; r < matrix.ids.size(); ++r) row_of[matrix.ids[r]] = static_cast<Eigen::Index>(r);
    for (const auto& s : manifest.subjects) {
      const auto it = row_of.find(s.id);
      if (it == row_of.end()) {
        spdlog::warn("subject {} has no AbdomenPrint row; excluded", s.id);
        continue;
      }
      SubjectData d;
      d.clouds.id = s.id;
      d.clouds.label = s.label;
      for (const auto c : columns) d.print.push_back(matrix.values(it->second, c));
      out.push_back(std::move(d));
    }
    return out;
  }

  for (const auto& s : manifest.subjects) {
    SubjectData d;
    d.clouds.id = s.id;
    d.clouds.label = s.label;
    bool complete = true;
    for (const auto organ : organs) {
      const auto path = features_dir / "clouds" / (s.id + "_" + mspnet::organ_name(organ) + ".pcl");
      if (!fs::exists(path)) {
        spdlog::warn("subject {} has no {} cloud; excluded", s.id, mspnet::organ_name(organ));
        complete = false;
        break;
      }
      auto cloud = geometry::read_cloud(path);
      record.add_input(path, root);
      if (cloud.size() != points) {
        cloud = geometry::resample_cloud(cloud, points, derive_seed(seed, s.id + "/" + mspnet::organ_name(organ)));
      }
      (organ == Organ::kLiver ? d.clouds.liver : d.clouds.spleen) = std::move(cloud);
    }
    if (complete) out.push_back(std::move(d));
  }
  return out;
}

double ModelBundle::predict(const SubjectData& subject) const {
  if (net) return net->predict_proba(subject.clouds);
  return predict_gbt(*gbt, subject.print);
}

ModelBundle load_bundle(const fs::path& model_dir) {
  const auto pipeline_path = model_dir / "pipeline.json";
  if (!fs::exists(pipeline_path)) throw DataError(model_dir.string() + " is not a model directory (no pipeline.json)");
  ModelBundle b;
  b.dir = model_dir;
  try {
    const auto j = nlohmann::json::parse(read_text(pipeline_path));
    b.name = j.at("name").get<std::string>();
    const auto method = j.at("method").get<std::string>();
    if (method != "mspnet" && method != "gbt") throw DataError("unknown method '" + method + "' in " + pipeline_path.string());
    b.method = method == "mspnet" ? Method::kMspNet : Method::kGbt;
    for (const auto& o : j.at("organs")) b.organs.push_back(mspnet::parse_organ(o.get<std::string>()));
    b.manifest = model_dir / j.at("manifest").get<std::string>();
    b.features_dir = model_dir / j.at("features_dir").get<std::string>();
    b.seed = j.at("seed").get<std::uint64_t>();
    const auto& split = j.at("split");
    b.split.seed = split.at("seed").get<std::uint64_t>();
    b.split.stratified = split.at("stratified").get<bool>();
    b.split.train = split.at("train").get<std::vector<std::string>>();
    b.split.test = split.at("test").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(pipeline_path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(pipeline_path.string() + ": " + e.what());
  }
  if (b.method == Method::kMspNet) {
    b.net = mspnet::load_model(model_dir / "model").model;
  } else {
    b.gbt = baseline::gbt_from_json(read_text(model_dir / "model.json"));
  }
  return b;
}

namespace {

struct Scored {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<double> scores;
};

Scored score(const ModelBundle& bundle, const std::vector<SubjectData>& subjects, const std::vector<std::string>& ids) {
  std::map<std::string, const SubjectData*> by_id;
  for (const auto& s : subjects) by_id[s.id()] = &s;
  Scored out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("subject " + id + " has no features");
    out.ids.push_back(id);
    out.labels.push_back(it->second->label());
    out.scores.push_back(bundle.predict(*it->second));
  }
  return out;
}

void write_roc(const fs::path& dir, const std::string& stem, const analysis::RocResult& roc, const std::string& title,
               RunRecord& record, const fs::path& root) {
  const auto csv = dir / (stem + ".csv");
  const auto json = dir / (stem + ".json");
  const auto svg = dir / (stem + ".svg");
  geometry::write_file_atomic(csv, analysis::roc_csv(roc));
  geometry::write_file_atomic(json, analysis::roc_json(roc));
  geometry::write_file_atomic(svg, analysis::roc_svg(roc, title));
  for (const auto& p : {csv, json, svg}) record.add_output(p, root);
}

void append_predictions(std::string& csv, const Scored& scored, const char* split) {
  for (std::size_t i = 0; i < scored.ids.size(); ++i) {
    csv += scored.ids[i] + "," + std::to_string(scored.labels[i]) + "," + split + "," +
           detail::format_double(scored.scores[i]) + "\n";
  }
}

}  // namespace

TrainSummary cmd_train(const GlobalOptions& global, const TrainOptions& options) {
  if (options.organs.empty()) throw UsageError("no organs given");
  RunRecord record("train");
  const auto manifest = load_manifest(options.manifest);
  record.add_input(options.manifest, global.out_dir);
  const auto features_dir = options.features_dir.empty() ? global.out_dir : options.features_dir;
  const auto split_seed = options.split_seed.value_or(global.seed);
  const std::string name = options.name.empty()
                               ? std::string(method_name(options.method)) + "_" + organs_label(options.organs)
                               : options.name;

  mspnet::MspNetConfig net_config = options.mspnet;
  net_config.structures = options.organs;
  net_config.seed = global.seed;
  net_config.single_precision_parameters = global.precision == Precision::kF32;
  baseline::GbtConfig gbt_config = options.gbt;
  gbt_config.seed = global.seed;
  if (options.method == Method::kMspNet) {
    net_config.validate();
  } else {
    gbt_config.validate();
  }

  const auto model_dir = global.out_dir / "models" / name;
  fs::create_directories(model_dir);
  const auto subjects = load_subjects(manifest, features_dir, options.method, options.organs, net_config.points,
                                      global.seed, record, global.out_dir);
  if (subjects.size() * 10 < manifest.subjects.size() * 9) {
    throw DataError("only " + std::to_string(subjects.size()) + " of " + std::to_string(manifest.subjects.size()) +
                    " subjects have features in " + features_dir.string());
  }
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& s : subjects) {
    ids.push_back(s.id());
    labels.push_back(s.label());
  }
  const auto split = analysis::split_50_50(ids, labels, split_seed, options.stratified);
  std::map<std::string, const SubjectData*> by_id;
  for (const auto& s : subjects) by_id[s.id()] = &s;

  ModelBundle bundle;
  bundle.method = options.method;
  ordered_json model_config;
  if (options.method == Method::kMspNet) {
    std::vector<mspnet::LabeledSubject> train_set;
    for (const auto& id : split.train) train_set.push_back(by_id.at(id)->clouds);
    spdlog::info("train: MSPNet {} on {} subjects, {} epochs", organs_label(options.organs), train_set.size(),
                 net_config.epochs);
    auto result = mspnet::train(train_set, net_config);
    mspnet::save_model(model_dir / "model", result.model, result.history);
    record.add_output(model_dir / "model.tnsr", global.out_dir);
    record.add_output(model_dir / "model.json", global.out_dir);
    model_config = ordered_json::parse(mspnet::config_to_json(net_config));
    bundle.net = std::move(result.model);
  } else {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(split.train.size()),
                      static_cast<Eigen::Index>(by_id.at(split.train.front())->print.size()));
    std::vector<int> y;
    for (std::size_t r = 0; r < split.train.size(); ++r) {
      const auto& row = by_id.at(split.train[r])->print;
      for (std::size_t c = 0; c < row.size(); ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
      y.push_back(by_id.at(split.train[r])->label());
    }
    spdlog::info("train: GBT on {} AbdomenPrint ({} features, {} subjects)", organs_label(options.organs), x.cols(),
                 x.rows());
    bundle.gbt = baseline::train_gbt(x, y, gbt_config);
    geometry::write_file_atomic(model_dir / "model.json", baseline::gbt_to_json(*bundle.gbt));
    record.add_output(model_dir / "model.json", global.out_dir);
    model_config = {{"rounds", gbt_config.rounds},
                    {"learning_rate", gbt_config.learning_rate},
                    {"max_depth", gbt_config.max_depth},
                    {"min_leaf", gbt_config.min_leaf},
                    {"row_subsample", gbt_config.row_subsample},
                    {"column_subsample", gbt_config.column_subsample}};
  }

  const auto train_scores = score(bundle, subjects, split.train);
  const auto test_scores = score(bundle, subjects, split.test);
  const auto train_roc = analysis::roc_auc(train_scores.scores, train_scores.labels);
  const auto test_roc = analysis::roc_auc(test_scores.scores, test_scores.labels);
  write_roc(model_dir, "roc_train", train_roc, name + " (train)", record, global.out_dir);
  write_roc(model_dir, "roc_test", test_roc, name + " (test)", record, global.out_dir);

  std::string predictions = "id,label,split,probability\n";
  append_predictions(predictions, train_scores, "train");
  append_predictions(predictions, test_scores, "test");
  geometry::write_file_atomic(model_dir / "predictions.csv", predictions);
  record.add_output(model_dir / "predictions.csv", global.out_dir);

  ordered_json organs = ordered_json::array();
  for (const auto o : options.organs) organs.push_back(mspnet::organ_name(o));
  ordered_json pipeline;
  pipeline["name"] = name;
  pipeline["method"] = method_name(options.method);
  pipeline["organs"] = organs;
  pipeline["manifest"] = relative_to(options.manifest, model_dir);
  pipeline["features_dir"] = relative_to(features_dir, model_dir);
  pipeline["seed"] = global.seed;
  pipeline["precision"] = global.precision == Precision::kF32 ? "f32" : "f64";
  pipeline["split"] = {{"seed", split_seed}, {"stratified", options.stratified}, {"train", split.train},
                       {"test", split.test}};
  pipeline["model"] = model_config;
  geometry::write_file_atomic(model_dir / "pipeline.json", pipeline.dump(2) + "\n");
  record.add_output(model_dir / "pipeline.json", global.out_dir);

  ordered_json metrics;
  metrics["name"] = name;
  metrics["method"] = method_name(options.method);
  metrics["organs"] = organs;
  metrics["n_train"] = split.train.size();
  metrics["n_test"] = split.test.size();
  metrics["train_auc"] = train_roc.auc;
  metrics["test_auc"] = test_roc.auc;
  geometry::write_file_atomic(model_dir / "metrics.json", metrics.dump(2) + "\n");
  record.add_output(model_dir / "metrics.json", global.out_dir);

  record.set_config(pipeline);
  record.add_seed("global", global.seed);
  record.add_seed("split", split_seed);
  record.write(model_dir);
  spdlog::info("train: {} train AUC {:.4f}, test AUC {:.4f}", name, train_roc.auc, test_roc.auc);
  return {model_dir, train_roc.auc, test_roc.auc};
}

double cmd_eval(const GlobalOptions& global, const EvalOptions& options) {
  RunRecord record("eval");
  const auto bundle = load_bundle(options.model_dir);
  const auto manifest_path = options.manifest.empty() ? bundle.manifest : options.manifest;
  const auto features_dir = options.features_dir.empty() ? bundle.features_dir : options.features_dir;
  const auto manifest = load_manifest(manifest_path);
  record.add_input(manifest_path, global.out_dir);
  record.add_input(options.model_dir / (bundle.net ? "model.tnsr" : "model.json"), global.out_dir);
  const auto subjects =
      load_subjects(manifest, features_dir, bundle.method, bundle.organs, bundle.points(), bundle.seed, record,
                    global.out_dir);

  std::vector<std::string> ids;
  const char* subset = "all";
  if (options.subset == EvalSubset::kAll) {
    for (const auto& s : subjects) ids.push_back(s.id());
  } else {
    subset = options.subset == EvalSubset::kTest ? "test" : "train";
    const auto& wanted = options.subset == EvalSubset::kTest ? bundle.split.test : bundle.split.train;
    for (const auto& s : subjects) {
      if (std::find(wanted.begin(), wanted.end(), s.id()) != wanted.end()) ids.push_back(s.id());
    }
  }
  if (ids.empty()) throw DataError("no subjects to evaluate");
  const auto scored = score(bundle, subjects, ids);
  const auto roc = analysis::roc_auc(scored.scores, scored.labels);

  const auto dir = global.out_dir / ("eval_" + bundle.name);
  fs::create_directories(dir);
  write_roc(dir, "roc", roc, bundle.name + " (" + subset + ")", record, global.out_dir);
  std::string predictions = "id,label,split,probability\n";
  append_predictions(predictions, scored, subset);
  geometry::write_file_atomic(dir / "predictions.csv", predictions);
  record.add_output(dir / "predictions.csv", global.out_dir);
  ordered_json metrics;
  metrics["name"] = bundle.name;
  metrics["subset"] = subset;
  metrics["n"] = ids.size();
  metrics["auc"] = roc.auc;
  geometry::write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
  record.add_output(dir / "metrics.json", global.out_dir);

  record.set_config({{"model_dir", relative_or_absolute(options.model_dir, global.out_dir)},
                     {"manifest", relative_or_absolute(manifest_path, global.out_dir)},
                     {"subset", subset}});
  record.write(dir);
  spdlog::info("eval: {} on {} subjects ({}): AUC {:.4f}", bundle.name, ids.size(), subset, roc.auc);
  return roc.auc;
}

}  // namespace abdoshape::pipeline
