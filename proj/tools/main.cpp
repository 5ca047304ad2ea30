#include <cstdio>
#include <exception>
#include <functional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "abdoshape/error.hpp"
#include "pipeline/commands.hpp"

namespace {

using namespace abdoshape;
using namespace abdoshape::pipeline;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

void add_mspnet_options(CLI::App* cmd, mspnet::MspNetConfig& c) {
  cmd->add_option("--points", c.points, "Points per organ cloud")->capture_default_str();
  cmd->add_option("--point-widths", c.point_widths, "Per-point layer widths")->delimiter(',')->capture_default_str();
  cmd->add_option("--tnet-widths", c.tnet_point_widths, "T-Net per-point widths")->delimiter(',')->capture_default_str();
  cmd->add_option("--tnet-dense-widths", c.tnet_dense_widths, "T-Net dense widths")->delimiter(',')->capture_default_str();
  cmd->add_option("--head-widths", c.head_widths, "Classifier widths (last must be 2)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--epochs", c.epochs)->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size)->capture_default_str();
  cmd->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--orthogonality-weight", c.orthogonality_weight)->capture_default_str();
  cmd->add_option("--coordinate-scale", c.coordinate_scale, "Input scale applied to mm coordinates")
      ->capture_default_str();
  cmd->add_flag("--shared-weights", c.shared_branch_weights, "Share branch weights across organs");
  cmd->add_flag("--affine-normalization", c.affine_normalization);
}

void add_gbt_options(CLI::App* cmd, baseline::GbtConfig& c) {
  cmd->add_option("--rounds", c.rounds)->capture_default_str();
  cmd->add_option("--gbt-lr", c.learning_rate, "Boosting shrinkage")->capture_default_str();
  cmd->add_option("--depth", c.max_depth)->capture_default_str();
  cmd->add_option("--min-leaf", c.min_leaf)->capture_default_str();
  cmd->add_option("--row-subsample", c.row_subsample)->capture_default_str();
  cmd->add_option("--column-subsample", c.column_subsample)->capture_default_str();
}

int run(int argc, char** argv) {
  CLI::App app{"Organ shape analysis: ShapeDNA/AbdomenPrint, MSPNet and GBT pipelines"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "abdoshape 0.1.0");

  GlobalOptions global;
  std::string precision = "f64";
  bool verbose = false;
  app.add_option("--seed", global.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads for featurize")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out-dir", global.out_dir, "Output directory")->capture_default_str();
  app.add_option("--precision", precision, "MSPNet parameter precision")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::function<void()> action;

  CohortOptions cohort;
  auto* gen = app.add_subcommand("gen-cohort", "Generate a synthetic two-class cohort of voxelized organs");
  gen->add_option("--per-class", cohort.per_class)->capture_default_str();
  gen->add_option("--separation", cohort.separation, "Class-1 parameter shift (0 = no signal)")->capture_default_str();
  gen->add_option("--spacing", cohort.spacing_mm, "Voxel spacing in mm")->capture_default_str();
  gen->add_option("--name", cohort.name)->capture_default_str();
  gen->callback([&] { action = [&] { cmd_gen_cohort(global, cohort); }; });

  FeaturizeOptions featurize;
  std::string feature_method = "abdomenprint";
  auto* feat = app.add_subcommand("featurize", "Compute ShapeDNA/AbdomenPrint features or surface clouds");
  feat->add_option("--manifest", featurize.manifest)->required();
  feat->add_option("--method", feature_method)->check(CLI::IsMember({"abdomenprint", "clouds"}))->capture_default_str();
  feat->add_option("-l,--eigenvalues", featurize.eigenvalues, "ShapeDNA length per organ")->capture_default_str();
  feat->add_option("-n,--points", featurize.points, "Points per cloud")->capture_default_str();
  feat->add_option("--tol", featurize.tol, "Eigensolver residual tolerance")->capture_default_str();
  feat->callback([&] {
    featurize.method = feature_method == "clouds" ? FeatureMethod::kClouds : FeatureMethod::kAbdomenPrint;
    action = [&] {
      const auto summary = cmd_featurize(global, featurize);
      std::printf("computed %zu, skipped %zu, failed %zu\n", summary.computed, summary.skipped, summary.failures.size());
    };
  });

  TrainOptions train;
  std::string train_method = "mspnet";
  std::string organs = "liver,spleen";
  std::uint64_t split_seed = 0;
  bool random_split = false;
  auto* tr = app.add_subcommand("train", "Train on the 50/50 split and report train/test AUC");
  tr->add_option("--manifest", train.manifest)->required();
  tr->add_option("--features", train.features_dir, "Directory holding clouds/ or abdomenprint.csv (default: out-dir)");
  tr->add_option("--method", train_method)->check(CLI::IsMember({"mspnet", "gbt"}))->capture_default_str();
  tr->add_option("--organs", organs, "liver, spleen or liver,spleen")->capture_default_str();
  auto* split_opt = tr->add_option("--split-seed", split_seed, "Split seed (default: --seed)");
  tr->add_flag("--random-split", random_split, "Unstratified split");
  tr->add_option("--name", train.name, "Model directory name");
  add_mspnet_options(tr, train.mspnet);
  add_gbt_options(tr, train.gbt);
  tr->callback([&] {
    train.method = train_method == "gbt" ? Method::kGbt : Method::kMspNet;
    train.organs = parse_organs(organs);
    if (split_opt->count() > 0) train.split_seed = split_seed;
    train.stratified = !random_split;
    action = [&] {
      const auto s = cmd_train(global, train);
      std::printf("train AUC %.4f, test AUC %.4f -> %s\n", s.train_auc, s.test_auc, s.model_dir.string().c_str());
    };
  });

  EvalOptions eval;
  std::string subset = "test";
  auto* ev = app.add_subcommand("eval", "Score a trained model and write ROC/AUC");
  ev->add_option("--model", eval.model_dir)->required()->check(CLI::ExistingDirectory);
  ev->add_option("--manifest", eval.manifest, "Default: the training manifest");
  ev->add_option("--features", eval.features_dir, "Default: the training features");
  ev->add_option("--subset", subset)->check(CLI::IsMember({"test", "train", "all"}))->capture_default_str();
  ev->callback([&] {
    eval.subset = subset == "all" ? EvalSubset::kAll : subset == "train" ? EvalSubset::kTrain : EvalSubset::kTest;
    action = [&] { std::printf("AUC %.4f\n", cmd_eval(global, eval)); };
  });

  EmbedOptions embed;
  std::string embed_features = "fused";
  auto* em = app.add_subcommand("embed", "t-SNE of model features, coloured by true and predicted label");
  em->add_option("--model", embed.model_dir)->required()->check(CLI::ExistingDirectory);
  em->add_option("--manifest", embed.manifest, "Default: the training manifest");
  em->add_option("--features", embed.features_dir, "Default: the training features");
  em->add_option("--perplexity", embed.perplexity)->capture_default_str();
  em->add_option("--iterations", embed.iterations)->capture_default_str();
  em->add_option("--feature-set", embed_features, "MSPNet: fused, liver or spleen")
      ->check(CLI::IsMember({"fused", "liver", "spleen"}))
      ->capture_default_str();
  em->callback([&] {
    embed.features = embed_features == "liver"    ? EmbedFeatures::kLiver
                     : embed_features == "spleen" ? EmbedFeatures::kSpleen
                                                  : EmbedFeatures::kFused;
    action = [&] {
      const auto s = cmd_embed(global, embed);
      std::printf("silhouette %.3f -> %s\n", s.silhouette_true, s.dir.string().c_str());
    };
  });

  EigenfunctionOptions eigen;
  auto* ef = app.add_subcommand("eigenfunctions", "Export the first k non-constant Laplace-Beltrami eigenfunctions");
  ef->add_option("input", eigen.input, "VOX1 or OFF file")->required();
  ef->add_option("-k", eigen.k)->capture_default_str();
  ef->add_option("--tol", eigen.tol)->capture_default_str();
  ef->callback([&] { action = [&] { std::printf("%s\n", cmd_eigenfunctions(global, eigen).string().c_str()); }; });

  auto* rep = app.add_subcommand("report", "Summarize models, evaluations and embeddings in out-dir");
  rep->callback([&] { action = [&] { std::printf("%s\n", cmd_report(global).string().c_str()); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }

  auto logger = spdlog::stderr_logger_mt("abdoshape");
  logger->set_pattern("[%l] %v");
  logger->set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_default_logger(logger);
  global.precision = precision == "f32" ? Precision::kF32 : Precision::kF64;

  try {
    action();
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kData;
  } catch (const InvalidArgument& e) {
    spdlog::error("invalid input: {}", e.what());
    return kData;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kNumerical;
  } catch (const Error& e) {
    spdlog::error("internal error: {}", e.what());
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("file system: {}", e.what());
    return kData;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fatal: %s\n", e.what());
    return kNumerical;
  }
}
