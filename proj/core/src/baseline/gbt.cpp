#include "abdoshape/baseline/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "abdoshape/error.hpp"
#include "abdoshape/random.hpp"

namespace abdoshape::baseline {

namespace {

constexpr double kNewtonGuard = 1e-9;
constexpr double kLeafClamp = 4.0;
constexpr double kProbabilityFloor = 1e-12;

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // (sum_L)^2/n_L + (sum_R)^2/n_R
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const std::vector<double>& residual, const std::vector<double>& hessian,
              const std::vector<int>& features, const GbtConfig& config)
      : x_(x), residual_(residual), hessian_(hessian), features_(features), config_(config) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto split = depth < config_.max_depth ? best_split(rows) : SplitChoice{};
    if (split.feature < 0) {
      tree_.nodes[id].value = leaf_value(rows);
      return id;
    }
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto r : rows) {
      (x_(static_cast<Eigen::Index>(r), split.feature) < split.threshold ? left : right).push_back(r);
    }
    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  double leaf_value(const std::vector<std::size_t>& rows) const {
    double num = 0.0;
    double den = 0.0;
    for (auto r : rows) {
      num += residual_[r];
      den += hessian_[r];
    }
    return std::clamp(num / (den + kNewtonGuard), -kLeafClamp, kLeafClamp);
  }

  // Exact greedy search; strict improvement keeps the lowest feature, then the lowest threshold.
  SplitChoice best_split(const std::vector<std::size_t>& rows) const {
    SplitChoice best;
    const std::size_t n = rows.size();
    if (n < 2 * config_.min_leaf) return best;
    double total = 0.0;
    for (auto r : rows) total += residual_[r];
    const double parent = total * total / static_cast<double>(n);
    best.score = parent;
    std::vector<std::size_t> order(rows);
    for (int f : features_) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_(static_cast<Eigen::Index>(a), f);
        const double vb = x_(static_cast<Eigen::Index>(b), f);
        return va < vb || (va == vb && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += residual_[order[i]];
        const double v = x_(static_cast<Eigen::Index>(order[i]), f);
        const double next = x_(static_cast<Eigen::Index>(order[i + 1]), f);
        if (v == next) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < config_.min_leaf || nr < config_.min_leaf) continue;
        const double right_sum = total - left_sum;
        const double score =
            left_sum * left_sum / static_cast<double>(nl) + right_sum * right_sum / static_cast<double>(nr);
        if (score > best.score) {
          best.feature = f;
          best.threshold = 0.5 * (v + next);
          best.score = score;
        }
      }
    }
    // Reject gains lost in rounding noise.
    if (best.feature >= 0 && best.score - parent <= 1e-12 * std::max(1.0, parent)) best.feature = -1;
    return best;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<double>& residual_;
  const std::vector<double>& hessian_;
  const std::vector<int>& features_;
  const GbtConfig& config_;
  RegressionTree tree_;
};

nlohmann::json node_to_json(const RegressionTree& tree, int id) {
  const auto& node = tree.nodes[static_cast<std::size_t>(id)];
  if (node.feature < 0) return {{"leaf", node.value}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"left", node_to_json(tree, node.left)},
          {"right", node_to_json(tree, node.right)}};
}

int node_from_json(const nlohmann::json& j, RegressionTree& tree, std::size_t feature_count) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    const double v = j.at("leaf").get<double>();
    if (!std::isfinite(v)) throw DataError("GBT leaf value is not finite");
    tree.nodes[id].value = v;
    return id;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= feature_count) {
    throw DataError("GBT split feature " + std::to_string(feature) + " out of range");
  }
  tree.nodes[id].feature = feature;
  tree.nodes[id].threshold = j.at("threshold").get<double>();
  const int l = node_from_json(j.at("left"), tree, feature_count);
  const int r = node_from_json(j.at("right"), tree, feature_count);
  tree.nodes[id].left = l;
  tree.nodes[id].right = r;
  return id;
}

}  // namespace

void GbtConfig::validate() const {
  if (rounds < 0) throw InvalidArgument("GBT rounds must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InvalidArgument("GBT learning rate must lie in (0, 1]");
  if (max_depth < 1) throw InvalidArgument("GBT depth must be >= 1");
  if (min_leaf < 1) throw InvalidArgument("GBT min leaf size must be >= 1");
  if (!(row_subsample > 0.0 && row_subsample <= 1.0)) throw InvalidArgument("row subsample must lie in (0, 1]");
  if (!(column_subsample > 0.0 && column_subsample <= 1.0)) {
    throw InvalidArgument("column subsample must lie in (0, 1]");
  }
}

double RegressionTree::evaluate(std::span<const double> row) const {
  int id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    id = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(id)].value;
}

int RegressionTree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

double GbtModel::raw_score(std::span<const double> row) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.evaluate(row);
  return initial_score + config.learning_rate * sum;
}

double logistic_loss(std::span<const double> probabilities, std::span<const int> labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probabilities[i];
    loss -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss / static_cast<double>(labels.size());
}

GbtModel train_gbt(const Eigen::MatrixXd& features, std::span<const int> labels, const GbtConfig& config) {
  config.validate();
  const auto m = static_cast<std::size_t>(features.rows());
  if (labels.size() != m) {
    throw InvalidArgument("GBT: " + std::to_string(m) + " feature rows but " + std::to_string(labels.size()) +
                          " labels");
  }
  if (m < 4) throw InvalidArgument("GBT needs at least 4 rows");
  if (features.cols() < 1) throw InvalidArgument("GBT needs at least one feature");
  if (!features.allFinite()) throw InvalidArgument("GBT features contain non-finite values");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("GBT labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == m) throw InvalidArgument("GBT labels contain a single class");

  GbtModel model;
  model.config = config;
  model.feature_count = static_cast<std::size_t>(features.cols());
  const double base = static_cast<double>(positives) / static_cast<double>(m);
  model.initial_score = std::log(base / (1.0 - base));

  std::vector<double> score(m, model.initial_score);
  std::vector<double> prob(m);
  std::vector<double> residual(m);
  std::vector<double> hessian(m);
  auto refresh = [&] {
    for (std::size_t i = 0; i < m; ++i) {
      prob[i] = std::clamp(sigmoid(score[i]), kProbabilityFloor, 1.0 - kProbabilityFloor);
      residual[i] = labels[i] - prob[i];
      hessian[i] = prob[i] * (1.0 - prob[i]);
    }
    model.training_loss.push_back(logistic_loss(prob, labels));
  };
  refresh();

  Rng rng(config.seed);
  std::vector<int> all_features(model.feature_count);
  std::iota(all_features.begin(), all_features.end(), 0);
  std::vector<std::size_t> all_rows(m);
  std::iota(all_rows.begin(), all_rows.end(), 0);

  for (int round = 0; round < config.rounds; ++round) {
    std::vector<std::size_t> rows = all_rows;
    if (config.row_subsample < 1.0) {
      rng.shuffle(std::span<std::size_t>(rows));
      const auto keep = std::max<std::size_t>(
          2 * config.min_leaf, static_cast<std::size_t>(std::ceil(config.row_subsample * static_cast<double>(m))));
      rows.resize(std::min(m, keep));
      std::sort(rows.begin(), rows.end());
    }
    std::vector<int> cols = all_features;
    if (config.column_subsample < 1.0) {
      rng.shuffle(std::span<int>(cols));
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(config.column_subsample * static_cast<double>(cols.size()))));
      cols.resize(keep);
      std::sort(cols.begin(), cols.end());
    }
    TreeBuilder builder(features, residual, hessian, cols, config);
    model.trees.push_back(builder.build(std::move(rows)));
    const auto& tree = model.trees.back();
    for (std::size_t i = 0; i < m; ++i) {
      const Eigen::VectorXd row = features.row(static_cast<Eigen::Index>(i));
      score[i] += config.learning_rate * tree.evaluate(std::span<const double>(row.data(), row.size()));
    }
    refresh();
  }
  return model;
}

double predict_gbt(const GbtModel& model, std::span<const double> row) {
  if (row.size() != model.feature_count) {
    throw InvalidArgument("GBT row has " + std::to_string(row.size()) + " features, model expects " +
                          std::to_string(model.feature_count));
  }
  return std::clamp(sigmoid(model.raw_score(row)), kProbabilityFloor, 1.0 - kProbabilityFloor);
}

std::vector<double> predict_gbt(const GbtModel& model, const Eigen::MatrixXd& features) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd row = features.row(i);
    out.push_back(predict_gbt(model, std::span<const double>(row.data(), row.size())));
  }
  return out;
}

std::string gbt_to_json(const GbtModel& model) {
  nlohmann::json j;
  j["format"] = "abdoshape-gbt";
  j["config"] = {{"rounds", model.config.rounds},
                 {"learning_rate", model.config.learning_rate},
                 {"max_depth", model.config.max_depth},
                 {"min_leaf", model.config.min_leaf},
                 {"seed", model.config.seed},
                 {"row_subsample", model.config.row_subsample},
                 {"column_subsample", model.config.column_subsample}};
  j["feature_count"] = model.feature_count;
  j["initial_score"] = model.initial_score;
  j["training_loss"] = model.training_loss;
  auto trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(node_to_json(t, 0));
  j["trees"] = std::move(trees);
  return j.dump(1);
}

GbtModel gbt_from_json(const std::string& text) {
  GbtModel model;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "abdoshape-gbt") throw DataError("not a GBT model file");
    const auto& c = j.at("config");
    model.config.rounds = c.at("rounds").get<int>();
    model.config.learning_rate = c.at("learning_rate").get<double>();
    model.config.max_depth = c.at("max_depth").get<int>();
    model.config.min_leaf = c.at("min_leaf").get<std::size_t>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.row_subsample = c.value("row_subsample", 1.0);
    model.config.column_subsample = c.value("column_subsample", 1.0);
    model.feature_count = j.at("feature_count").get<std::size_t>();
    model.initial_score = j.at("initial_score").get<double>();
    model.training_loss = j.value("training_loss", std::vector<double>{});
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      node_from_json(t, tree, model.feature_count);
      model.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("GBT model JSON: ") + e.what());
  }
  model.config.validate();
  return model;
}

}  // namespace abdoshape::baseline
