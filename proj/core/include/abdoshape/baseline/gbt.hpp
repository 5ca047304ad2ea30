#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace abdoshape::baseline {

struct GbtConfig {
  int rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::size_t min_leaf = 4;
  std::uint64_t seed = 0;
  /// Fraction of rows drawn (without replacement) per round; 1 disables.
  double row_subsample = 1.0;
  /// Fraction of features considered per tree; 1 disables.
  double column_subsample = 1.0;

  void validate() const;
};

/// Flat regression tree. Node 0 is the root; a node with feature < 0 is a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;  // go left when x[feature] < threshold
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double evaluate(std::span<const double> row) const;
  int depth() const;
};

struct GbtModel {
  GbtConfig config;
  std::size_t feature_count = 0;
  double initial_score = 0.0;  // log-odds of the positive class
  std::vector<RegressionTree> trees;
  /// Mean training logistic loss before round 1 and after every round.
  std::vector<double> training_loss;

  double raw_score(std::span<const double> row) const;
};

/// Logistic boosting; each round fits a depth-limited least-squares tree to y - p
/// and sets leaves by one Newton step, clamped to [-4, 4].
/// Throws InvalidArgument for single-class labels, fewer than 4 rows or non-finite features.
GbtModel train_gbt(const Eigen::MatrixXd& features, std::span<const int> labels, const GbtConfig& config);

/// sigmoid(initial + lr * sum of trees), kept inside [1e-12, 1 - 1e-12].
/// Throws InvalidArgument on a dimension mismatch.
double predict_gbt(const GbtModel& model, std::span<const double> row);
std::vector<double> predict_gbt(const GbtModel& model, const Eigen::MatrixXd& features);

/// Mean logistic loss of probabilities against labels.
double logistic_loss(std::span<const double> probabilities, std::span<const int> labels);

std::string gbt_to_json(const GbtModel& model);
GbtModel gbt_from_json(const std::string& text);

}  // namespace abdoshape::baseline
