#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "abdoshape/analysis/roc.hpp"

namespace abdoshape::analysis {

/// Per-subject feature rows with true and predicted labels.
struct FeatureDump {
  std::vector<std::string> ids;
  std::vector<int> true_labels;
  std::vector<int> predicted_labels;
  Eigen::MatrixXd features;  // one row per subject
};

/// CSV "id,true_label,predicted_label,f1,...,fd". Throws InvalidArgument on inconsistent sizes.
std::string feature_dump_csv(const FeatureDump& dump);
FeatureDump parse_feature_dump_csv(const std::string& text);

/// CSV "id,x,y,true_label,predicted_label".
std::string embedding_csv(const FeatureDump& dump, const Eigen::MatrixX2d& coordinates);

inline constexpr int kSvgWidth = 800;
inline constexpr int kSvgHeight = 600;

/// 800x600 scatter plot coloured by a binary label.
std::string scatter_svg(const Eigen::MatrixX2d& coordinates, std::span<const int> labels, const std::string& title);
/// 800x600 ROC curve with the chance diagonal.
std::string roc_svg(const RocResult& roc, const std::string& title);

}  // namespace abdoshape::analysis
