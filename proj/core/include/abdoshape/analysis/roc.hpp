#pragma once

#include <span>
#include <string>
#include <vector>

namespace abdoshape::analysis {

/// ROC curve over sorted unique thresholds (descending). Point k classifies
/// score >= thresholds[k] as positive; point 0 has threshold +inf and sits at (0, 0).
struct RocResult {
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

/// AUC is the tie-aware Mann-Whitney statistic, counted in integers.
/// Throws InvalidArgument for single-class labels, non-finite scores or a length mismatch.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Trapezoidal area under the stored curve.
double trapezoid_area(const RocResult& roc);

// CSV "threshold,fpr,tpr" and JSON {"auc": ...}.
std::string roc_csv(const RocResult& roc);
std::string roc_json(const RocResult& roc);

}  // namespace abdoshape::analysis
