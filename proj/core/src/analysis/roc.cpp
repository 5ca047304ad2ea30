#include "abdoshape/analysis/roc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "abdoshape/detail/text.hpp"
#include "abdoshape/error.hpp"

namespace abdoshape::analysis {

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t m = scores.size();
  if (labels.size() != m) throw InvalidArgument("roc: score and label counts differ");
  std::uint64_t positives = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(scores[i])) throw InvalidArgument("roc: non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("roc: labels must be 0 or 1");
    positives += static_cast<std::uint64_t>(labels[i]);
  }
  const std::uint64_t negatives = m - positives;
  if (positives == 0 || negatives == 0) throw InvalidArgument("roc: labels contain a single class");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult roc;
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  // Twice the Mann-Whitney U: a positive scores 2 per lower negative and 1 per tied negative.
  std::uint64_t twice_u = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t start = 0; start < m;) {
    std::size_t end = start;
    std::uint64_t group_pos = 0;
    std::uint64_t group_neg = 0;
    while (end < m && scores[order[end]] == scores[order[start]]) {
      (labels[order[end]] == 1 ? group_pos : group_neg) += 1;
      ++end;
    }
    // Negatives ranked above this group beat its positives; the rest (minus ties) lose to them.
    const std::uint64_t below = negatives - fp - group_neg;
    twice_u += group_pos * (2 * below + group_neg);
    tp += group_pos;
    fp += group_neg;
    roc.thresholds.push_back(scores[order[start]]);
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(negatives));
    start = end;
  }
  roc.auc = static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return roc;
}

double trapezoid_area(const RocResult& roc) {
  double area = 0.0;
  for (std::size_t k = 1; k < roc.fpr.size(); ++k) {
    area += (roc.fpr[k] - roc.fpr[k - 1]) * 0.5 * (roc.tpr[k] + roc.tpr[k - 1]);
  }
  return area;
}

std::string roc_csv(const RocResult& roc) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n";
  for (std::size_t k = 0; k < roc.thresholds.size(); ++k) {
    out << (std::isinf(roc.thresholds[k]) ? std::string("inf") : detail::format_double(roc.thresholds[k])) << ','
        << detail::format_double(roc.fpr[k]) << ',' << detail::format_double(roc.tpr[k]) << '\n';
  }
  return out.str();
}

std::string roc_json(const RocResult& roc) {
  nlohmann::json j;
  j["auc"] = roc.auc;
  j["points"] = roc.thresholds.size();
  return j.dump(2) + "\n";
}

}  // namespace abdoshape::analysis
