#include "abdoshape/analysis/split.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "abdoshape/error.hpp"
#include "abdoshape/random.hpp"

namespace abdoshape::analysis {

Split split_50_50(std::span<const std::string> ids, std::span<const int> labels, std::uint64_t seed,
                  bool stratified) {
  const std::size_t m = ids.size();
  if (m == 0) throw InvalidArgument("cannot split an empty cohort");
  if (labels.size() != m) throw InvalidArgument("split: id and label counts differ");
  if (std::set<std::string>(ids.begin(), ids.end()).size() != m) throw InvalidArgument("split: duplicate subject id");

  Rng rng(seed);
  std::vector<char> in_train(m, 0);
  const std::size_t train_total = (m + 1) / 2;
  if (stratified) {
    std::vector<std::size_t> classes[2];
    for (std::size_t i = 0; i < m; ++i) {
      if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("split: labels must be 0 or 1");
      classes[labels[i]].push_back(i);
    }
    if (classes[0].size() < 2 || classes[1].size() < 2) {
      throw InvalidArgument("stratified split needs at least two subjects per class");
    }
    std::size_t take[2] = {classes[0].size() / 2, classes[1].size() / 2};
    std::size_t spare = train_total - take[0] - take[1];
    for (int c = 0; c < 2 && spare > 0; ++c) {
      if (classes[c].size() % 2 == 1) {
        ++take[c];
        --spare;
      }
    }
    for (int c = 0; c < 2; ++c) {
      rng.shuffle(std::span<std::size_t>(classes[c]));
      for (std::size_t k = 0; k < take[c]; ++k) in_train[classes[c][k]] = 1;
    }
  } else {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t k = 0; k < train_total; ++k) in_train[order[k]] = 1;
  }

  Split split;
  split.seed = seed;
  split.stratified = stratified;
  for (std::size_t i = 0; i < m; ++i) (in_train[i] ? split.train : split.test).push_back(ids[i]);
  return split;
}

}  // namespace abdoshape::analysis
