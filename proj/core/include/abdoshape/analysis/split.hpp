#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace abdoshape::analysis {

struct Split {
  std::vector<std::string> train;  // in cohort order
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  bool stratified = true;
};

/// Seeded halves: the training half gets ceil(m / 2) subjects.
/// Stratified splits take floor(n_c / 2) of each class and give the remaining
/// training slots to odd-sized classes in label order, so every class is within
/// one subject of 50%. Throws InvalidArgument for an empty cohort, duplicate ids,
/// or (stratified) fewer than two subjects in a class.
Split split_50_50(std::span<const std::string> ids, std::span<const int> labels, std::uint64_t seed,
                  bool stratified = true);

}  // namespace abdoshape::analysis
