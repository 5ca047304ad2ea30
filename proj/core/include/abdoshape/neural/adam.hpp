#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "abdoshape/neural/tensor.hpp"

namespace abdoshape::neural {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step = 0;
};

/// Zero moments shaped like the parameters.
AdamState make_adam_state(std::span<const Tensor> params, AdamConfig config = {});

/// One bias-corrected Adam update in place.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace abdoshape::neural
