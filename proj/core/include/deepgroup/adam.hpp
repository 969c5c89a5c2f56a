#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deepgroup/tensor.hpp"

namespace deepgroup {

struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Bias-corrected Adam update of every parameter, then clears their gradients.
// Throws if any parameter has no gradient buffer.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace deepgroup
