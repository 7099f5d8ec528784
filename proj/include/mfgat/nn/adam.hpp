#pragma once

#include "mfgat/nn/tensor.hpp"

#include <span>
#include <vector>

namespace mfgat::nn {

struct AdamState {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// Bias-corrected Adam update of every tensor from its own `grad` slot.
// Moments are created lazily on the first call and must keep matching shapes.
void adam_step(std::span<Tensor* const> params, AdamState& state);

}  // namespace mfgat::nn
