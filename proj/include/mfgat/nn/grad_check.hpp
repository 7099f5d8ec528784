#pragma once

#include "mfgat/nn/tape.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace mfgat::nn {

// Builds a scalar loss on the given tape. Must be a pure function of the
// tensors' current `data` (no dropout or other hidden randomness).
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Coordinates probed per tensor; 0 probes every coordinate.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// Compares backward-pass gradients against central differences. The error of
/// one coordinate is |a - n| / max(|a|, |n|, 1e-8); the result holds the worst.
/// Throws NumericError when the loss is non-finite at any probe point.
GradCheckResult grad_check(const LossBuilder& loss, std::span<Tensor* const> params, const GradCheckOptions& options = {});

}  // namespace mfgat::nn
