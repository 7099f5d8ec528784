#pragma once

#include "mfgat/nn/tensor.hpp"

namespace mfgat::nn {

/// Row-wise magnitude spectrum |F(m)|, m = 0..L-1, of the full-length DFT
/// F(m) = sum_n x(n) exp(-j 2 pi m n / L). Forward only: the transform branch
/// applies it to raw inputs, so no gradient is ever propagated through it.
Matrix dft_magnitude(const Matrix& x);

}  // namespace mfgat::nn
