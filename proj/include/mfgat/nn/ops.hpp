#pragma once

#include "mfgat/nn/tape.hpp"
#include "mfgat/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mfgat::nn {

// Linear algebra
Var matmul(Var a, Var b);
// y = x W + b with b a [1, m] row broadcast over the rows of x.
Var affine(Var x, Var weight, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
// Adds a [1, m] row vector to every row of `a`.
Var add_row(Var a, Var row);
// Multiplies row i of `a` by s(i, 0); `s` is [rows, 1].
Var row_scale(Var a, Var s);

// Activations
Var sigmoid(Var x);
Var tanh(Var x);
Var leaky_relu(Var x, double slope);
// Softmax along `axis` (0: down each column, 1: across each row), max-subtracted.
Var softmax(Var x, int axis = 1);

// Structure
Var concat_cols(std::span<const Var> parts);
Var concat_cols(Var a, Var b);
Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count);
Var slice_rows(Var x, Eigen::Index begin, Eigen::Index count);
// Row-major reinterpretation; rows * cols must equal the element count.
Var reshape(Var x, Eigen::Index rows, Eigen::Index cols);

// Reductions and losses
Var sum(Var x);
Var mean(Var x);
// Mean over rows of -log softmax(logits)[label].
Var cross_entropy(Var logits, std::span<const int> labels);

// Inverted dropout. Identity when !training or p == 0.
Var dropout(Var x, double p, bool training, Rng& rng);
Var dropout(Var x, double p, bool training, std::uint64_t seed);

// Plain (tape-free) helpers shared with the forward-only paths.
Matrix softmax_rows(const Matrix& x);
double leaky_relu(double x, double slope);

}  // namespace mfgat::nn
