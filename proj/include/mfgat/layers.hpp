#pragma once

#include "mfgat/graph.hpp"
#include "mfgat/nn/ops.hpp"
#include "mfgat/rng.hpp"

#include <span>
#include <string>
#include <vector>

namespace mfgat {

using nn::Matrix;
using nn::Tape;
using nn::Tensor;
using nn::Var;

// Glorot-uniform matrix in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

// Training-time randomness threaded through a forward pass.
struct DropoutContext {
  bool training = false;
  double p = 0.0;
  Rng* rng = nullptr;

  bool active() const { return training && p > 0.0; }
};

// ---------------------------------------------------------------------------
// LSTM

/// Gate weights act on the concatenation [h_{t-1}; x_t], hidden state first.
struct LstmParams {
  int input = 0;
  int hidden = 0;
  Tensor w_output, w_input, w_forget, w_cell;  // [(hidden + input) x hidden]
  Tensor b_output, b_input, b_forget, b_cell;  // [1 x hidden]

  static LstmParams init(int input, int hidden, Rng& rng, const std::string& prefix);
  nn::ParameterList tensors();
};

struct LstmState {
  Var h;  // [rows x hidden]
  Var c;  // [rows x hidden]
};

LstmState lstm_zero_state(Tape& tape, Eigen::Index rows, int hidden);

// One step of the gated recurrence for every row of x_t ([rows x input]).
LstmState lstm_step(Var x_t, const LstmState& state, LstmParams& p);

/// Whole-sequence recurrence from a zero state as a single tape node with
/// backpropagation through time. Returns every hidden state, [rows x T*hidden].
/// Agrees with chaining lstm_step to rounding.
Var lstm_unroll(Var sequence, LstmParams& p);

/// Unrolls from a zero state over T steps and returns the final hidden state.
/// `sequence` is [rows x T*input] with time-major column blocks of width `input`.
Var lstm_sequence(Var sequence, LstmParams& p);

// Stacked variant: layer k consumes the hidden sequence of layer k-1. The
// first layer's input size sets the column block width of `sequence`.
Var lstm_stack(Var sequence, std::span<LstmParams> layers);

// ---------------------------------------------------------------------------
// Graph attention

enum class Activation { Identity, LeakyRelu };

inline constexpr double kLeakySlope = 0.2;

struct GatHead {
  Tensor weight;     // [in x out]
  Tensor attention;  // [2*out x 1]; first half scores the receiving node, second the neighbour
};

struct GatParams {
  int in = 0;
  int out = 0;  // per head
  std::vector<GatHead> heads;

  static GatParams init(int in, int out, int heads, Rng& rng, const std::string& prefix);
  int head_count() const { return static_cast<int>(heads.size()); }
  int output_width() const { return out * head_count(); }
  nn::ParameterList tensors();
};

struct GatOutput {
  Var output;
  // One [graphs*N x N] matrix per head; row g*N+i holds alpha_ij of graph g
  // (before attention dropout).
  std::vector<Matrix> attention;
};

/// Single-head graph attention over a batch of graphs that share `adjacency`.
/// `features` stacks the graphs: rows g*N .. g*N+N-1 belong to graph g.
GatOutput gat_layer(Var features, const Adjacency& adjacency, GatHead& head, Activation activation,
                    const DropoutContext& dropout = {});

/// K independent heads, outputs concatenated per node in head order.
GatOutput mhgat_layer(Var features, const Adjacency& adjacency, GatParams& params, Activation activation,
                      const DropoutContext& dropout = {});

// Attention-weighted aggregation primitive behind gat_layer: given transformed
// features z, per-node receiver scores and neighbour scores, computes
// out_i = sum_j alpha_ij z_j with alpha = softmax_j LeakyReLU(recv_i + nbr_j)
// over the neighbourhood. `alpha_mask` (optional, [graphs*N x N]) scales alpha
// after normalisation and implements attention dropout.
Var graph_attention(Var z, Var receiver_score, Var neighbour_score, const Adjacency& adjacency,
                    Matrix* alpha_out = nullptr, const Matrix* alpha_mask = nullptr);

// ---------------------------------------------------------------------------
// Two-branch attention fusion

struct FuseParams {
  Tensor w_source;     // [d x 1]
  Tensor b_source;     // [1 x 1]
  Tensor w_transform;  // [d x 1]
  Tensor b_transform;  // [1 x 1]

  static FuseParams init(int width, Rng& rng, const std::string& prefix);
  nn::ParameterList tensors();
};

struct FuseOutput {
  Var fused;
  Matrix weights;  // [rows x 2]: (source weight, transform weight) per node
};

/// Per node: scores s = tanh(w.h + b) for each branch, normalised with a
/// softmax across the two branches, then a convex combination of the inputs.
FuseOutput attention_fuse(Var source, Var transform, FuseParams& p);

}  // namespace mfgat
