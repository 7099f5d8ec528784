#include "mfgat/layers.hpp"

#include "mfgat/errors.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <limits>
#include <optional>

namespace mfgat {

using nn::Matrix;

Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
  return m;
}

// ---------------------------------------------------------------------------
// LSTM

LstmParams LstmParams::init(int input, int hidden, Rng& rng, const std::string& prefix) {
  if (input < 1 || hidden < 1) throw ShapeError("LstmParams: input and hidden must be positive");
  LstmParams p;
  p.input = input;
  p.hidden = hidden;
  const Eigen::Index fan_in = hidden + input;
  p.w_output = Tensor(prefix + ".w_output", glorot_uniform(fan_in, hidden, rng));
  p.w_input = Tensor(prefix + ".w_input", glorot_uniform(fan_in, hidden, rng));
  p.w_forget = Tensor(prefix + ".w_forget", glorot_uniform(fan_in, hidden, rng));
  p.w_cell = Tensor(prefix + ".w_cell", glorot_uniform(fan_in, hidden, rng));
  p.b_output = Tensor(prefix + ".b_output", Matrix::Zero(1, hidden));
  p.b_input = Tensor(prefix + ".b_input", Matrix::Zero(1, hidden));
  p.b_forget = Tensor(prefix + ".b_forget", Matrix::Zero(1, hidden));
  p.b_cell = Tensor(prefix + ".b_cell", Matrix::Zero(1, hidden));
  return p;
}

nn::ParameterList LstmParams::tensors() {
  return {&w_output, &w_input, &w_forget, &w_cell, &b_output, &b_input, &b_forget, &b_cell};
}

LstmState lstm_zero_state(Tape& tape, Eigen::Index rows, int hidden) {
  return {tape.constant(Matrix::Zero(rows, hidden)), tape.constant(Matrix::Zero(rows, hidden))};
}

LstmState lstm_step(Var x_t, const LstmState& state, LstmParams& p) {
  if (x_t.cols() != p.input) {
    throw ShapeError("lstm_step: input width " + std::to_string(x_t.cols()) + ", expected " + std::to_string(p.input));
  }
  if (state.h.cols() != p.hidden || state.c.cols() != p.hidden || state.h.rows() != x_t.rows() ||
      state.c.rows() != x_t.rows()) {
    throw ShapeError("lstm_step: state shape does not match input/hidden size");
  }
  Tape& tape = x_t.tape();
  const Var joined = nn::concat_cols(state.h, x_t);
  const auto gate = [&](Tensor& w, Tensor& b) { return nn::affine(joined, tape.parameter(w), tape.parameter(b)); };

  const Var out_gate = nn::sigmoid(gate(p.w_output, p.b_output));
  const Var in_gate = nn::sigmoid(gate(p.w_input, p.b_input));
  const Var forget_gate = nn::sigmoid(gate(p.w_forget, p.b_forget));
  const Var candidate = nn::tanh(gate(p.w_cell, p.b_cell));

  const Var cell = nn::add(nn::mul(forget_gate, state.c), nn::mul(in_gate, candidate));
  const Var hidden = nn::mul(out_gate, nn::tanh(cell));
  return {hidden, cell};
}

namespace {


Eigen::Index checked_steps(Eigen::Index width, int input, const char* who) {
  if (width == 0 || width % input != 0) {
    throw ShapeError(std::string(who) + ": sequence width must be a positive multiple of the input size");
  }
  return width / input;
}

}  // namespace

Var lstm_unroll(Var sequence, LstmParams& p) {
  const Eigen::Index steps = checked_steps(sequence.cols(), p.input, "lstm_unroll");
  const Eigen::Index rows = sequence.rows();
  const Eigen::Index H = p.hidden;
  const Eigen::Index I = p.input;
  Tape& tape = sequence.tape();

  // Gate blocks in order output, input, forget, cell.
  Tensor* weights[4] = {&p.w_output, &p.w_input, &p.w_forget, &p.w_cell};
  Tensor* biases[4] = {&p.b_output, &p.b_input, &p.b_forget, &p.b_cell};
  Matrix w_all(H + I, 4 * H);
  Matrix b_all(1, 4 * H);
  for (int k = 0; k < 4; ++k) {
    if (weights[k]->data.rows() != H + I || weights[k]->data.cols() != H || biases[k]->data.rows() != 1 ||
        biases[k]->data.cols() != H) {
      throw ShapeError("lstm_unroll: parameter '" + weights[k]->name + "' has the wrong shape");
    }
    w_all.middleCols(k * H, H) = weights[k]->data;
    b_all.middleCols(k * H, H) = biases[k]->data;
  }
  Var w_vars[4], b_vars[4];
  for (int k = 0; k < 4; ++k) {
    w_vars[k] = tape.parameter(*weights[k]);
    b_vars[k] = tape.parameter(*biases[k]);
  }

  const Matrix& x = sequence.value();
  Matrix hidden(rows, steps * H);
  auto cells = std::make_shared<Matrix>(rows, steps * H);
  auto cell_tanh = std::make_shared<Matrix>(rows, steps * H);
  auto gates = std::make_shared<Matrix>(rows, steps * 4 * H);
  Matrix z(rows, H + I);
  Matrix h_prev = Matrix::Zero(rows, H);
  Matrix c_prev = Matrix::Zero(rows, H);
  Matrix a(rows, 4 * H);
  for (Eigen::Index t = 0; t < steps; ++t) {
    z.leftCols(H) = h_prev;
    z.rightCols(I) = x.middleCols(t * I, I);
    a.noalias() = z * w_all;
    a.rowwise() += b_all.row(0);
    // Vectorised gates: sigmoid on o, i, f; tanh(v) = 2 sigmoid(2v) - 1 on the candidate.
    a.rightCols(H) *= 2.0;
    a = (1.0 + (-a.array()).exp()).inverse().matrix();
    a.rightCols(H) = (2.0 * a.rightCols(H).array() - 1.0).matrix();
    c_prev = (a.middleCols(2 * H, H).cwiseProduct(c_prev) + a.middleCols(H, H).cwiseProduct(a.rightCols(H)));
    const auto tc = cell_tanh->middleCols(t * H, H);
    cell_tanh->middleCols(t * H, H) = (2.0 / (1.0 + (-2.0 * c_prev.array()).exp()) - 1.0).matrix();
    h_prev = a.leftCols(H).cwiseProduct(tc);
    gates->middleCols(t * 4 * H, 4 * H) = a;
    cells->middleCols(t * H, H) = c_prev;
    hidden.middleCols(t * H, H) = h_prev;
  }

  bool any = tape.needs_grad(sequence);
  for (int k = 0; k < 4; ++k) any = any || tape.needs_grad(w_vars[k]) || tape.needs_grad(b_vars[k]);

  auto w_shared = std::make_shared<Matrix>(std::move(w_all));
  const std::array<Var, 4> wv{w_vars[0], w_vars[1], w_vars[2], w_vars[3]};
  const std::array<Var, 4> bv{b_vars[0], b_vars[1], b_vars[2], b_vars[3]};
  return tape.record(std::move(hidden), any,
                     [sequence, wv, bv, cells, cell_tanh, gates, w_shared, steps, H, I](Tape& tp, const Matrix& hs,
                                                                              const Matrix& g_out) {
    const Eigen::Index rows = hs.rows();
    const Matrix& x = sequence.value();
    const bool want_x = tp.needs_grad(sequence);
    Matrix dx = want_x ? Matrix::Zero(rows, steps * I) : Matrix();
    Matrix dw = Matrix::Zero(H + I, 4 * H);
    Matrix db = Matrix::Zero(1, 4 * H);
    Matrix dh_next = Matrix::Zero(rows, H);
    Matrix dc_next = Matrix::Zero(rows, H);
    Matrix da(rows, 4 * H);
    Matrix z(rows, H + I);
    Matrix dz(rows, H + I);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index j = 0; j < H; ++j) {
          const Eigen::Index gc = t * 4 * H;
          const double o = (*gates)(r, gc + j);
          const double in = (*gates)(r, gc + H + j);
          const double f = (*gates)(r, gc + 2 * H + j);
          const double g = (*gates)(r, gc + 3 * H + j);
          const double c_before = t > 0 ? (*cells)(r, (t - 1) * H + j) : 0.0;
          const double tc = (*cell_tanh)(r, t * H + j);
          const double dh = g_out(r, t * H + j) + dh_next(r, j);
          const double dc = dc_next(r, j) + dh * o * (1.0 - tc * tc);
          da(r, j) = dh * tc * o * (1.0 - o);
          da(r, H + j) = dc * g * in * (1.0 - in);
          da(r, 2 * H + j) = dc * c_before * f * (1.0 - f);
          da(r, 3 * H + j) = dc * in * (1.0 - g * g);
          dc_next(r, j) = dc * f;
        }
      }
      if (t > 0) {
        z.leftCols(H) = hs.middleCols((t - 1) * H, H);
      } else {
        z.leftCols(H).setZero();
      }
      z.rightCols(I) = x.middleCols(t * I, I);
      dw.noalias() += z.transpose() * da;
      db += da.colwise().sum();
      dz.noalias() = da * w_shared->transpose();
      dh_next = dz.leftCols(H);
      if (want_x) dx.middleCols(t * I, I) = dz.rightCols(I);
    }
    for (int k = 0; k < 4; ++k) {
      if (tp.needs_grad(wv[k])) tp.accumulate(wv[k], dw.middleCols(k * H, H));
      if (tp.needs_grad(bv[k])) tp.accumulate(bv[k], db.middleCols(k * H, H));
    }
    if (want_x) tp.accumulate(sequence, dx);
  });
}

Var lstm_sequence(Var sequence, LstmParams& p) {
  const Eigen::Index steps = checked_steps(sequence.cols(), p.input, "lstm_sequence");
  return nn::slice_cols(lstm_unroll(sequence, p), (steps - 1) * p.hidden, p.hidden);
}

Var lstm_stack(Var sequence, std::span<LstmParams> layers) {
  if (layers.empty()) throw ShapeError("lstm_stack: no layers");
  checked_steps(sequence.cols(), layers.front().input, "lstm_stack");
  for (std::size_t k = 1; k < layers.size(); ++k) {
    if (layers[k].input != layers[k - 1].hidden) throw ShapeError("lstm_stack: layer widths do not chain");
  }
  Var x = sequence;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) x = lstm_unroll(x, layers[k]);
  return lstm_sequence(x, layers.back());
}

// ---------------------------------------------------------------------------
// Graph attention

GatParams GatParams::init(int in, int out, int heads, Rng& rng, const std::string& prefix) {
  if (in < 1 || out < 1 || heads < 1) throw ShapeError("GatParams: widths and head count must be positive");
  GatParams p;
  p.in = in;
  p.out = out;
  for (int k = 0; k < heads; ++k) {
    const std::string head = prefix + ".head" + std::to_string(k);
    p.heads.push_back(GatHead{Tensor(head + ".weight", glorot_uniform(in, out, rng)),
                              Tensor(head + ".attention", glorot_uniform(2 * out, 1, rng))});
  }
  return p;
}

nn::ParameterList GatParams::tensors() {
  nn::ParameterList list;
  for (GatHead& h : heads) {
    list.push_back(&h.weight);
    list.push_back(&h.attention);
  }
  return list;
}

Var graph_attention(Var z, Var receiver_score, Var neighbour_score, const Adjacency& adjacency, Matrix* alpha_out,
                    const Matrix* alpha_mask) {
  const int n = adjacency.nodes();
  const Eigen::Index rows = z.rows();
  if (n < 1 || rows % n != 0) throw ShapeError("graph_attention: row count is not a multiple of the node count");
  if (receiver_score.rows() != rows || receiver_score.cols() != 1 || neighbour_score.rows() != rows ||
      neighbour_score.cols() != 1) {
    throw ShapeError("graph_attention: scores must be [rows x 1]");
  }
  if (alpha_mask != nullptr && (alpha_mask->rows() != rows || alpha_mask->cols() != n)) {
    throw ShapeError("graph_attention: attention mask shape mismatch");
  }
  for (int i = 0; i < n; ++i) {
    bool any = false;
    for (int j = 0; j < n; ++j) any = any || adjacency(i, j);
    if (!any) throw ShapeError("graph_attention: node " + std::to_string(i) + " has an empty neighbourhood");
  }

  const Eigen::Index graphs = rows / n;
  const Matrix& zv = z.value();
  const Matrix& recv = receiver_score.value();
  const Matrix& nbr = neighbour_score.value();

  Matrix pre = Matrix::Zero(rows, n);
  Matrix alpha = Matrix::Zero(rows, n);
  for (Eigen::Index g = 0; g < graphs; ++g) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index r = g * n + i;
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (!adjacency(i, j)) continue;
        pre(r, j) = recv(r, 0) + nbr(g * n + j, 0);
        m = std::max(m, nn::leaky_relu(pre(r, j), kLeakySlope));
      }
      double total = 0.0;
      for (int j = 0; j < n; ++j) {
        if (!adjacency(i, j)) continue;
        alpha(r, j) = std::exp(nn::leaky_relu(pre(r, j), kLeakySlope) - m);
        total += alpha(r, j);
      }
      alpha.row(r) /= total;
    }
  }
  if (alpha_out != nullptr) *alpha_out = alpha;

  Matrix weights = alpha_mask != nullptr ? Matrix(alpha.cwiseProduct(*alpha_mask)) : alpha;
  Matrix out(rows, zv.cols());
  for (Eigen::Index g = 0; g < graphs; ++g) {
    out.middleRows(g * n, n).noalias() = weights.middleRows(g * n, n) * zv.middleRows(g * n, n);
  }

  Tape& tape = z.tape();
  const bool any = tape.needs_grad(z) || tape.needs_grad(receiver_score) || tape.needs_grad(neighbour_score);
  std::optional<Matrix> mask;
  if (alpha_mask != nullptr) mask = *alpha_mask;
  return tape.record(
      std::move(out), any,
      [z, receiver_score, neighbour_score, adjacency, pre = std::move(pre), alpha = std::move(alpha),
       weights = std::move(weights), mask = std::move(mask), graphs, n](Tape& t, const Matrix&, const Matrix& g_out) {
        const Matrix& zv = z.value();
        Matrix dz = Matrix::Zero(zv.rows(), zv.cols());
        Matrix d_weights(zv.rows(), n);
        for (Eigen::Index g = 0; g < graphs; ++g) {
          const auto rows = Eigen::seqN(g * n, n);
          dz(rows, Eigen::all).noalias() = weights(rows, Eigen::all).transpose() * g_out(rows, Eigen::all);
          d_weights(rows, Eigen::all).noalias() = g_out(rows, Eigen::all) * zv(rows, Eigen::all).transpose();
        }
        Matrix d_alpha = mask ? Matrix(d_weights.cwiseProduct(*mask)) : d_weights;

        Matrix d_recv = Matrix::Zero(zv.rows(), 1);
        Matrix d_nbr = Matrix::Zero(zv.rows(), 1);
        for (Eigen::Index g = 0; g < graphs; ++g) {
          for (int i = 0; i < n; ++i) {
            const Eigen::Index r = g * n + i;
            const double dot = alpha.row(r).dot(d_alpha.row(r));
            for (int j = 0; j < n; ++j) {
              if (!adjacency(i, j)) continue;
              const double de = alpha(r, j) * (d_alpha(r, j) - dot);
              const double dpre = pre(r, j) > 0.0 ? de : kLeakySlope * de;
              d_recv(r, 0) += dpre;
              d_nbr(g * n + j, 0) += dpre;
            }
          }
        }
        t.accumulate(z, dz);
        t.accumulate(receiver_score, d_recv);
        t.accumulate(neighbour_score, d_nbr);
      });
}

GatOutput gat_layer(Var features, const Adjacency& adjacency, GatHead& head, Activation activation,
                    const DropoutContext& dropout) {
  if (features.cols() != head.weight.rows()) {
    throw ShapeError("gat_layer: feature width " + std::to_string(features.cols()) + ", weight expects " +
                     std::to_string(head.weight.rows()));
  }
  const Eigen::Index out = head.weight.cols();
  if (head.attention.rows() != 2 * out || head.attention.cols() != 1) {
    throw ShapeError("gat_layer: attention vector must be [2*out x 1]");
  }
  Tape& tape = features.tape();
  const Var z = nn::matmul(features, tape.parameter(head.weight));
  const Var a = tape.parameter(head.attention);
  const Var recv = nn::matmul(z, nn::slice_rows(a, 0, out));
  const Var nbr = nn::matmul(z, nn::slice_rows(a, out, out));

  Matrix mask;
  if (dropout.active()) {
    const double keep = 1.0 / (1.0 - dropout.p);
    mask.resize(z.rows(), adjacency.nodes());
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform01(*dropout.rng) < dropout.p ? 0.0 : keep;
  }
  GatOutput result;
  result.attention.emplace_back();
  Var aggregated = graph_attention(z, recv, nbr, adjacency, &result.attention.back(), dropout.active() ? &mask : nullptr);
  result.output = activation == Activation::LeakyRelu ? nn::leaky_relu(aggregated, kLeakySlope) : aggregated;
  return result;
}

GatOutput mhgat_layer(Var features, const Adjacency& adjacency, GatParams& params, Activation activation,
                      const DropoutContext& dropout) {
  if (params.heads.empty()) throw ShapeError("mhgat_layer: no heads");
  GatOutput result;
  std::vector<Var> outputs;
  for (GatHead& head : params.heads) {
    if (head.weight.cols() != params.out) throw ShapeError("mhgat_layer: heads disagree on output width");
    GatOutput one = gat_layer(features, adjacency, head, activation, dropout);
    outputs.push_back(one.output);
    result.attention.push_back(std::move(one.attention.front()));
  }
  result.output = outputs.size() == 1 ? outputs.front() : nn::concat_cols(outputs);
  return result;
}

// ---------------------------------------------------------------------------
// Fusion

FuseParams FuseParams::init(int width, Rng& rng, const std::string& prefix) {
  if (width < 1) throw ShapeError("FuseParams: width must be positive");
  FuseParams p;
  p.w_source = Tensor(prefix + ".w_source", glorot_uniform(width, 1, rng));
  p.b_source = Tensor(prefix + ".b_source", Matrix::Zero(1, 1));
  p.w_transform = Tensor(prefix + ".w_transform", glorot_uniform(width, 1, rng));
  p.b_transform = Tensor(prefix + ".b_transform", Matrix::Zero(1, 1));
  return p;
}

nn::ParameterList FuseParams::tensors() { return {&w_source, &b_source, &w_transform, &b_transform}; }

FuseOutput attention_fuse(Var source, Var transform, FuseParams& p) {
  if (source.rows() != transform.rows() || source.cols() != transform.cols()) {
    throw ShapeError("attention_fuse: branch shapes differ");
  }
  if (p.w_source.rows() != source.cols() || p.w_transform.rows() != source.cols()) {
    throw ShapeError("attention_fuse: score weights do not match branch width");
  }
  Tape& tape = source.tape();
  const Var s_source =
      nn::tanh(nn::affine(source, tape.parameter(p.w_source), tape.parameter(p.b_source)));
  const Var s_transform =
      nn::tanh(nn::affine(transform, tape.parameter(p.w_transform), tape.parameter(p.b_transform)));
  const Var weights = nn::softmax(nn::concat_cols(s_source, s_transform), 1);
  const Var fused = nn::add(nn::row_scale(source, nn::slice_cols(weights, 0, 1)),
                            nn::row_scale(transform, nn::slice_cols(weights, 1, 1)));
  return {fused, weights.value()};
}

}  // namespace mfgat
