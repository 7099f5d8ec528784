#include "mfgat/nn/adam.hpp"

#include "mfgat/errors.hpp"

#include <cmath>

namespace mfgat::nn {

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw ShapeError("adam_step: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i];
    if (p.grad.rows() != p.rows() || p.grad.cols() != p.cols() || state.first_moment[i].rows() != p.rows() ||
        state.first_moment[i].cols() != p.cols()) {
      throw ShapeError("adam_step: shape mismatch for '" + p.name + "'");
    }
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    if (state.lr == 0.0) continue;
    p.data.array() -= state.lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + state.epsilon);
  }
}

}  // namespace mfgat::nn
