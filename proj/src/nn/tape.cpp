#include "mfgat/nn/tape.hpp"

#include "mfgat/errors.hpp"

namespace mfgat::nn {

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(Tensor& tensor) {
  nodes_.push_back(Node{tensor.data, {}, nullptr, &tensor, true});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, bool needs_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), {}, needs_grad ? std::move(backward) : nullptr, nullptr, needs_grad});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& node = nodes_[static_cast<std::size_t>(v.id())];
  if (!node.needs_grad) return;
  if (g.rows() != node.value.rows() || g.cols() != node.value.cols()) {
    throw ShapeError("gradient shape does not match node value");
  }
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var loss) {
  Node& root = nodes_[static_cast<std::size_t>(loss.id())];
  if (root.value.size() != 1) throw ShapeError("backward() requires a scalar (1x1) loss");
  if (!root.needs_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.grad.size() == 0) continue;
    if (node.backward) {
      node.backward(*this, node.value, node.grad);
    } else if (node.parameter != nullptr) {
      node.parameter->grad += node.grad;
    }
  }
}

}  // namespace mfgat::nn
