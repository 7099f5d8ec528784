#pragma once

#include "mfgat/nn/tensor.hpp"

#include <deque>
#include <functional>

namespace mfgat::nn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode gradient tape. Every op appends a node holding its forward
/// value and a closure that pushes the node's output gradient to its parents.
/// A tape is single-owner and single-use: build, call backward() once, discard.
class Tape {
 public:
  // Receives the node's forward value and output gradient; accumulates into parents.
  using Backward = std::function<void(Tape& tape, const Matrix& out_value, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf bound to a Tensor; backward() adds the leaf gradient into tensor.grad.
  Var parameter(Tensor& tensor);

  // Appends an op node. `needs_grad` should be true iff any parent needs it.
  Var record(Matrix value, bool needs_grad, Backward backward);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].value; }
  // Gradient accumulated so far; an empty matrix when nothing reached the node.
  const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].grad; }
  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].needs_grad; }

  void accumulate(Var v, const Matrix& g);

  // Seeds d(loss)/d(loss) = 1 for a 1x1 loss and sweeps the tape backwards.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Tensor* parameter = nullptr;
    bool needs_grad = false;
  };
  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

}  // namespace mfgat::nn
