#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mfgat::nn {

// Row-major so that reshaping [B*N, d] <-> [B, N*d] is a pure reinterpretation.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A named, learnable 2-D array together with its gradient slot.
///
/// `grad` always has the same shape as `data`; it is zero until a backward
/// pass accumulates into it and is cleared with zero_grad().
struct Tensor {
  std::string name;
  Matrix data;
  Matrix grad;

  Tensor() = default;
  Tensor(std::string name, Matrix value)
      : name(std::move(name)), data(std::move(value)), grad(Matrix::Zero(data.rows(), data.cols())) {}

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
  Eigen::Index size() const { return data.size(); }
  void zero_grad() { grad.setZero(data.rows(), data.cols()); }
};

using ParameterList = std::vector<Tensor*>;

}  // namespace mfgat::nn
