#include "mfgat/nn/ops.hpp"

#include "mfgat/errors.hpp"

#include <cmath>
#include <string>

namespace mfgat::nn {

namespace {

std::string shape_of(const Matrix& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  }
}

bool needs(Var a) { return a.tape().needs_grad(a); }
bool needs(Var a, Var b) { return a.tape().needs_grad(a) || a.tape().needs_grad(b); }

}  // namespace

double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions disagree " + shape_of(av) + " * " + shape_of(bv));
  }
  return a.tape().record(av * bv, needs(a, b), [a, b](Tape& tape, const Matrix&, const Matrix& g) {
    if (tape.needs_grad(a)) tape.accumulate(a, g * b.value().transpose());
    if (tape.needs_grad(b)) tape.accumulate(b, a.value().transpose() * g);
  });
}

Var affine(Var x, Var weight, Var bias) {
  const Matrix& xv = x.value();
  const Matrix& wv = weight.value();
  const Matrix& bv = bias.value();
  if (xv.cols() != wv.rows()) {
    throw ShapeError("affine: input " + shape_of(xv) + " does not match weight " + shape_of(wv));
  }
  if (bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw ShapeError("affine: bias " + shape_of(bv) + " must be [1x" + std::to_string(wv.cols()) + "]");
  }
  Matrix y = xv * wv;
  y.rowwise() += bv.row(0);
  Tape& t = x.tape();
  const bool any = t.needs_grad(x) || t.needs_grad(weight) || t.needs_grad(bias);
  return t.record(std::move(y), any, [x, weight, bias](Tape& tape, const Matrix&, const Matrix& g) {
    if (tape.needs_grad(x)) tape.accumulate(x, g * weight.value().transpose());
    if (tape.needs_grad(weight)) tape.accumulate(weight, x.value().transpose() * g);
    if (tape.needs_grad(bias)) tape.accumulate(bias, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  return a.tape().record(a.value() + b.value(), needs(a, b), [a, b](Tape& tape, const Matrix&, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  return a.tape().record(a.value() - b.value(), needs(a, b), [a, b](Tape& tape, const Matrix&, const Matrix& g) {
    tape.accumulate(a, g);
    if (tape.needs_grad(b)) tape.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Matrix y = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(y), needs(a, b), [a, b](Tape& tape, const Matrix&, const Matrix& g) {
    if (tape.needs_grad(a)) tape.accumulate(a, g.cwiseProduct(b.value()));
    if (tape.needs_grad(b)) tape.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  return a.tape().record(a.value() * s, needs(a),
                         [a, s](Tape& tape, const Matrix&, const Matrix& g) { tape.accumulate(a, g * s); });
}

Var add_row(Var a, Var row) {
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != a.value().cols()) {
    throw ShapeError("add_row: row " + shape_of(rv) + " does not broadcast over " + shape_of(a.value()));
  }
  Matrix y = a.value();
  y.rowwise() += rv.row(0);
  return a.tape().record(std::move(y), needs(a, row), [a, row](Tape& tape, const Matrix&, const Matrix& g) {
    tape.accumulate(a, g);
    if (tape.needs_grad(row)) tape.accumulate(row, g.colwise().sum());
  });
}

Var row_scale(Var a, Var s) {
  const Matrix& av = a.value();
  const Matrix& sv = s.value();
  if (sv.cols() != 1 || sv.rows() != av.rows()) {
    throw ShapeError("row_scale: scale " + shape_of(sv) + " does not match " + shape_of(av));
  }
  Matrix y = av.array().colwise() * sv.col(0).array();
  return a.tape().record(std::move(y), needs(a, s), [a, s](Tape& tape, const Matrix&, const Matrix& g) {
    if (tape.needs_grad(a)) {
      Matrix ga = g.array().colwise() * s.value().col(0).array();
      tape.accumulate(a, ga);
    }
    if (tape.needs_grad(s)) {
      Matrix gs = g.cwiseProduct(a.value()).rowwise().sum();
      tape.accumulate(s, gs);
    }
  });
}

Var sigmoid(Var x) {
  Matrix y = x.value().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return x.tape().record(std::move(y), needs(x), [x](Tape& tape, const Matrix& y, const Matrix& g) {
    Matrix dx = g.array() * y.array() * (1.0 - y.array());
    tape.accumulate(x, dx);
  });
}

Var tanh(Var x) {
  Matrix y = x.value().array().tanh().matrix();
  return x.tape().record(std::move(y), needs(x), [x](Tape& tape, const Matrix& y, const Matrix& g) {
    Matrix dx = g.array() * (1.0 - y.array().square());
    tape.accumulate(x, dx);
  });
}

Var leaky_relu(Var x, double slope) {
  Matrix y = x.value().unaryExpr([slope](double v) { return leaky_relu(v, slope); });
  return x.tape().record(std::move(y), needs(x), [x, slope](Tape& tape, const Matrix&, const Matrix& g) {
    Matrix dx = g.binaryExpr(x.value(), [slope](double gv, double xv) { return xv > 0.0 ? gv : slope * gv; });
    tape.accumulate(x, dx);
  });
}

Var softmax(Var x, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
  Matrix y = axis == 1 ? softmax_rows(x.value()) : Matrix(softmax_rows(x.value().transpose()).transpose());
  return x.tape().record(std::move(y), needs(x), [x, axis](Tape& tape, const Matrix& y, const Matrix& g) {
    // dx = y * (g - <g, y>) along the normalized axis.
    Matrix gy = g.cwiseProduct(y);
    Matrix dx(y.rows(), y.cols());
    if (axis == 1) {
      Eigen::VectorXd dots = gy.rowwise().sum();
      dx = y.array() * (g.array().colwise() - dots.array());
    } else {
      Eigen::RowVectorXd dots = gy.colwise().sum();
      dx = y.array() * (g.array().rowwise() - dots.array());
    }
    tape.accumulate(x, dx);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool any = false;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
    any = any || p.tape().needs_grad(p);
  }
  Matrix y(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    y.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts.front().tape().record(std::move(y), any, [keep](Tape& tape, const Matrix&, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : keep) {
      if (tape.needs_grad(p)) tape.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var concat_cols(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat_cols(std::span<const Var>(parts));
}

Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.cols()) throw ShapeError("slice_cols: range out of bounds");
  Matrix y = x.value().middleCols(begin, count);
  return x.tape().record(std::move(y), needs(x), [x, begin, count](Tape& tape, const Matrix&, const Matrix& g) {
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    dx.middleCols(begin, count) = g;
    tape.accumulate(x, dx);
  });
}

Var slice_rows(Var x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.rows()) throw ShapeError("slice_rows: range out of bounds");
  Matrix y = x.value().middleRows(begin, count);
  return x.tape().record(std::move(y), needs(x), [x, begin, count](Tape& tape, const Matrix&, const Matrix& g) {
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    dx.middleRows(begin, count) = g;
    tape.accumulate(x, dx);
  });
}

Var reshape(Var x, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != x.value().size()) throw ShapeError("reshape: element count changes");
  Matrix y = Eigen::Map<const Matrix>(x.value().data(), rows, cols);
  return x.tape().record(std::move(y), needs(x), [x](Tape& tape, const Matrix&, const Matrix& g) {
    Matrix dx = Eigen::Map<const Matrix>(g.data(), x.rows(), x.cols());
    tape.accumulate(x, dx);
  });
}

Var sum(Var x) {
  Matrix y(1, 1);
  y(0, 0) = x.value().sum();
  return x.tape().record(std::move(y), needs(x), [x](Tape& tape, const Matrix&, const Matrix& g) {
    tape.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  const Matrix& z = logits.value();
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(z.rows()) + " rows");
  }
  if (z.rows() == 0) throw ShapeError("cross_entropy: empty batch");
  std::vector<int> lab(labels.begin(), labels.end());
  for (int l : lab) {
    if (l < 0 || l >= z.cols()) throw std::out_of_range("cross_entropy: label " + std::to_string(l) + " out of range");
  }
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    const double lse = m + std::log((z.row(r).array() - m).exp().sum());
    total += lse - z(r, lab[static_cast<std::size_t>(r)]);
  }
  Matrix y(1, 1);
  y(0, 0) = total / static_cast<double>(z.rows());
  return logits.tape().record(std::move(y), needs(logits), [logits, lab](Tape& tape, const Matrix&, const Matrix& g) {
    Matrix p = softmax_rows(logits.value());
    for (Eigen::Index r = 0; r < p.rows(); ++r) p(r, lab[static_cast<std::size_t>(r)]) -= 1.0;
    p *= g(0, 0) / static_cast<double>(p.rows());
    tape.accumulate(logits, p);
  });
}

Var dropout(Var x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: probability must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform01(rng) < p ? 0.0 : keep_scale;
  Matrix y = x.value().cwiseProduct(mask);
  return x.tape().record(std::move(y), needs(x), [x, mask = std::move(mask)](Tape& tape, const Matrix&, const Matrix& g) {
    tape.accumulate(x, g.cwiseProduct(mask));
  });
}

Var dropout(Var x, double p, bool training, std::uint64_t seed) {
  Rng rng(seed);
  return dropout(x, p, training, rng);
}

}  // namespace mfgat::nn
