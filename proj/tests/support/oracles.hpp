#pragma once
// Independent reference implementations used as test oracles. Everything here
// is written with explicit scalar loops and shares no code with the library.

#include "mfgat/nn/tensor.hpp"
#include "mfgat/rng.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using mfgat::nn::Matrix;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, mfgat::Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * mfgat::standard_normal(rng);
  return m;
}

// |F(m)| = |sum_n x(n) exp(-j 2 pi m n / L)|, O(L^2).
inline std::vector<double> naive_dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
      // Reduce the phase index modulo n to keep the angle small and accurate.
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((m * k) % n) / static_cast<double>(n);
      acc += x[k] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[m] = std::abs(acc);
  }
  return out;
}

inline double leaky(double v, double slope) { return v >= 0.0 ? v : slope * v; }

// Single graph, single head: z = h W; e_ij = leaky(a . [z_i ; z_j]) over the
// neighbourhood; alpha = softmax_j(e_ij); out_i = act(sum_j alpha_ij z_j).
struct GatReference {
  Matrix output;
  Matrix alpha;
};

inline GatReference brute_force_gat(const Matrix& h, const Matrix& w, const Matrix& a,
                                    const std::vector<std::vector<bool>>& adjacency, bool leaky_output) {
  const Eigen::Index n = h.rows();
  const Eigen::Index in = h.cols();
  const Eigen::Index out = w.cols();
  Matrix z = Matrix::Zero(n, out);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < out; ++c)
      for (Eigen::Index k = 0; k < in; ++k) z(i, c) += h(i, k) * w(k, c);

  GatReference ref{Matrix::Zero(n, out), Matrix::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    double largest = -INFINITY;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!adjacency[i][j]) continue;
      double s = 0.0;
      for (Eigen::Index c = 0; c < out; ++c) s += a(c, 0) * z(i, c) + a(out + c, 0) * z(j, c);
      e[j] = leaky(s, 0.2);
      largest = std::max(largest, e[j]);
    }
    double denom = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (adjacency[i][j]) denom += std::exp(e[j] - largest);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!adjacency[i][j]) continue;
      ref.alpha(i, j) = std::exp(e[j] - largest) / denom;
      for (Eigen::Index c = 0; c < out; ++c) ref.output(i, c) += ref.alpha(i, j) * z(j, c);
    }
    if (leaky_output)
      for (Eigen::Index c = 0; c < out; ++c) ref.output(i, c) = leaky(ref.output(i, c), 0.2);
  }
  return ref;
}

// Scalar LSTM cell on one row; weights are [(hidden + input) x hidden] acting on [h; x].
struct ScalarLstm {
  Matrix wo, wi, wf, wc, bo, bi, bf, bc;

  void step(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c) const {
    const std::size_t hidden = h.size();
    std::vector<double> joined(h);
    joined.insert(joined.end(), x.begin(), x.end());
    std::vector<double> h_new(hidden), c_new(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      double so = bo(0, j), si = bi(0, j), sf = bf(0, j), sc = bc(0, j);
      for (std::size_t k = 0; k < joined.size(); ++k) {
        so += joined[k] * wo(k, j);
        si += joined[k] * wi(k, j);
        sf += joined[k] * wf(k, j);
        sc += joined[k] * wc(k, j);
      }
      const double o = 1.0 / (1.0 + std::exp(-so));
      const double i = 1.0 / (1.0 + std::exp(-si));
      const double f = 1.0 / (1.0 + std::exp(-sf));
      c_new[j] = f * c[j] + i * std::tanh(sc);
      h_new[j] = o * std::tanh(c_new[j]);
    }
    h = h_new;
    c = c_new;
  }
};

// Central differences of a scalar function of a flat parameter vector.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, double* params, std::size_t count,
                                            double eps = 1e-5) {
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double saved = params[k];
    params[k] = saved + eps;
    const double plus = f();
    params[k] = saved - eps;
    const double minus = f();
    params[k] = saved;
    g[k] = (plus - minus) / (2.0 * eps);
  }
  return g;
}

inline double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

}  // namespace oracle
