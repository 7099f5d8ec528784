#include "mfgat/nn/dft.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace mfgat::nn {

Matrix dft_magnitude(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  if (x.cols() == 0) return out;
  if (x.cols() == 1) return x.cwiseAbs();  // kissfft does not handle a length-1 plan
  Eigen::FFT<double> fft;
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  std::vector<std::complex<double>> spectrum;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
    fft.fwd(spectrum, row);
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(r, c) = std::abs(spectrum[static_cast<std::size_t>(c)]);
  }
  return out;
}

}  // namespace mfgat::nn
