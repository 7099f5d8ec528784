#include "mfgat/dataset.hpp"

#include "mfgat/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mfgat {

DatasetSplit split_and_normalize(std::vector<GraphSample> samples, SplitRatios ratios, std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("split_and_normalize: no samples");
  if (ratios.train < 1 || ratios.val < 0 || ratios.test < 0) {
    throw std::invalid_argument("split_and_normalize: invalid ratios");
  }
  const Eigen::Index rows = samples.front().node_features.rows();
  const Eigen::Index cols = samples.front().node_features.cols();
  for (const GraphSample& s : samples) {
    if (s.node_features.rows() != rows || s.node_features.cols() != cols) {
      throw std::invalid_argument("split_and_normalize: samples have inconsistent shapes");
    }
  }

  Rng rng(seed);
  // Fisher-Yates with our own draws keeps the permutation platform independent.
  for (std::size_t i = samples.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(samples[i - 1], samples[std::min(j, i - 1)]);
  }

  const std::size_t n = samples.size();
  const double total = ratios.train + ratios.val + ratios.test;
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.train / total));
  const auto n_val = std::min(n - n_train,
                              static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.val / total)));

  DatasetSplit split;
  auto it = std::make_move_iterator(samples.begin());
  split.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(it + static_cast<std::ptrdiff_t>(n_train), it + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_val), std::make_move_iterator(samples.end()));

  Matrix mean = Matrix::Zero(rows, cols);
  for (const GraphSample& s : split.train) mean += s.node_features;
  mean /= static_cast<double>(split.train.size());
  Matrix var = Matrix::Zero(rows, cols);
  for (const GraphSample& s : split.train) var += (s.node_features - mean).cwiseAbs2();
  var /= static_cast<double>(split.train.size());
  split.norm_mean = mean;
  split.norm_std = var.cwiseSqrt().cwiseMax(kStdFloor);

  for (auto* part : {&split.train, &split.val, &split.test}) {
    for (GraphSample& s : *part) {
      s.node_features = (s.node_features - split.norm_mean).cwiseQuotient(split.norm_std);
    }
  }
  return split;
}

}  // namespace mfgat
