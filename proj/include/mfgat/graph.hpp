#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace mfgat {

/// Boolean adjacency over the radars of one network. Row i lists the
/// neighbourhood attended to by node i.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(int nodes) : n_(nodes), mask_(static_cast<std::size_t>(nodes) * nodes, 0) {}

  static Adjacency fully_connected(int nodes) {
    Adjacency a(nodes);
    std::fill(a.mask_.begin(), a.mask_.end(), std::uint8_t{1});
    return a;
  }

  int nodes() const { return n_; }
  bool operator()(int i, int j) const { return mask_[index(i, j)] != 0; }
  void set(int i, int j, bool on) { mask_[index(i, j)] = on ? 1 : 0; }

  bool has_self_loops() const {
    for (int i = 0; i < n_; ++i)
      if (!(*this)(i, i)) return false;
    return true;
  }
  bool symmetric() const {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < i; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }

  const std::vector<std::uint8_t>& mask() const { return mask_; }
  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + j; }
  int n_ = 0;
  std::vector<std::uint8_t> mask_;
};

}  // namespace mfgat
