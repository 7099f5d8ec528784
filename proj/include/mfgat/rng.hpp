#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mfgat {

using Rng = std::mt19937_64;

// Independent child stream from (master seed, stream name, index). Used so that
// dataset, initialization, shuffling and dropout never share random draws.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Standard normal draw (Box-Muller), platform independent unlike std::normal_distribution.
double standard_normal(Rng& rng);

}  // namespace mfgat
