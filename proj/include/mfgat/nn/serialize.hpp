#pragma once

#include "mfgat/nn/tensor.hpp"

#include <istream>
#include <ostream>
#include <span>

namespace mfgat::nn {

// Tensor record: u32 name length, name bytes, u32 rank (always 2),
// u64 rows, u64 cols, then rows*cols little-endian f64 values in row-major order.
void write_tensor_records(std::ostream& out, std::span<const Tensor* const> tensors);

// Reads `count` records and assigns them by name into `tensors`. Every tensor
// must be present exactly once with an identical shape.
void read_tensor_records(std::istream& in, std::span<Tensor* const> tensors, std::uint32_t count);

}  // namespace mfgat::nn
