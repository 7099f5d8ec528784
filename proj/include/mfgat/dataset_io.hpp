#pragma once

#include "mfgat/dataset.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mfgat {

struct DatasetHeader {
  std::uint32_t version = 1;
  std::uint32_t radars = 9;
  std::uint32_t window = 200;
  double sample_rate_hz = 20.0;
  std::vector<std::string> labels;  // index -> class name
  std::string config_hash;
};

// Layout (all integers and floats little-endian):
//   char[8]  magic "MFGATDS\0"
//   u32      version
//   u32      radars N, u32 window L, f64 sample rate (Hz)
//   u32      class count C, then C length-prefixed UTF-8 class names
//   u32+str  config hash
//   u64 x3   train, val, test sample counts
//   f32[N*L] normalisation mean, f32[N*L] normalisation std (row-major)
//   u8[N*N]  adjacency mask (row-major)
//   records  per sample: f32[N*L] normalised features, u8 label; train, val, test order
void save_dataset(const std::filesystem::path& path, const DatasetSplit& split, const DatasetHeader& header);

struct LoadedDataset {
  DatasetHeader header;
  DatasetSplit split;
};
LoadedDataset load_dataset(const std::filesystem::path& path);

}  // namespace mfgat
