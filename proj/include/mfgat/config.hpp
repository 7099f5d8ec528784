#pragma once

#include "mfgat/dataset.hpp"
#include "mfgat/model.hpp"
#include "mfgat/train.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mfgat {

/// Everything needed to reproduce one run or sweep.
struct ExperimentConfig {
  std::vector<RadarConfig> radars;
  std::vector<TargetProfile> targets;
  DatasetRecipe dataset;
  double tsnr_db = 5.0;
  std::vector<double> tsnr_grid_db{-5.0, 0.0, 5.0, 10.0, 15.0};
  ModelVariant variant = ModelVariant::MfGat;
  ModelDims dims;
  Hyperparameters hyper;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
  // Holds the run to the published radar network and training table.
  bool paper_replication = false;

  /// Published network, dataset size, model widths and training schedule.
  static ExperimentConfig paper_defaults();
  /// Same network and signal model with narrow widths, 1200 samples, 30
  /// epochs and gradient-norm clipping: a few minutes per run on one CPU core.
  static ExperimentConfig desk_defaults();
};

// Throws ConfigError naming the offending field path.
void validate(const ExperimentConfig& config);
void validate_paper_defaults(const ExperimentConfig& config);

// Canonical JSON (sorted keys, two-space indent, trailing newline).
std::string to_canonical_json(const ExperimentConfig& config);
// Strict parse: unknown keys and wrong types are ConfigErrors with a field path.
// Missing keys take desk defaults.
ExperimentConfig parse_config(std::string_view text);

// 16 hex digits of FNV-1a-64 over the canonical JSON, output_dir excluded.
std::string config_hash(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

// Child seeds of one master seed. Variants share data and initial weights of
// common modules but use separate shuffling/dropout streams.
std::uint64_t dataset_seed(std::uint64_t master);
std::uint64_t split_seed(std::uint64_t master);
std::uint64_t init_seed(std::uint64_t master);
std::uint64_t train_seed(std::uint64_t master, ModelVariant variant);

}  // namespace mfgat
