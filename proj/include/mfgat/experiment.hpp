#pragma once

#include "mfgat/config.hpp"
#include "mfgat/dataset_io.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mfgat {

// Synthesises, splits and normalises the dataset of `master_seed` at `tsnr_db`.
DatasetSplit prepare_split(const ExperimentConfig& config, double tsnr_db, std::uint64_t master_seed);
DatasetHeader make_header(const ExperimentConfig& config);

// Builds `variant` from the master seed's init stream and trains it on `split`.
TrainResult run_variant(const ExperimentConfig& config, ModelVariant variant, const DatasetSplit& split,
                        std::uint64_t master_seed);

struct SweepRow {
  double tsnr_db = 0.0;
  std::uint64_t seed = 0;
  ModelVariant variant = ModelVariant::MfGat;
  std::optional<double> test_accuracy;  // empty when the run failed
  int epochs = 0;
  double wall_s = 0.0;
  std::string error;
};

struct CurvePoint {
  double tsnr_db = 0.0;
  ModelVariant variant = ModelVariant::MfGat;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over successful seeds
  int runs = 0;
  int failures = 0;
};

struct SweepResult {
  std::string config_hash;
  std::vector<SweepRow> rows;
  std::vector<CurvePoint> curve;
};

using ProgressFn = std::function<void(const SweepRow&)>;

/// For each TSNR and seed: generate data, train every requested variant on it,
/// record test accuracy. A failing point is recorded and the sweep continues.
SweepResult snr_sweep(const ExperimentConfig& config, std::span<const double> tsnr_list_db,
                      std::span<const ModelVariant> variants, const ProgressFn& progress = {});

std::vector<CurvePoint> aggregate_curve(std::span<const SweepRow> rows);

// `# config_hash=<hash>` then `tsnr_db,seed,variant,test_accuracy,epochs,wall_s`.
// Failed runs carry FAILED in the accuracy column.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_curve_csv(std::ostream& out, const SweepResult& result);

struct AblationResult {
  double tsnr_db = 0.0;
  std::string config_hash;
  std::vector<SweepRow> rows;  // seeds x {sdfe, stdfe, mfgat}
  double mean_sdfe = 0.0;
  double mean_stdfe = 0.0;
  double mean_mfgat = 0.0;

  double delta_mfgat_minus_stdfe() const { return mean_mfgat - mean_stdfe; }
  double delta_stdfe_minus_sdfe() const { return mean_stdfe - mean_sdfe; }
};

/// Trains the three variants on identical data for every configured seed.
AblationResult ablation_run(const ExperimentConfig& config, double tsnr_db, const ProgressFn& progress = {});

void write_ablation_csv(std::ostream& out, const AblationResult& result);
void write_ablation_summary(std::ostream& out, const AblationResult& result);

}  // namespace mfgat

#include "mfgat/nn/grad_check.hpp"

namespace mfgat {

// Narrow widths with the full 9-node, 200-step input so that a coordinate-wise
// finite-difference audit of every parameter finishes in seconds.
ModelDims gradcheck_dims();

/// Cross-entropy of `variant` on one random 9-node sample (dropout off),
/// checked coordinate by coordinate against central differences.
nn::GradCheckResult gradient_audit(ModelVariant variant, const ModelDims& dims, std::uint64_t seed,
                                   const nn::GradCheckOptions& options = {});

}  // namespace mfgat
