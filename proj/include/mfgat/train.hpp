#pragma once

#include "mfgat/dataset.hpp"
#include "mfgat/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfgat {

struct Hyperparameters {
  int epochs = 100;
  double lr = 5e-4;
  int batch = 32;
  double dropout = 0.6;
  double clip_norm = 0.0;  // cap on the global gradient norm per step; 0 disables
  std::uint64_t seed = 0;  // shuffling and dropout streams

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

void validate(const Hyperparameters& hyper);

// One-vs-rest counts for a single class.
struct ClassConfusion {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  friend bool operator==(const ClassConfusion&, const ClassConfusion&) = default;
};

// (TP + TN) / (TP + TN + FP + FN)
double accuracy_from_counts(const ClassConfusion& c);

struct Evaluation {
  double accuracy = 0.0;  // correct / total
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  double loss = 0.0;  // mean cross-entropy; 0 when built from bare predictions
  std::vector<ClassConfusion> per_class;
  std::vector<int> predictions;
};

// Index of the largest entry; ties resolve to the lower index.
int argmax_lower(std::span<const double> row);

Evaluation evaluate_predictions(std::span<const int> predictions, std::span<const int> labels, int classes);

/// Inference-mode accuracy and one-vs-rest confusion of `model` on `samples`.
Evaluation evaluate(MfGatModel& model, std::span<const GraphSample> samples, int batch = 64);

// Stacks graphs row-wise into [graphs*nodes x window].
Matrix stack_features(std::span<const GraphSample> samples);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;      // mean mini-batch loss with dropout active
  double train_accuracy = 0.0;  // running, over the epoch's training-mode batches
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct RunReport {
  ModelVariant variant = ModelVariant::MfGat;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // epoch whose parameters were kept (0: initial)
  Evaluation test;
  double wall_s = 0.0;
  bool aborted = false;
  std::string diagnostic;

  double test_accuracy() const { return test.accuracy; }
};

struct TrainResult {
  MfGatModel model;
  RunReport report;
};

/// Mini-batch cross-entropy training with Adam. Keeps the parameters of the
/// best validation accuracy (earliest epoch on ties) and evaluates them on the
/// test split. A non-finite loss stops training, restores the last finite
/// parameters and marks the report as aborted.
TrainResult train(MfGatModel model, const DatasetSplit& split, const Hyperparameters& hyper,
                  const std::string& config_hash = {});

}  // namespace mfgat
