#include "mfgat/train.hpp"

#include "mfgat/errors.hpp"
#include "mfgat/nn/adam.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace mfgat {

namespace {

void clip_global_norm(const nn::ParameterList& params, double max_norm) {
  double sq = 0.0;
  for (const Tensor* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (Tensor* p : params) p->grad *= scale;
}

std::vector<Matrix> snapshot(MfGatModel& model) {
  std::vector<Matrix> values;
  for (const Tensor* t : model.parameters()) values.push_back(t->data);
  return values;
}

void restore(MfGatModel& model, const std::vector<Matrix>& values) {
  const nn::ParameterList params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->data = values[i];
}

const Adjacency& adjacency_of(std::span<const GraphSample> samples) { return samples.front().adjacency; }

}  // namespace

void validate(const Hyperparameters& h) {
  if (h.epochs < 1) throw ConfigError("hyper.epochs", "must be positive");
  if (!(h.lr >= 0.0)) throw ConfigError("hyper.lr", "must be non-negative");
  if (h.batch < 1) throw ConfigError("hyper.batch", "must be positive");
  if (!(h.dropout >= 0.0 && h.dropout < 1.0)) throw ConfigError("hyper.dropout", "must lie in [0, 1)");
  if (!(h.clip_norm >= 0.0)) throw ConfigError("hyper.clip_norm", "must be non-negative");
}

double accuracy_from_counts(const ClassConfusion& c) {
  const std::uint64_t total = c.tp + c.tn + c.fp + c.fn;
  if (total == 0) throw std::invalid_argument("accuracy_from_counts: no samples");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

int argmax_lower(std::span<const double> row) {
  if (row.empty()) throw std::invalid_argument("argmax_lower: empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return static_cast<int>(best);
}

Evaluation evaluate_predictions(std::span<const int> predictions, std::span<const int> labels, int classes) {
  if (labels.empty()) throw std::invalid_argument("evaluate: no samples");
  if (predictions.size() != labels.size()) throw std::invalid_argument("evaluate: prediction/label count mismatch");
  if (classes < 2) throw std::invalid_argument("evaluate: at least two classes required");
  Evaluation e;
  e.total = labels.size();
  e.per_class.assign(static_cast<std::size_t>(classes), ClassConfusion{});
  e.predictions.assign(predictions.begin(), predictions.end());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if (y < 0 || y >= classes || p < 0 || p >= classes) throw std::out_of_range("evaluate: class index out of range");
    if (y == p) ++e.correct;
    for (int c = 0; c < classes; ++c) {
      ClassConfusion& cc = e.per_class[static_cast<std::size_t>(c)];
      const bool actual = y == c;
      const bool predicted = p == c;
      if (actual && predicted) ++cc.tp;
      else if (!actual && !predicted) ++cc.tn;
      else if (predicted) ++cc.fp;
      else ++cc.fn;
    }
  }
  e.accuracy = static_cast<double>(e.correct) / static_cast<double>(e.total);
  return e;
}

Matrix stack_features(std::span<const GraphSample> samples) {
  if (samples.empty()) return {};
  const Eigen::Index n = samples.front().node_features.rows();
  const Eigen::Index len = samples.front().node_features.cols();
  Matrix stacked(n * static_cast<Eigen::Index>(samples.size()), len);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    stacked.middleRows(static_cast<Eigen::Index>(k) * n, n) = samples[k].node_features;
  }
  return stacked;
}

Evaluation evaluate(MfGatModel& model, std::span<const GraphSample> samples, int batch) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  if (batch < 1) throw std::invalid_argument("evaluate: batch must be positive");
  std::vector<int> predictions;
  std::vector<int> labels;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch)) {
    const auto chunk = samples.subspan(start, std::min<std::size_t>(static_cast<std::size_t>(batch), samples.size() - start));
    std::vector<int> chunk_labels;
    for (const GraphSample& s : chunk) chunk_labels.push_back(s.label);
    Tape tape;
    const Var logits = forward_logits(tape, stack_features(chunk), model, adjacency_of(chunk));
    loss_sum += nn::cross_entropy(logits, chunk_labels).value()(0, 0) * static_cast<double>(chunk.size());
    const Matrix& z = logits.value();
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      predictions.push_back(argmax_lower(std::span<const double>(z.row(r).data(), static_cast<std::size_t>(z.cols()))));
    }
    labels.insert(labels.end(), chunk_labels.begin(), chunk_labels.end());
  }
  Evaluation e = evaluate_predictions(predictions, labels, model.dims.classes);
  e.loss = loss_sum / static_cast<double>(samples.size());
  return e;
}

TrainResult train(MfGatModel model, const DatasetSplit& split, const Hyperparameters& hyper,
                  const std::string& config_hash) {
  validate(hyper);
  if (split.train.empty()) throw std::invalid_argument("train: empty training split");
  const auto started = std::chrono::steady_clock::now();

  RunReport report;
  report.variant = model.variant;
  report.seed = hyper.seed;
  report.config_hash = config_hash;

  Rng shuffle_rng = make_rng(hyper.seed, "shuffle");
  Rng dropout_rng = make_rng(hyper.seed, "dropout");
  nn::AdamState adam;
  adam.lr = hyper.lr;

  const std::span<const GraphSample> train_set(split.train);
  const std::span<const GraphSample> val_set = split.val.empty() ? train_set : std::span<const GraphSample>(split.val);

  std::vector<Matrix> best = snapshot(model);
  double best_accuracy = evaluate(model, val_set).accuracy;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<GraphSample> batch_samples;

  for (int epoch = 1; epoch <= hyper.epochs && !report.aborted; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(shuffle_rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
      batch_samples.clear();
      std::vector<int> labels;
      for (std::size_t k = start; k < end; ++k) {
        batch_samples.push_back(train_set[order[k]]);
        labels.push_back(train_set[order[k]].label);
      }
      nn::ParameterList params = model.parameters();
      for (Tensor* p : params) p->zero_grad();
      Tape tape;
      const DropoutContext dropout{true, hyper.dropout, &dropout_rng};
      const Var logits = forward_logits(tape, stack_features(batch_samples), model, adjacency_of(batch_samples), dropout);
      const Var loss = nn::cross_entropy(logits, labels);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        report.aborted = true;
        report.diagnostic = "non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start) + "; parameters restored to the last finite state";
        break;
      }
      tape.backward(loss);
      bool finite_grads = true;
      for (const Tensor* p : params) finite_grads = finite_grads && p->grad.allFinite();
      if (!finite_grads) {
        report.aborted = true;
        report.diagnostic = "non-finite gradient at epoch " + std::to_string(epoch);
        break;
      }
      const Matrix& lv = logits.value();
      for (Eigen::Index r = 0; r < lv.rows(); ++r) {
        if (argmax_lower(std::span<const double>(lv.row(r).data(), static_cast<std::size_t>(lv.cols()))) ==
            labels[static_cast<std::size_t>(r)]) {
          ++hits;
        }
      }
      if (hyper.clip_norm > 0.0) clip_global_norm(params, hyper.clip_norm);
      nn::adam_step(params, adam);
      loss_sum += value * static_cast<double>(end - start);
    }
    if (report.aborted) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
    const Evaluation val = evaluate(model, val_set);
    rec.val_loss = val.loss;
    rec.val_accuracy = val.accuracy;
    report.history.push_back(rec);
    if (!std::isfinite(val.loss)) {
      report.aborted = true;
      report.diagnostic = "non-finite validation loss at epoch " + std::to_string(epoch);
      break;
    }
    if (val.accuracy > best_accuracy) {
      best_accuracy = val.accuracy;
      best = snapshot(model);
      report.best_epoch = epoch;
    }
  }

  // Best-validation parameters are always finite: they passed a full evaluation.
  restore(model, best);
  if (!split.test.empty()) report.test = evaluate(model, split.test);
  report.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(model), std::move(report)};
}

}  // namespace mfgat
