#include <doctest.h>

#include "mfgat/experiment.hpp"
#include "mfgat/train.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mfgat;

namespace {

ModelDims toy_dims() {
  ModelDims d;
  d.nodes = 3;
  d.window = 16;
  d.lstm_hidden = 4;
  d.heads = 2;
  d.head_width = 3;
  d.embed = 4;
  return d;
}

// Each class is a sinusoid at its own frequency on every node, plus noise.
std::vector<GraphSample> toy_samples(int count, Rng& rng, const ModelDims& d) {
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<GraphSample> out;
  for (int i = 0; i < count; ++i) {
    const int label = i % d.classes;
    Matrix x(d.nodes, d.window);
    for (int n = 0; n < d.nodes; ++n)
      for (int t = 0; t < d.window; ++t)
        x(n, t) = std::sin(2.0 * std::numbers::pi * (label + 1) * t / d.window + 0.3 * n) + noise(rng);
    out.push_back(GraphSample{x, label, Adjacency::fully_connected(d.nodes)});
  }
  return out;
}

DatasetSplit toy_split(int count, std::uint64_t seed, const ModelDims& d) {
  Rng rng(seed);
  return split_and_normalize(toy_samples(count, rng, d), {}, seed);
}

Hyperparameters toy_hyper(int epochs) {
  Hyperparameters h;
  h.epochs = epochs;
  h.lr = 1e-2;
  h.batch = 8;
  h.dropout = 0.0;
  h.seed = 3;
  return h;
}

}  // namespace

TEST_CASE("accuracy from confusion counts") {
  CHECK(accuracy_from_counts({40, 30, 20, 10}) == doctest::Approx(0.7));
  CHECK_THROWS(accuracy_from_counts({0, 0, 0, 0}));
  CHECK(accuracy_from_counts({5, 0, 0, 0}) == 1.0);
}

TEST_CASE("property: accuracy formula on 20 random confusion fixtures") {
  Rng rng(21);
  std::uniform_int_distribution<std::uint64_t> count(0, 1000);
  for (int i = 0; i < 20; ++i) {
    const ClassConfusion c{count(rng), count(rng), count(rng), count(rng) + 1};
    const double expected = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.tp + c.tn + c.fp + c.fn);
    CHECK(accuracy_from_counts(c) == expected);
  }
}

TEST_CASE("evaluate_predictions: one-vs-rest counts agree with a direct tally") {
  Rng rng(22);
  std::uniform_int_distribution<int> cls(0, 2);
  std::vector<int> pred(97), truth(97);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = cls(rng);
    truth[i] = cls(rng);
  }
  const Evaluation e = evaluate_predictions(pred, truth, 3);
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  CHECK(e.correct == correct);
  CHECK(e.total == 97);
  CHECK(e.accuracy == static_cast<double>(correct) / 97.0);
  for (int k = 0; k < 3; ++k) {
    ClassConfusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i] == k, t = truth[i] == k;
      c.tp += p && t;
      c.tn += !p && !t;
      c.fp += p && !t;
      c.fn += !p && t;
    }
    CHECK(e.per_class[static_cast<std::size_t>(k)] == c);
    CHECK(c.tp + c.tn + c.fp + c.fn == 97);
  }
  const std::vector<int> short_pred(3, 0);
  CHECK_THROWS(evaluate_predictions(short_pred, truth, 3));
}

TEST_CASE("argmax_lower resolves ties to the lower index") {
  const std::vector<double> tied{0.2, 0.5, 0.5};
  CHECK(argmax_lower(tied) == 1);
  const std::vector<double> flat(3, 1.0);
  CHECK(argmax_lower(flat) == 0);
}

TEST_CASE("evaluate: a constant classifier scores the share of class 0") {
  const ModelDims d = toy_dims();
  MfGatModel model = build_variant(ModelVariant::MfGat, d, 1);
  model.classifier_w.data.setZero();
  model.classifier_b.data.setZero();
  Rng rng(23);
  std::vector<GraphSample> samples = toy_samples(30, rng, d);
  samples.resize(20);  // 7 of class 0
  const Evaluation e = evaluate(model, samples, 6);
  CHECK(e.accuracy == doctest::Approx(7.0 / 20.0));
  CHECK(e.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(std::all_of(e.predictions.begin(), e.predictions.end(), [](int p) { return p == 0; }));
}

TEST_CASE("train: zero learning rate leaves every parameter unchanged") {
  const ModelDims d = toy_dims();
  const DatasetSplit split = toy_split(30, 24, d);
  MfGatModel initial = build_variant(ModelVariant::MfGat, d, 2);
  Hyperparameters h = toy_hyper(2);
  h.lr = 0.0;
  TrainResult r = train(initial, split, h);
  const auto before = initial.parameters(), after = r.model.parameters();
  REQUIRE(before.size() == after.size());
  for (std::size_t k = 0; k < before.size(); ++k) CHECK(before[k]->data == after[k]->data);
  CHECK(r.report.history.size() == 2);
}

TEST_CASE("train: separable toy set reaches full train accuracy within 20 epochs") {
  const ModelDims d = toy_dims();
  const DatasetSplit split = toy_split(60, 25, d);
  TrainResult r = train(build_variant(ModelVariant::MfGat, d, 3), split, toy_hyper(20));
  REQUIRE(r.report.history.size() == 20);
  CHECK_FALSE(r.report.aborted);
  const Evaluation on_train = evaluate(r.model, split.train);
  CHECK(on_train.accuracy == 1.0);
  CHECK(r.report.history.back().train_accuracy == 1.0);
  for (std::size_t e = 3; e < r.report.history.size(); ++e) {
    CAPTURE(e);
    CHECK(r.report.history[e].train_loss <= r.report.history[e - 1].train_loss);
  }
  CHECK(r.report.best_epoch >= 1);
  CHECK(r.report.test.total == split.test.size());
}

TEST_CASE("train: identical inputs give bit-identical histories") {
  const ModelDims d = toy_dims();
  const DatasetSplit split = toy_split(30, 26, d);
  Hyperparameters h = toy_hyper(3);
  h.dropout = 0.3;
  const TrainResult a = train(build_variant(ModelVariant::MfGat, d, 4), split, h);
  const TrainResult b = train(build_variant(ModelVariant::MfGat, d, 4), split, h);
  REQUIRE(a.report.history.size() == b.report.history.size());
  for (std::size_t e = 0; e < a.report.history.size(); ++e) {
    CHECK(a.report.history[e].train_loss == b.report.history[e].train_loss);
    CHECK(a.report.history[e].val_accuracy == b.report.history[e].val_accuracy);
  }
  CHECK(a.report.test.accuracy == b.report.test.accuracy);
  h.seed = 4;
  CHECK(train(build_variant(ModelVariant::MfGat, d, 4), split, h).report.history[0].train_loss !=
        a.report.history[0].train_loss);
}

TEST_CASE("train: a gradient cap that never binds changes nothing; a binding one does") {
  const ModelDims d = toy_dims();
  const DatasetSplit split = toy_split(30, 28, d);
  Hyperparameters h = toy_hyper(2);
  const TrainResult plain = train(build_variant(ModelVariant::MfGat, d, 5), split, h);
  h.clip_norm = 1e9;
  const TrainResult loose = train(build_variant(ModelVariant::MfGat, d, 5), split, h);
  h.clip_norm = 1e-3;
  const TrainResult tight = train(build_variant(ModelVariant::MfGat, d, 5), split, h);
  CHECK(loose.report.history.back().train_loss == plain.report.history.back().train_loss);
  CHECK(tight.report.history.back().train_loss != plain.report.history.back().train_loss);
  h.clip_norm = -1.0;
  CHECK_THROWS(train(build_variant(ModelVariant::MfGat, d, 5), split, h));
}

TEST_CASE("train: rejects invalid hyperparameters and mismatched data") {
  const ModelDims d = toy_dims();
  const DatasetSplit split = toy_split(30, 27, d);
  Hyperparameters h = toy_hyper(1);
  h.batch = 0;
  CHECK_THROWS(train(build_variant(ModelVariant::SdfeOnly, d, 1), split, h));
  h = toy_hyper(1);
  h.dropout = 1.0;
  CHECK_THROWS(train(build_variant(ModelVariant::SdfeOnly, d, 1), split, h));
  ModelDims wider = d;
  wider.window = 17;
  CHECK_THROWS(train(build_variant(ModelVariant::SdfeOnly, wider, 1), split, toy_hyper(1)));
}

TEST_CASE("sweep CSV: header, hash line and failure markers") {
  SweepResult r;
  r.config_hash = "00000000deadbeef";
  r.rows.push_back(SweepRow{0.0, 1, ModelVariant::MfGat, 0.75, 5, 1.5, {}});
  r.rows.push_back(SweepRow{0.0, 2, ModelVariant::MfGat, std::nullopt, 0, 0.1, "boom"});
  r.rows.push_back(SweepRow{0.0, 3, ModelVariant::MfGat, 0.25, 5, 1.0, {}});
  r.curve = aggregate_curve(r.rows);
  std::ostringstream out;
  write_sweep_csv(out, r);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "# config_hash=00000000deadbeef");
  std::getline(lines, line);
  CHECK(line == "tsnr_db,seed,variant,test_accuracy,epochs,wall_s");
  std::getline(lines, line);
  CHECK(line.rfind("0,1,mfgat,0.75,5,", 0) == 0);
  std::getline(lines, line);
  CHECK(line.find("FAILED") != std::string::npos);

  REQUIRE(r.curve.size() == 1);
  CHECK(r.curve[0].mean_accuracy == doctest::Approx(0.5));
  CHECK(r.curve[0].std_accuracy == doctest::Approx(0.25));
  CHECK(r.curve[0].runs == 2);
  CHECK(r.curve[0].failures == 1);
}

TEST_CASE("ablation CSV: one row per seed and variant, summary deltas") {
  AblationResult a;
  a.tsnr_db = 0.0;
  a.config_hash = "0123456789abcdef";
  for (std::uint64_t seed : {1, 2, 3}) {
    a.rows.push_back(SweepRow{0.0, seed, ModelVariant::SdfeOnly, 0.6, 5, 1.0, {}});
    a.rows.push_back(SweepRow{0.0, seed, ModelVariant::Stdfe, 0.65, 5, 1.0, {}});
    a.rows.push_back(SweepRow{0.0, seed, ModelVariant::MfGat, 0.7, 5, 1.0, {}});
  }
  a.mean_sdfe = 0.6;
  a.mean_stdfe = 0.65;
  a.mean_mfgat = 0.7;
  CHECK(a.delta_mfgat_minus_stdfe() == doctest::Approx(0.05));
  CHECK(a.delta_stdfe_minus_sdfe() == doctest::Approx(0.05));
  std::ostringstream csv, summary;
  write_ablation_csv(csv, a);
  write_ablation_summary(summary, a);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2 + 9);
  CHECK(text.rfind("# config_hash=0123456789abcdef\n", 0) == 0);
  CHECK(summary.str().find("delta_mfgat_minus_stdfe") != std::string::npos);
}
