#include "mfgat/experiment.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace mfgat {

namespace {

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

SweepRow run_point(const ExperimentConfig& config, ModelVariant variant, const DatasetSplit& split, double tsnr_db,
                   std::uint64_t seed) {
  SweepRow row;
  row.tsnr_db = tsnr_db;
  row.seed = seed;
  row.variant = variant;
  try {
    TrainResult result = run_variant(config, variant, split, seed);
    row.epochs = static_cast<int>(result.report.history.size());
    row.wall_s = result.report.wall_s;
    if (result.report.aborted) {
      row.error = result.report.diagnostic;
    } else {
      row.test_accuracy = result.report.test_accuracy();
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

DatasetSplit prepare_split(const ExperimentConfig& config, double tsnr_db, std::uint64_t master_seed) {
  const std::optional<int> required = config.paper_replication ? std::optional<int>(9) : std::nullopt;
  auto samples = generate_samples(config.dataset, config.radars, config.targets, tsnr_db, dataset_seed(master_seed),
                                  required);
  return split_and_normalize(std::move(samples), SplitRatios{}, split_seed(master_seed));
}

DatasetHeader make_header(const ExperimentConfig& config) {
  DatasetHeader h;
  h.radars = static_cast<std::uint32_t>(config.radars.size());
  h.window = static_cast<std::uint32_t>(config.dataset.window);
  h.sample_rate_hz = config.radars.front().sample_rate_hz();
  h.labels = class_names(config.dataset.class_count);
  h.config_hash = config_hash(config);
  return h;
}

TrainResult run_variant(const ExperimentConfig& config, ModelVariant variant, const DatasetSplit& split,
                        std::uint64_t master_seed) {
  MfGatModel model = build_variant(variant, config.dims, init_seed(master_seed));
  Hyperparameters hyper = config.hyper;
  hyper.seed = train_seed(master_seed, variant);
  return train(std::move(model), split, hyper, config_hash(config));
}

SweepResult snr_sweep(const ExperimentConfig& config, std::span<const double> tsnr_list_db,
                      std::span<const ModelVariant> variants, const ProgressFn& progress) {
  if (tsnr_list_db.empty()) throw std::invalid_argument("snr_sweep: no TSNR points");
  if (config.seeds.empty()) throw std::invalid_argument("snr_sweep: no seeds");
  if (variants.empty()) throw std::invalid_argument("snr_sweep: no variants");
  SweepResult result;
  result.config_hash = config_hash(config);
  for (double tsnr : tsnr_list_db) {
    for (std::uint64_t seed : config.seeds) {
      std::optional<DatasetSplit> split;
      std::string failure;
      try {
        split = prepare_split(config, tsnr, seed);
      } catch (const std::exception& e) {
        failure = e.what();
      }
      for (ModelVariant v : variants) {
        SweepRow row;
        if (split) {
          row = run_point(config, v, *split, tsnr, seed);
        } else {
          row.tsnr_db = tsnr;
          row.seed = seed;
          row.variant = v;
          row.error = "dataset generation failed: " + failure;
        }
        if (progress) progress(row);
        result.rows.push_back(std::move(row));
      }
    }
  }
  result.curve = aggregate_curve(result.rows);
  return result;
}

std::vector<CurvePoint> aggregate_curve(std::span<const SweepRow> rows) {
  // Keyed aggregation so the result does not depend on row order.
  std::map<std::pair<double, int>, std::vector<double>> ok;
  std::map<std::pair<double, int>, int> failed;
  for (const SweepRow& r : rows) {
    const auto key = std::make_pair(r.tsnr_db, static_cast<int>(r.variant));
    if (r.test_accuracy) ok[key].push_back(*r.test_accuracy);
    else ++failed[key];
    ok.try_emplace(key);
  }
  std::vector<CurvePoint> curve;
  for (const auto& [key, values] : ok) {
    CurvePoint p;
    p.tsnr_db = key.first;
    p.variant = static_cast<ModelVariant>(key.second);
    p.runs = static_cast<int>(values.size());
    p.failures = failed.contains(key) ? failed.at(key) : 0;
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      p.mean_accuracy = sum / static_cast<double>(values.size());
      double sq = 0.0;
      for (double v : values) sq += (v - p.mean_accuracy) * (v - p.mean_accuracy);
      p.std_accuracy = std::sqrt(sq / static_cast<double>(values.size()));
    }
    curve.push_back(p);
  }
  return curve;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "# config_hash=" << result.config_hash << "\n";
  out << "tsnr_db,seed,variant,test_accuracy,epochs,wall_s\n";
  for (const SweepRow& r : result.rows) {
    out << format_double(r.tsnr_db) << ',' << r.seed << ',' << to_string(r.variant) << ','
        << (r.test_accuracy ? format_double(*r.test_accuracy) : std::string("FAILED")) << ',' << r.epochs << ','
        << std::fixed << std::setprecision(3) << r.wall_s << std::defaultfloat << "\n";
  }
}

void write_curve_csv(std::ostream& out, const SweepResult& result) {
  out << "# config_hash=" << result.config_hash << "\n";
  out << "tsnr_db,variant,mean_accuracy,std_accuracy,runs,failures\n";
  for (const CurvePoint& p : result.curve) {
    out << format_double(p.tsnr_db) << ',' << to_string(p.variant) << ',' << format_double(p.mean_accuracy) << ','
        << format_double(p.std_accuracy) << ',' << p.runs << ',' << p.failures << "\n";
  }
}

AblationResult ablation_run(const ExperimentConfig& config, double tsnr_db, const ProgressFn& progress) {
  static constexpr ModelVariant kVariants[] = {ModelVariant::SdfeOnly, ModelVariant::Stdfe, ModelVariant::MfGat};
  const double grid[] = {tsnr_db};
  const SweepResult sweep = snr_sweep(config, grid, kVariants, progress);
  AblationResult result;
  result.tsnr_db = tsnr_db;
  result.config_hash = sweep.config_hash;
  result.rows = sweep.rows;
  for (const CurvePoint& p : sweep.curve) {
    switch (p.variant) {
      case ModelVariant::SdfeOnly: result.mean_sdfe = p.mean_accuracy; break;
      case ModelVariant::Stdfe: result.mean_stdfe = p.mean_accuracy; break;
      case ModelVariant::MfGat: result.mean_mfgat = p.mean_accuracy; break;
    }
  }
  return result;
}

void write_ablation_csv(std::ostream& out, const AblationResult& result) {
  SweepResult as_sweep;
  as_sweep.config_hash = result.config_hash;
  as_sweep.rows = result.rows;
  write_sweep_csv(out, as_sweep);
}

void write_ablation_summary(std::ostream& out, const AblationResult& result) {
  out << "# config_hash=" << result.config_hash << "\n";
  out << "tsnr_db,mean_sdfe,mean_stdfe,mean_mfgat,delta_stdfe_minus_sdfe,delta_mfgat_minus_stdfe\n";
  out << format_double(result.tsnr_db) << ',' << format_double(result.mean_sdfe) << ','
      << format_double(result.mean_stdfe) << ',' << format_double(result.mean_mfgat) << ','
      << format_double(result.delta_stdfe_minus_sdfe()) << ',' << format_double(result.delta_mfgat_minus_stdfe())
      << "\n";
}

}  // namespace mfgat

namespace mfgat {

ModelDims gradcheck_dims() {
  ModelDims d;
  d.lstm_hidden = 3;
  d.heads = 8;
  d.head_width = 2;
  d.embed = 3;
  return d;
}

nn::GradCheckResult gradient_audit(ModelVariant variant, const ModelDims& dims, std::uint64_t seed,
                                   const nn::GradCheckOptions& options) {
  MfGatModel model = build_variant(variant, dims, derive_seed(seed, "gradcheck.init"));
  Rng rng = make_rng(seed, "gradcheck.sample");
  Matrix features(dims.nodes, dims.window);
  for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] = standard_normal(rng);
  const std::vector<int> label{static_cast<int>(rng() % static_cast<std::uint64_t>(dims.classes))};
  const Adjacency adjacency = Adjacency::fully_connected(dims.nodes);
  const nn::LossBuilder loss = [&](Tape& tape) {
    return nn::cross_entropy(forward_logits(tape, features, model, adjacency), label);
  };
  return nn::grad_check(loss, model.parameters(), options);
}

}  // namespace mfgat
