#include "mfgat/cli.hpp"

#include "mfgat/config.hpp"
#include "mfgat/errors.hpp"
#include "mfgat/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

namespace mfgat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  bool paper_defaults = false;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::optional<double> tsnr;
  std::string variant;
  std::optional<int> epochs;
  std::optional<int> samples;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_flag("--paper-defaults", o.paper_defaults, "Use the published network, dataset size and training table");
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config's seed list)");
  cmd->add_option("--seeds", o.seeds, "Comma-separated master seeds")->delimiter(',');
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--tsnr", o.tsnr, "Transmitter SNR in dB");
  cmd->add_option("--variant", o.variant, "Model variant: sdfe, stdfe or mfgat");
  cmd->add_option("--epochs", o.epochs, "Override the number of training epochs");
  cmd->add_option("--samples", o.samples, "Override the number of graph samples to synthesise");
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig c = !o.config_path.empty()  ? load_config(o.config_path)
                       : o.paper_defaults      ? ExperimentConfig::paper_defaults()
                                               : ExperimentConfig::desk_defaults();
  if (o.paper_defaults) c.paper_replication = true;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.seed) c.seeds = {*o.seed};
  if (o.tsnr) c.tsnr_db = *o.tsnr;
  if (!o.variant.empty()) {
    try {
      c.variant = parse_variant(o.variant);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("variant", e.what());
    }
  }
  if (o.epochs) c.hyper.epochs = *o.epochs;
  if (o.samples) c.dataset.samples = *o.samples;
  if (!o.out.empty()) c.output_dir = o.out;
  validate(c);
  return c;
}

fs::path output_dir(const ExperimentConfig& c) {
  fs::path dir = c.output_dir;
  if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0' && dir.is_relative()) {
    dir = fs::path(root) / dir;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void check_compatible(const ModelDims& dims, const DatasetHeader& h) {
  if (static_cast<int>(h.radars) != dims.nodes || static_cast<int>(h.window) != dims.window ||
      static_cast<int>(h.labels.size()) != dims.classes) {
    throw FormatError("model dims (nodes=" + std::to_string(dims.nodes) + ", window=" + std::to_string(dims.window) +
                      ", classes=" + std::to_string(dims.classes) + ") conflict with dataset header (radars=" +
                      std::to_string(h.radars) + ", window=" + std::to_string(h.window) +
                      ", classes=" + std::to_string(h.labels.size()) + ")");
  }
}

json evaluation_json(const Evaluation& e) {
  json classes = json::array();
  for (const ClassConfusion& c : e.per_class) {
    classes.push_back({{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}});
  }
  return json{{"accuracy", e.accuracy}, {"correct", e.correct}, {"total", e.total}, {"loss", e.loss},
              {"per_class", classes}};
}

json report_json(const RunReport& r) {
  json history = json::array();
  for (const EpochRecord& h : r.history) {
    history.push_back({{"epoch", h.epoch},
                       {"train_loss", h.train_loss},
                       {"train_accuracy", h.train_accuracy},
                       {"val_loss", h.val_loss},
                       {"val_accuracy", h.val_accuracy}});
  }
  return json{{"config_hash", r.config_hash},
              {"variant", std::string(to_string(r.variant))},
              {"seed", r.seed},
              {"history", history},
              {"best_epoch", r.best_epoch},
              {"test", evaluation_json(r.test)},
              {"wall_s", r.wall_s},
              {"aborted", r.aborted},
              {"diagnostic", r.diagnostic}};
}

void write_confusion_csv(std::ostream& out, const Evaluation& e, const std::vector<std::string>& labels,
                         const std::string& hash) {
  out << "# config_hash=" << hash << "\n";
  out << "class,label,tp,tn,fp,fn,accuracy\n";
  for (std::size_t c = 0; c < e.per_class.size(); ++c) {
    const ClassConfusion& cc = e.per_class[c];
    out << c << ',' << (c < labels.size() ? labels[c] : std::string()) << ',' << cc.tp << ',' << cc.tn << ','
        << cc.fp << ',' << cc.fn << ',' << json(accuracy_from_counts(cc)).dump() << "\n";
  }
}

int cmd_generate(const CommonOptions& o, std::ostream& out) {
  const ExperimentConfig c = resolve_config(o);
  const std::uint64_t seed = c.seeds.front();
  const fs::path dir = output_dir(c);
  const DatasetSplit split = prepare_split(c, c.tsnr_db, seed);
  const DatasetHeader header = make_header(c);
  save_dataset(dir / "dataset.bin", split, header);

  const json manifest{{"format", "mfgat-dataset"},
                      {"version", header.version},
                      {"config_hash", header.config_hash},
                      {"config", json::parse(to_canonical_json(c))},
                      {"seed", seed},
                      {"tsnr_db", c.tsnr_db},
                      {"labels", header.labels},
                      {"counts", {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}}},
                      {"file", "dataset.bin"}};
  open_out(dir / "manifest.json") << manifest.dump(2) << "\n";
  out << "wrote " << (dir / "dataset.bin").string() << " (" << split.train.size() << "/" << split.val.size() << "/"
      << split.test.size() << " samples, config_hash=" << header.config_hash << ")\n";
  return kOk;
}

int cmd_train(const CommonOptions& o, const std::string& data_path, std::ostream& out) {
  const ExperimentConfig c = resolve_config(o);
  const std::uint64_t seed = c.seeds.front();
  const fs::path dir = output_dir(c);
  DatasetSplit split;
  std::vector<std::string> labels = class_names(c.dataset.class_count);
  if (!data_path.empty()) {
    LoadedDataset loaded = load_dataset(data_path);
    check_compatible(c.dims, loaded.header);
    labels = loaded.header.labels;
    split = std::move(loaded.split);
  } else {
    split = prepare_split(c, c.tsnr_db, seed);
  }
  TrainResult result = run_variant(c, c.variant, split, seed);
  const std::string hash = config_hash(c);
  save_checkpoint(dir / "checkpoint.bin", result.model, hash);
  open_out(dir / "run_report.json") << report_json(result.report).dump(2) << "\n";
  {
    std::ofstream csv = open_out(dir / "confusion.csv");
    write_confusion_csv(csv, result.report.test, labels, hash);
  }
  if (result.report.aborted) throw NumericError(result.report.diagnostic);
  const double first_loss = result.report.history.empty() ? 0.0 : result.report.history.front().train_loss;
  out << "variant=" << to_string(c.variant) << " epochs=" << result.report.history.size()
      << " best_epoch=" << result.report.best_epoch << " epoch1_loss=" << json(first_loss).dump()
      << " test_accuracy=" << json(result.report.test_accuracy()).dump() << " config_hash=" << hash << "\n";
  return kOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path, const std::string& which,
             const std::string& out_dir, std::ostream& out) {
  LoadedCheckpoint ck = load_checkpoint(checkpoint);
  LoadedDataset data = load_dataset(data_path);
  check_compatible(ck.model.dims, data.header);
  const std::vector<GraphSample>* part = which == "train" ? &data.split.train
                                         : which == "val" ? &data.split.val
                                                          : &data.split.test;
  if (part->empty()) throw FormatError("dataset split '" + which + "' is empty");
  const Evaluation e = evaluate(ck.model, *part);
  json report = evaluation_json(e);
  report["split"] = which;
  report["checkpoint_config_hash"] = ck.config_hash;
  report["dataset_config_hash"] = data.header.config_hash;
  report["variant"] = std::string(to_string(ck.model.variant));
  if (!out_dir.empty()) {
    fs::path dir = out_dir;
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0' && dir.is_relative()) {
      dir = fs::path(root) / dir;
    }
    fs::create_directories(dir);
    open_out(dir / "eval_report.json") << report.dump(2) << "\n";
    std::ofstream csv = open_out(dir / "eval_confusion.csv");
    write_confusion_csv(csv, e, data.header.labels, ck.config_hash);
  }
  out << report.dump() << "\n";
  return kOk;
}

int cmd_sweep(const CommonOptions& o, std::vector<double> grid, const std::vector<std::string>& variant_names,
              std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = resolve_config(o);
  if (grid.empty()) grid = c.tsnr_grid_db;
  std::vector<ModelVariant> variants;
  for (const std::string& name : variant_names) {
    try {
      variants.push_back(parse_variant(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("variants", e.what());
    }
  }
  if (variants.empty()) variants.push_back(c.variant);
  const fs::path dir = output_dir(c);
  const SweepResult result = snr_sweep(c, grid, variants, [&err](const SweepRow& r) {
    err << "tsnr=" << r.tsnr_db << " seed=" << r.seed << " variant=" << to_string(r.variant) << " accuracy="
        << (r.test_accuracy ? std::to_string(*r.test_accuracy) : "FAILED") << "\n";
  });
  {
    std::ofstream csv = open_out(dir / "sweep.csv");
    write_sweep_csv(csv, result);
  }
  {
    std::ofstream csv = open_out(dir / "curve.csv");
    write_curve_csv(csv, result);
  }
  write_curve_csv(out, result);
  return kOk;
}

int cmd_ablate(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = resolve_config(o);
  const fs::path dir = output_dir(c);
  const AblationResult result = ablation_run(c, c.tsnr_db, [&err](const SweepRow& r) {
    err << "seed=" << r.seed << " variant=" << to_string(r.variant) << " accuracy="
        << (r.test_accuracy ? std::to_string(*r.test_accuracy) : "FAILED") << "\n";
  });
  {
    std::ofstream csv = open_out(dir / "ablation.csv");
    write_ablation_csv(csv, result);
  }
  {
    std::ofstream csv = open_out(dir / "ablation_summary.csv");
    write_ablation_summary(csv, result);
  }
  write_ablation_csv(out, result);
  write_ablation_summary(out, result);
  return kOk;
}

int cmd_gradcheck(const std::string& variant_name, std::uint64_t seed, std::size_t coords, std::ostream& out) {
  ModelVariant variant;
  try {
    variant = parse_variant(variant_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("variant", e.what());
  }
  nn::GradCheckOptions options;
  options.max_coords_per_tensor = coords;
  options.seed = seed;
  const nn::GradCheckResult r = gradient_audit(variant, gradcheck_dims(), seed, options);
  const bool pass = r.max_rel_error < 1e-4;
  out << "variant=" << variant_name << " coords=" << r.coords_checked << " max_rel_error=" << json(r.max_rel_error).dump()
      << " worst=" << r.worst_tensor << "[" << r.worst_index << "] pass=" << (pass ? "true" : "false") << "\n";
  if (!pass) throw NumericError("gradient audit exceeded 1e-4 relative error");
  return kOk;
}

std::string quoted(const std::string& s) {
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') q += '\\';
    q += ch == '\n' ? ' ' : ch;
  }
  return q + "\"";
}

int fail(std::ostream& err, int code, const char* kind, const std::string& message, const std::string& field = {}) {
  err << "error: code=" << code << " kind=" << kind;
  if (!field.empty()) err << " field=" << field;
  err << " message=" << quoted(message) << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heterogeneous radar network target recognition with multi-faceted graph attention", "mfgat"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, sweep_opts, ablate_opts;
  auto* gen = app.add_subcommand("generate", "Synthesise a dataset file and manifest");
  add_common(gen, gen_opts);

  auto* trn = app.add_subcommand("train", "Train a model; writes checkpoint, run report and confusion counts");
  add_common(trn, train_opts);
  std::string train_data;
  trn->add_option("--data", train_data, "Dataset file (synthesised in memory when omitted)")->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  std::string ev_checkpoint, ev_data, ev_split = "test", ev_out;
  ev->add_option("--checkpoint", ev_checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "Dataset file")->required()->check(CLI::ExistingFile);
  ev->add_option("--split", ev_split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--out", ev_out, "Directory for eval_report.json and eval_confusion.csv");

  auto* sw = app.add_subcommand("sweep", "Accuracy versus TSNR");
  add_common(sw, sweep_opts);
  std::vector<double> grid;
  std::vector<std::string> variant_names;
  sw->add_option("--tsnr-grid", grid, "Comma-separated TSNR values in dB")->delimiter(',');
  sw->add_option("--variants", variant_names, "Comma-separated variants")->delimiter(',');

  auto* ab = app.add_subcommand("ablate", "Train sdfe, stdfe and mfgat on shared data");
  add_common(ab, ablate_opts);

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference audit of every model gradient");
  std::string gc_variant = "mfgat";
  std::uint64_t gc_seed = 0;
  std::size_t gc_coords = 0;
  gc->add_option("--variant", gc_variant, "Model variant");
  gc->add_option("--seed", gc_seed, "Seed for weights and the random sample");
  gc->add_option("--coords", gc_coords, "Coordinates probed per tensor (0 = all)");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("mfgat");

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    // A missing input file is an I/O problem, not a usage one.
    const std::string what = e.what();
    if (what.find("does not exist") != std::string::npos || what.find("File does not exist") != std::string::npos) {
      return fail(err, kIo, "io", what);
    }
    return fail(err, kUsage, "usage", what);
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_opts, out);
    if (trn->parsed()) return cmd_train(train_opts, train_data, out);
    if (ev->parsed()) return cmd_eval(ev_checkpoint, ev_data, ev_split, ev_out, out);
    if (sw->parsed()) return cmd_sweep(sweep_opts, grid, variant_names, out, err);
    if (ab->parsed()) return cmd_ablate(ablate_opts, out, err);
    if (gc->parsed()) return cmd_gradcheck(gc_variant, gc_seed, gc_coords, out);
  } catch (const ConfigError& e) {
    return fail(err, kConfig, "config", e.what(), e.field());
  } catch (const IoError& e) {
    return fail(err, kIo, "io", e.what());
  } catch (const FormatError& e) {
    return fail(err, kFormat, "format", e.what());
  } catch (const ShapeError& e) {
    return fail(err, kFormat, "format", e.what());
  } catch (const std::exception& e) {
    return fail(err, kRuntime, "runtime", e.what());
  }
  return fail(err, kUsage, "usage", "no subcommand");
}

}  // namespace mfgat::cli
