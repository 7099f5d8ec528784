#include "mfgat/cli.hpp"
#include "mfgat/config.hpp"
#include "mfgat/dataset_io.hpp"
#include "mfgat/errors.hpp"
#include "mfgat/experiment.hpp"
#include "mfgat/nn/dft.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace mfgat;

namespace {

ExperimentConfig config_from(const std::optional<std::string>& json) {
  return json ? parse_config(*json) : ExperimentConfig::desk_defaults();
}

const std::vector<GraphSample>& part_of(const DatasetSplit& split, const std::string& part) {
  if (part == "train") return split.train;
  if (part == "val") return split.val;
  if (part == "test") return split.test;
  throw std::invalid_argument("part must be train, val or test");
}

// Graph samples as (features [n, nodes, window], labels [n]).
py::tuple to_arrays(const std::vector<GraphSample>& samples) {
  const py::ssize_t n = static_cast<py::ssize_t>(samples.size());
  const py::ssize_t nodes = n ? samples.front().node_features.rows() : 0;
  const py::ssize_t len = n ? samples.front().node_features.cols() : 0;
  py::array_t<double> x({n, nodes, len});
  py::array_t<int> y(n);
  auto xm = x.mutable_unchecked<3>();
  auto ym = y.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const Matrix& f = samples[static_cast<std::size_t>(i)].node_features;
    for (py::ssize_t r = 0; r < nodes; ++r)
      for (py::ssize_t c = 0; c < len; ++c) xm(i, r, c) = f(r, c);
    ym(i) = samples[static_cast<std::size_t>(i)].label;
  }
  return py::make_tuple(x, y);
}

py::dict evaluation_dict(const Evaluation& e) {
  py::list per_class;
  for (const ClassConfusion& c : e.per_class) {
    py::dict d;
    d["tp"] = c.tp;
    d["tn"] = c.tn;
    d["fp"] = c.fp;
    d["fn"] = c.fn;
    per_class.append(d);
  }
  py::dict out;
  out["accuracy"] = e.accuracy;
  out["correct"] = e.correct;
  out["total"] = e.total;
  out["loss"] = e.loss;
  out["per_class"] = per_class;
  out["predictions"] = e.predictions;
  return out;
}

py::dict report_dict(const RunReport& r) {
  py::list history;
  for (const EpochRecord& h : r.history) {
    py::dict d;
    d["epoch"] = h.epoch;
    d["train_loss"] = h.train_loss;
    d["train_accuracy"] = h.train_accuracy;
    d["val_loss"] = h.val_loss;
    d["val_accuracy"] = h.val_accuracy;
    history.append(d);
  }
  py::dict out;
  out["variant"] = std::string(to_string(r.variant));
  out["seed"] = r.seed;
  out["config_hash"] = r.config_hash;
  out["history"] = history;
  out["best_epoch"] = r.best_epoch;
  out["test"] = evaluation_dict(r.test);
  out["aborted"] = r.aborted;
  return out;
}

}  // namespace

PYBIND11_MODULE(_mfgat, m) {
  m.doc() = "Radar-network target recognition with multi-faceted graph attention";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("dft_magnitude", &nn::dft_magnitude, py::arg("x"), "Row-wise DFT magnitude of a 2-D array.");
  m.def("window_count", &window_count, py::arg("length"), py::arg("window"), py::arg("stride"));
  m.def(
      "slide_window",
      [](const std::vector<double>& series, int window, int stride) { return slide_window(series, window, stride); },
      py::arg("series"), py::arg("window"), py::arg("stride"));
  m.def(
      "accuracy_from_counts",
      [](std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
        return accuracy_from_counts({tp, tn, fp, fn});
      },
      py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));

  m.def("default_config", [] { return to_canonical_json(ExperimentConfig::desk_defaults()); },
        "Desk-scale configuration as canonical JSON.");
  m.def("paper_config", [] { return to_canonical_json(ExperimentConfig::paper_defaults()); });
  m.def("canonical_config", [](const std::string& json) { return to_canonical_json(parse_config(json)); });
  m.def("config_hash", [](const std::string& json) { return config_hash(parse_config(json)); });

  py::class_<DatasetSplit>(m, "Dataset")
      .def("arrays", [](const DatasetSplit& s, const std::string& part) { return to_arrays(part_of(s, part)); },
           py::arg("part") = "train", "(features [n, nodes, window], labels [n]) for one split.")
      .def_property_readonly("sizes", [](const DatasetSplit& s) {
        return py::make_tuple(s.train.size(), s.val.size(), s.test.size());
      })
      .def_readonly("norm_mean", &DatasetSplit::norm_mean)
      .def_readonly("norm_std", &DatasetSplit::norm_std);

  m.def(
      "generate",
      [](double tsnr_db, std::uint64_t seed, std::optional<int> samples, const std::optional<std::string>& config) {
        ExperimentConfig c = config_from(config);
        if (samples) c.dataset.samples = *samples;
        validate(c);
        py::gil_scoped_release release;
        return prepare_split(c, tsnr_db, seed);
      },
      py::arg("tsnr_db"), py::arg("seed"), py::arg("samples") = py::none(), py::arg("config") = py::none());
  m.def("load_dataset", [](const std::string& path) { return load_dataset(path).split; }, py::arg("path"));

  py::class_<MfGatModel>(m, "Model")
      .def_property_readonly("variant", [](const MfGatModel& model) { return std::string(to_string(model.variant)); })
      .def_property_readonly("parameter_count", &MfGatModel::parameter_count)
      .def(
          "predict_proba",
          [](MfGatModel& model, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            if (x.ndim() != 3) throw ShapeError("predict_proba expects [graphs, nodes, window]");
            const auto graphs = x.shape(0), nodes = x.shape(1), len = x.shape(2);
            Matrix stacked(graphs * nodes, len);
            std::copy(x.data(), x.data() + x.size(), stacked.data());
            return forward(stacked, model, Adjacency::fully_connected(static_cast<int>(nodes)));
          },
          py::arg("x"), "Class probabilities [graphs, classes] in inference mode.")
      .def(
          "save", [](MfGatModel& model, const std::string& path, const std::string& hash) {
            save_checkpoint(path, model, hash);
          },
          py::arg("path"), py::arg("config_hash") = std::string(16, '0'));

  m.def(
      "build_model",
      [](const std::string& variant, std::uint64_t seed, const std::optional<std::string>& config) {
        return build_variant(parse_variant(variant), config_from(config).dims, seed);
      },
      py::arg("variant") = "mfgat", py::arg("seed") = 0, py::arg("config") = py::none());
  m.def("load_checkpoint", [](const std::string& path) { return load_checkpoint(path).model; }, py::arg("path"));

  m.def(
      "train",
      [](const MfGatModel& model, const DatasetSplit& data, std::optional<int> epochs, std::uint64_t seed,
         const std::optional<std::string>& config) {
        const ExperimentConfig c = config_from(config);
        Hyperparameters h = c.hyper;
        if (epochs) h.epochs = *epochs;
        h.seed = seed;
        py::gil_scoped_release release;
        TrainResult r = train(model, data, h, config_hash(c));
        py::gil_scoped_acquire acquire;
        return py::make_tuple(std::move(r.model), report_dict(r.report));
      },
      py::arg("model"), py::arg("data"), py::arg("epochs") = py::none(), py::arg("seed") = 0,
      py::arg("config") = py::none(), "Returns (trained model, run report dict).");
  m.def(
      "evaluate",
      [](MfGatModel& model, const DatasetSplit& data, const std::string& part) {
        return evaluation_dict(evaluate(model, part_of(data, part)));
      },
      py::arg("model"), py::arg("data"), py::arg("part") = "test");

  m.def(
      "gradient_audit",
      [](const std::string& variant, std::uint64_t seed, std::size_t coords) {
        nn::GradCheckOptions o;
        o.max_coords_per_tensor = coords;
        o.seed = seed;
        const nn::GradCheckResult r = gradient_audit(parse_variant(variant), gradcheck_dims(), seed, o);
        py::dict out;
        out["max_rel_error"] = r.max_rel_error;
        out["worst_tensor"] = r.worst_tensor;
        out["coords_checked"] = r.coords_checked;
        return out;
      },
      py::arg("variant") = "mfgat", py::arg("seed") = 0, py::arg("coords") = 4);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"mfgat"};
        full.insert(full.end(), args.begin(), args.end());
        std::ostringstream out, err;
        const int code = cli::run(full, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a subcommand; returns (exit code, stdout, stderr).");
}
