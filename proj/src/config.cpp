#include "mfgat/config.hpp"

#include "mfgat/errors.hpp"
#include "mfgat/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mfgat {

using nlohmann::json;

namespace {

std::vector<RadarConfig> default_radars() {
  std::vector<RadarConfig> radars;
  // Five type-1 radars on a 20 km baseline, four type-2 radars offset 15 km.
  for (int k = 0; k < 5; ++k) {
    radars.push_back(RadarConfig{k, RadarType::Type1, 3.25e9, 10e6, 0.05, {20e3 * k, 0.0, 0.0}});
  }
  for (int k = 0; k < 4; ++k) {
    radars.push_back(RadarConfig{5 + k, RadarType::Type2, 2.52e9, 10e6, 0.05, {10e3 + 20e3 * k, 15e3, 0.0}});
  }
  return radars;
}

std::vector<TargetProfile> default_targets() {
  return {
      TargetProfile{0, TargetClass::TypeA, {0.64, 2.75}, {0.5, 0.3}, 1.0, 5000.0, 500e3, 0.05},
      TargetProfile{1, TargetClass::TypeB, {1.67, 8.72}, {0.5, 0.3}, 1.0, 5000.0, 500e3, 0.05},
  };
}

std::string_view radar_type_name(RadarType t) { return t == RadarType::Type1 ? "type1" : "type2"; }

std::string_view target_class_name(TargetClass c) {
  switch (c) {
    case TargetClass::None: return "none";
    case TargetClass::TypeA: return "type_a";
    case TargetClass::TypeB: return "type_b";
  }
  return "none";
}

// Walks a JSON object, remembering its path and which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }
  ~Reader() = default;

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& target) {
    const json* v = find(key);
    if (v == nullptr) return;
    target = convert<T>(*v, at(key));
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ConfigError(path, "expected a non-negative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
    }
    return v.get<T>();
  }

  template <typename T>
  void read_list(const std::string& key, std::vector<T>& target) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array");
    target.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      target.push_back(convert<T>((*v)[i], at(key) + "[" + std::to_string(i) + "]"));
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json radar_to_json(const RadarConfig& r) {
  return json{{"id", r.id},
              {"type", radar_type_name(r.radar_type)},
              {"carrier_hz", r.carrier_hz},
              {"bandwidth_hz", r.bandwidth_hz},
              {"pulse_interval_s", r.pulse_interval_s},
              {"position_m", r.position_m}};
}

RadarConfig radar_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  RadarConfig radar;
  r.read("id", radar.id);
  std::string type = "type1";
  r.read("type", type);
  if (type == "type1") radar.radar_type = RadarType::Type1;
  else if (type == "type2") radar.radar_type = RadarType::Type2;
  else throw ConfigError(r.at("type"), "expected \"type1\" or \"type2\"");
  r.read("carrier_hz", radar.carrier_hz);
  r.read("bandwidth_hz", radar.bandwidth_hz);
  r.read("pulse_interval_s", radar.pulse_interval_s);
  std::vector<double> pos;
  r.read_list("position_m", pos);
  if (r.find("position_m") != nullptr) {
    if (pos.size() != 3) throw ConfigError(r.at("position_m"), "expected three coordinates");
    radar.position_m = {pos[0], pos[1], pos[2]};
  }
  r.finish();
  return radar;
}

json target_to_json(const TargetProfile& t) {
  return json{{"id", t.id},
              {"class", target_class_name(t.target_class)},
              {"micro_freqs_hz", t.micro_freqs_hz},
              {"micro_amplitudes", t.micro_amplitudes},
              {"base_rcs", t.base_rcs},
              {"speed_mps", t.speed_mps},
              {"initial_range_m", t.initial_range_m},
              {"roughness", t.roughness}};
}

TargetProfile target_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  TargetProfile t;
  r.read("id", t.id);
  std::string cls = "type_a";
  r.read("class", cls);
  if (cls == "type_a") t.target_class = TargetClass::TypeA;
  else if (cls == "type_b") t.target_class = TargetClass::TypeB;
  else throw ConfigError(r.at("class"), "expected \"type_a\" or \"type_b\"");
  r.read_list("micro_freqs_hz", t.micro_freqs_hz);
  r.read_list("micro_amplitudes", t.micro_amplitudes);
  r.read("base_rcs", t.base_rcs);
  r.read("speed_mps", t.speed_mps);
  r.read("initial_range_m", t.initial_range_m);
  r.read("roughness", t.roughness);
  r.finish();
  return t;
}

json to_json(const ExperimentConfig& c) {
  json radars = json::array();
  for (const auto& r : c.radars) radars.push_back(radar_to_json(r));
  json targets = json::array();
  for (const auto& t : c.targets) targets.push_back(target_to_json(t));
  const DatasetRecipe& d = c.dataset;
  const ModelDims& m = c.dims;
  const Hyperparameters& h = c.hyper;
  return json{
      {"radars", radars},
      {"targets", targets},
      {"dataset",
       {{"samples", d.samples},
        {"window", d.window},
        {"stride", d.stride},
        {"segment_samples", d.segment_samples},
        {"class_count", d.class_count},
        {"rsnr_offset_db", d.rsnr_offset_db}}},
      {"tsnr_db", c.tsnr_db},
      {"tsnr_grid_db", c.tsnr_grid_db},
      {"variant", std::string(to_string(c.variant))},
      {"model",
       {{"nodes", m.nodes},
        {"window", m.window},
        {"lstm_hidden", m.lstm_hidden},
        {"lstm_layers", m.lstm_layers},
        {"heads", m.heads},
        {"head_width", m.head_width},
        {"embed", m.embed},
        {"classes", m.classes},
        {"transform_lstm", m.transform_lstm}}},
      {"hyper",
       {{"epochs", h.epochs}, {"lr", h.lr}, {"batch", h.batch}, {"dropout", h.dropout}, {"clip_norm", h.clip_norm}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"paper_replication", c.paper_replication},
  };
}

}  // namespace

ExperimentConfig ExperimentConfig::paper_defaults() {
  ExperimentConfig c;
  c.radars = default_radars();
  c.targets = default_targets();
  c.dataset.samples = 6300;
  c.dims = ModelDims{};  // 200-step input, 128 hidden, 8 heads
  c.hyper = Hyperparameters{};
  c.paper_replication = true;
  return c;
}

ExperimentConfig ExperimentConfig::desk_defaults() {
  ExperimentConfig c;
  c.radars = default_radars();
  c.targets = default_targets();
  c.dataset.samples = 1200;
  c.dims.lstm_hidden = 16;
  c.dims.heads = 8;
  c.dims.head_width = 4;
  c.dims.embed = 16;
  c.hyper.epochs = 30;
  c.hyper.lr = 5e-3;
  c.hyper.dropout = 0.1;
  // The 200-step recurrences occasionally stall on a plateau without a cap.
  c.hyper.clip_norm = 5.0;
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.radars.empty()) throw ConfigError("radars", "at least one radar required");
  std::set<int> ids;
  for (std::size_t i = 0; i < c.radars.size(); ++i) {
    const RadarConfig& r = c.radars[i];
    const std::string p = "radars[" + std::to_string(i) + "]";
    if (!ids.insert(r.id).second) throw ConfigError(p + ".id", "duplicate radar id");
    if (!(r.carrier_hz > 0.0)) throw ConfigError(p + ".carrier_hz", "must be positive");
    if (!(r.bandwidth_hz > 0.0)) throw ConfigError(p + ".bandwidth_hz", "must be positive");
    if (!(r.pulse_interval_s > 0.0)) throw ConfigError(p + ".pulse_interval_s", "must be positive");
  }
  bool has_a = false;
  bool has_b = false;
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const TargetProfile& t = c.targets[i];
    const std::string p = "targets[" + std::to_string(i) + "]";
    has_a = has_a || t.target_class == TargetClass::TypeA;
    has_b = has_b || t.target_class == TargetClass::TypeB;
    if (t.micro_freqs_hz.size() != t.micro_amplitudes.size()) {
      throw ConfigError(p + ".micro_amplitudes", "length differs from micro_freqs_hz");
    }
    for (std::size_t k = 0; k < t.micro_freqs_hz.size(); ++k) {
      for (const RadarConfig& r : c.radars) {
        if (!(t.micro_freqs_hz[k] >= 0.0) || t.micro_freqs_hz[k] >= r.nyquist_hz()) {
          throw ConfigError(p + ".micro_freqs_hz[" + std::to_string(k) + "]", "must be below the Nyquist frequency");
        }
      }
    }
    if (!(t.base_rcs > 0.0)) throw ConfigError(p + ".base_rcs", "must be positive");
    if (!(t.initial_range_m > 0.0)) throw ConfigError(p + ".initial_range_m", "must be positive");
    if (!(t.speed_mps >= 0.0)) throw ConfigError(p + ".speed_mps", "must be non-negative");
    if (!(t.roughness >= 0.0)) throw ConfigError(p + ".roughness", "must be non-negative");
  }
  if (!has_a || !has_b) throw ConfigError("targets", "need one type_a and one type_b profile");

  const DatasetRecipe& d = c.dataset;
  if (d.samples < 10) throw ConfigError("dataset.samples", "must be at least 10");
  if (d.window < 1) throw ConfigError("dataset.window", "must be positive");
  if (d.stride < 1) throw ConfigError("dataset.stride", "must be positive");
  if (d.segment_samples < d.window) throw ConfigError("dataset.segment_samples", "must be at least one window");
  if (d.class_count != 2 && d.class_count != 3) throw ConfigError("dataset.class_count", "must be 2 or 3");
  if (!std::isfinite(d.rsnr_offset_db)) throw ConfigError("dataset.rsnr_offset_db", "must be finite");
  if (!std::isfinite(c.tsnr_db)) throw ConfigError("tsnr_db", "must be finite");
  if (c.tsnr_grid_db.empty()) throw ConfigError("tsnr_grid_db", "must not be empty");

  try {
    validate(c.dims);
  } catch (const ShapeError& e) {
    throw ConfigError("model", e.what());
  }
  if (c.dims.nodes != static_cast<int>(c.radars.size())) throw ConfigError("model.nodes", "must equal the radar count");
  if (c.dims.window != d.window) throw ConfigError("model.window", "must equal dataset.window");
  if (c.dims.classes != d.class_count) throw ConfigError("model.classes", "must equal dataset.class_count");
  validate(c.hyper);
  if (c.seeds.empty()) throw ConfigError("seeds", "at least one seed required");
  if (c.paper_replication) validate_paper_defaults(c);
}

void validate_paper_defaults(const ExperimentConfig& c) {
  int type1 = 0;
  int type2 = 0;
  for (std::size_t i = 0; i < c.radars.size(); ++i) {
    const RadarConfig& r = c.radars[i];
    const std::string p = "radars[" + std::to_string(i) + "]";
    const double carrier = r.radar_type == RadarType::Type1 ? 3.25e9 : 2.52e9;
    (r.radar_type == RadarType::Type1 ? type1 : type2)++;
    if (r.carrier_hz != carrier) throw ConfigError(p + ".carrier_hz", "differs from the published radar table");
    if (r.bandwidth_hz != 10e6) throw ConfigError(p + ".bandwidth_hz", "published value is 10 MHz");
    if (r.pulse_interval_s != 0.05) throw ConfigError(p + ".pulse_interval_s", "published value is 50 ms");
  }
  if (type1 != 5 || type2 != 4) throw ConfigError("radars", "published network has 5 type-1 and 4 type-2 radars");
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const TargetProfile& t = c.targets[i];
    const std::string p = "targets[" + std::to_string(i) + "]";
    const std::vector<double> freqs = t.target_class == TargetClass::TypeA ? std::vector<double>{0.64, 2.75}
                                                                          : std::vector<double>{1.67, 8.72};
    if (t.micro_freqs_hz != freqs) throw ConfigError(p + ".micro_freqs_hz", "differs from the published values");
    if (t.speed_mps != 5000.0) throw ConfigError(p + ".speed_mps", "published value is 5 km/s");
  }
  if (c.dataset.window != 200) throw ConfigError("dataset.window", "published value is 200");
  if (c.dataset.stride != 50) throw ConfigError("dataset.stride", "published value is 50");
  if (c.dims.lstm_hidden != 128) throw ConfigError("model.lstm_hidden", "published value is 128");
  if (c.dims.heads != 8) throw ConfigError("model.heads", "published value is 8");
  if (c.hyper.epochs != 100) throw ConfigError("hyper.epochs", "published value is 100");
  if (c.hyper.lr != 5e-4) throw ConfigError("hyper.lr", "published value is 0.0005");
  if (c.hyper.batch != 32) throw ConfigError("hyper.batch", "published value is 32");
  if (c.hyper.dropout != 0.6) throw ConfigError("hyper.dropout", "published value is 0.6");
  if (c.hyper.clip_norm != 0.0) throw ConfigError("hyper.clip_norm", "published schedule has no clipping");
}

std::string to_canonical_json(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig c = ExperimentConfig::desk_defaults();
  Reader r(j, "");
  if (const json* radars = r.find("radars")) {
    if (!radars->is_array()) throw ConfigError("radars", "expected an array");
    c.radars.clear();
    for (std::size_t i = 0; i < radars->size(); ++i) {
      c.radars.push_back(radar_from_json((*radars)[i], "radars[" + std::to_string(i) + "]"));
    }
  }
  if (const json* targets = r.find("targets")) {
    if (!targets->is_array()) throw ConfigError("targets", "expected an array");
    c.targets.clear();
    for (std::size_t i = 0; i < targets->size(); ++i) {
      c.targets.push_back(target_from_json((*targets)[i], "targets[" + std::to_string(i) + "]"));
    }
  }
  if (const json* d = r.find("dataset")) {
    Reader dr(*d, "dataset");
    dr.read("samples", c.dataset.samples);
    dr.read("window", c.dataset.window);
    dr.read("stride", c.dataset.stride);
    dr.read("segment_samples", c.dataset.segment_samples);
    dr.read("class_count", c.dataset.class_count);
    dr.read("rsnr_offset_db", c.dataset.rsnr_offset_db);
    dr.finish();
  }
  r.read("tsnr_db", c.tsnr_db);
  r.read_list("tsnr_grid_db", c.tsnr_grid_db);
  if (const json* v = r.find("variant")) {
    const auto name = Reader::convert<std::string>(*v, "variant");
    try {
      c.variant = parse_variant(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("variant", e.what());
    }
  }
  if (const json* m = r.find("model")) {
    Reader mr(*m, "model");
    mr.read("nodes", c.dims.nodes);
    mr.read("window", c.dims.window);
    mr.read("lstm_hidden", c.dims.lstm_hidden);
    mr.read("lstm_layers", c.dims.lstm_layers);
    mr.read("heads", c.dims.heads);
    mr.read("head_width", c.dims.head_width);
    mr.read("embed", c.dims.embed);
    mr.read("classes", c.dims.classes);
    mr.read("transform_lstm", c.dims.transform_lstm);
    mr.finish();
  }
  if (const json* h = r.find("hyper")) {
    Reader hr(*h, "hyper");
    hr.read("epochs", c.hyper.epochs);
    hr.read("lr", c.hyper.lr);
    hr.read("batch", c.hyper.batch);
    hr.read("dropout", c.hyper.dropout);
    hr.read("clip_norm", c.hyper.clip_norm);
    hr.finish();
  }
  r.read_list("seeds", c.seeds);
  r.read("output_dir", c.output_dir);
  r.read("paper_replication", c.paper_replication);
  r.finish();
  validate(c);
  return c;
}

std::string config_hash(const ExperimentConfig& config) {
  // Where results land is not part of the experiment's identity.
  ExperimentConfig keyed = config;
  keyed.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_canonical_json(keyed)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << to_canonical_json(config);
  if (!out) throw IoError("failed writing config '" + path.string() + "'");
}

std::uint64_t dataset_seed(std::uint64_t master) { return derive_seed(master, "dataset"); }
std::uint64_t split_seed(std::uint64_t master) { return derive_seed(master, "split"); }
std::uint64_t init_seed(std::uint64_t master) { return derive_seed(master, "init"); }
std::uint64_t train_seed(std::uint64_t master, ModelVariant variant) {
  return derive_seed(master, "train", static_cast<std::uint64_t>(variant));
}

}  // namespace mfgat
