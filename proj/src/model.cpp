#include "mfgat/model.hpp"

#include "mfgat/binary_io.hpp"
#include "mfgat/errors.hpp"
#include "mfgat/nn/dft.hpp"
#include "mfgat/nn/serialize.hpp"

#include <cmath>
#include <fstream>

namespace mfgat {

namespace {

constexpr char kCheckpointMagic[9] = "MFGATCK";
constexpr std::uint32_t kCheckpointVersion = 1;

Branch make_branch(const ModelDims& dims, bool with_lstm, std::uint64_t seed, const std::string& name) {
  Branch b;
  int width = dims.window;
  if (with_lstm) {
    Rng rng = make_rng(seed, "init." + name + ".lstm");
    int input = 1;
    for (int k = 0; k < dims.lstm_layers; ++k) {
      b.lstm.push_back(LstmParams::init(input, dims.lstm_hidden, rng, name + ".lstm" + std::to_string(k)));
      input = dims.lstm_hidden;
    }
    width = dims.lstm_hidden;
  }
  Rng mh_rng = make_rng(seed, "init." + name + ".mhgat");
  b.mhgat = GatParams::init(width, dims.head_width, dims.heads, mh_rng, name + ".mhgat");
  Rng gat_rng = make_rng(seed, "init." + name + ".gat");
  b.gat = GatParams::init(b.mhgat.output_width(), dims.embed, 1, gat_rng, name + ".gat");
  return b;
}

Var branch_forward(Var input, Branch& branch, const Adjacency& adjacency, const DropoutContext& dropout) {
  Var h = input;
  if (!branch.lstm.empty()) {
    h = lstm_stack(input, branch.lstm);
  }
  if (dropout.active()) h = nn::dropout(h, dropout.p, true, *dropout.rng);
  h = mhgat_layer(h, adjacency, branch.mhgat, Activation::LeakyRelu, dropout).output;
  if (dropout.active()) h = nn::dropout(h, dropout.p, true, *dropout.rng);
  return gat_layer(h, adjacency, branch.gat.heads.front(), Activation::Identity, dropout).output;
}

void check_features(const Matrix& features, const MfGatModel& model, const Adjacency& adjacency) {
  if (adjacency.nodes() != model.dims.nodes) throw ShapeError("adjacency size differs from the model's node count");
  if (features.cols() != model.dims.window) {
    throw ShapeError("feature window " + std::to_string(features.cols()) + ", model expects " +
                     std::to_string(model.dims.window));
  }
  if (features.rows() == 0 || features.rows() % model.dims.nodes != 0) {
    throw ShapeError("feature rows must be a positive multiple of the node count");
  }
}

}  // namespace

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::SdfeOnly: return "sdfe";
    case ModelVariant::Stdfe: return "stdfe";
    case ModelVariant::MfGat: return "mfgat";
  }
  return "unknown";
}

ModelVariant parse_variant(std::string_view name) {
  if (name == "sdfe") return ModelVariant::SdfeOnly;
  if (name == "stdfe") return ModelVariant::Stdfe;
  if (name == "mfgat") return ModelVariant::MfGat;
  throw std::invalid_argument("unknown model variant '" + std::string(name) + "' (expected sdfe, stdfe or mfgat)");
}

void validate(const ModelDims& d) {
  const auto positive = [](int v, const char* name) {
    if (v < 1) throw ShapeError(std::string("model dims: ") + name + " must be positive");
  };
  positive(d.nodes, "nodes");
  positive(d.window, "window");
  positive(d.lstm_hidden, "lstm_hidden");
  positive(d.lstm_layers, "lstm_layers");
  positive(d.heads, "heads");
  positive(d.head_width, "head_width");
  positive(d.embed, "embed");
  if (d.classes < 2) throw ShapeError("model dims: classes must be at least 2");
}

nn::ParameterList Branch::tensors() {
  nn::ParameterList list;
  for (LstmParams& l : lstm) {
    auto t = l.tensors();
    list.insert(list.end(), t.begin(), t.end());
  }
  for (auto* p : mhgat.tensors()) list.push_back(p);
  for (auto* p : gat.tensors()) list.push_back(p);
  return list;
}

nn::ParameterList MfGatModel::parameters() {
  nn::ParameterList list = source.tensors();
  if (transform) {
    auto t = transform->tensors();
    list.insert(list.end(), t.begin(), t.end());
  }
  if (fuse) {
    auto t = fuse->tensors();
    list.insert(list.end(), t.begin(), t.end());
  }
  if (distill) {
    auto t = distill->tensors();
    list.insert(list.end(), t.begin(), t.end());
  }
  list.push_back(&classifier_w);
  list.push_back(&classifier_b);
  return list;
}

std::size_t MfGatModel::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : const_cast<MfGatModel*>(this)->parameters()) n += static_cast<std::size_t>(t->size());
  return n;
}

MfGatModel build_variant(ModelVariant variant, const ModelDims& dims, std::uint64_t seed) {
  validate(dims);
  MfGatModel m;
  m.variant = variant;
  m.dims = dims;
  m.seed = seed;
  m.source = make_branch(dims, true, seed, "source");
  if (variant != ModelVariant::SdfeOnly) {
    m.transform = make_branch(dims, dims.transform_lstm, seed, "transform");
    Rng rng = make_rng(seed, "init.distill");
    const int in = variant == ModelVariant::Stdfe ? 2 * dims.embed : dims.embed;
    m.distill = GatParams::init(in, dims.embed, 1, rng, "distill");
  }
  if (variant == ModelVariant::MfGat) {
    Rng rng = make_rng(seed, "init.fuse");
    m.fuse = FuseParams::init(dims.embed, rng, "fuse");
  }
  Rng rng = make_rng(seed, "init.classifier");
  m.classifier_w = Tensor("classifier.weight", glorot_uniform(dims.nodes * dims.embed, dims.classes, rng));
  m.classifier_b = Tensor("classifier.bias", Matrix::Zero(1, dims.classes));
  return m;
}

Var sdfe_forward(Tape& tape, const Matrix& features, MfGatModel& model, const Adjacency& adjacency,
                 const DropoutContext& dropout) {
  check_features(features, model, adjacency);
  return branch_forward(tape.constant(features), model.source, adjacency, dropout);
}

Var tdfe_forward(Tape& tape, const Matrix& features, MfGatModel& model, const Adjacency& adjacency,
                 const DropoutContext& dropout) {
  check_features(features, model, adjacency);
  if (!model.transform) throw std::logic_error("tdfe_forward: model variant has no transform branch");
  // Unitary scaling keeps spectral magnitudes at the input's scale so the LSTM gates do not saturate.
  const double scale = 1.0 / std::sqrt(static_cast<double>(features.cols()));
  return branch_forward(tape.constant(nn::dft_magnitude(features) * scale), *model.transform, adjacency, dropout);
}

Var readout(Var node_embeddings, int nodes) {
  if (nodes < 1 || node_embeddings.rows() % nodes != 0) throw ShapeError("readout: rows not a multiple of nodes");
  return nn::reshape(node_embeddings, node_embeddings.rows() / nodes, node_embeddings.cols() * nodes);
}

Var forward_logits(Tape& tape, const Matrix& features, MfGatModel& model, const Adjacency& adjacency,
                   const DropoutContext& dropout) {
  const Var h_source = sdfe_forward(tape, features, model, adjacency, dropout);
  Var nodes_out = h_source;
  if (model.variant != ModelVariant::SdfeOnly) {
    if (!model.distill) throw std::logic_error("forward: variant requires a distillation GAT");
    const Var h_transform = tdfe_forward(tape, features, model, adjacency, dropout);
    Var joined;
    if (model.variant == ModelVariant::MfGat) {
      if (!model.fuse) throw std::logic_error("forward: MF-GAT variant requires fusion parameters");
      joined = attention_fuse(h_source, h_transform, *model.fuse).fused;
    } else {
      joined = nn::concat_cols(h_source, h_transform);
    }
    if (dropout.active()) joined = nn::dropout(joined, dropout.p, true, *dropout.rng);
    nodes_out = gat_layer(joined, adjacency, model.distill->heads.front(), Activation::LeakyRelu, dropout).output;
  }
  const Var flat = readout(nodes_out, model.dims.nodes);
  return nn::affine(flat, tape.parameter(model.classifier_w), tape.parameter(model.classifier_b));
}

Matrix forward(const Matrix& features, MfGatModel& model, const Adjacency& adjacency) {
  Tape tape;
  return nn::softmax_rows(forward_logits(tape, features, model, adjacency).value());
}

void save_checkpoint(const std::filesystem::path& path, MfGatModel& model, const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  io::write_magic(out, kCheckpointMagic);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.variant));
  const ModelDims& d = model.dims;
  for (int v : {d.nodes, d.window, d.lstm_hidden, d.lstm_layers, d.heads, d.head_width, d.embed, d.classes,
                d.transform_lstm ? 1 : 0}) {
    io::write_le<std::int32_t>(out, v);
  }
  io::write_le<std::uint64_t>(out, model.seed);
  io::write_string(out, config_hash);
  const nn::ParameterList params = model.parameters();
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  std::vector<const Tensor*> view(params.begin(), params.end());
  nn::write_tensor_records(out, view);
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  io::expect_magic(in, kCheckpointMagic, "checkpoint");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto variant = io::read_le<std::uint32_t>(in);
  if (variant > static_cast<std::uint32_t>(ModelVariant::MfGat)) throw FormatError("unknown variant tag in checkpoint");
  ModelDims d;
  d.nodes = io::read_le<std::int32_t>(in);
  d.window = io::read_le<std::int32_t>(in);
  d.lstm_hidden = io::read_le<std::int32_t>(in);
  d.lstm_layers = io::read_le<std::int32_t>(in);
  d.heads = io::read_le<std::int32_t>(in);
  d.head_width = io::read_le<std::int32_t>(in);
  d.embed = io::read_le<std::int32_t>(in);
  d.classes = io::read_le<std::int32_t>(in);
  d.transform_lstm = io::read_le<std::int32_t>(in) != 0;
  const auto seed = io::read_le<std::uint64_t>(in);
  LoadedCheckpoint loaded{build_variant(static_cast<ModelVariant>(variant), d, seed), io::read_string(in)};
  const auto count = io::read_le<std::uint32_t>(in);
  nn::read_tensor_records(in, loaded.model.parameters(), count);
  return loaded;
}

}  // namespace mfgat
