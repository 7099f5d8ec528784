#pragma once

#include "mfgat/layers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace mfgat {

enum class ModelVariant { SdfeOnly, Stdfe, MfGat };

std::string_view to_string(ModelVariant v);
ModelVariant parse_variant(std::string_view name);  // "sdfe" | "stdfe" | "mfgat"

struct ModelDims {
  int nodes = 9;
  int window = 200;  // LSTM sequence length, one scalar per step
  int lstm_hidden = 128;
  int lstm_layers = 1;
  int heads = 8;
  int head_width = 16;
  int embed = 64;  // per-branch node embedding width after the branch GAT
  int classes = 3;
  bool transform_lstm = true;  // false feeds the spectrum straight into the MHGAT

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Throws ShapeError naming the first inconsistent dimension.
void validate(const ModelDims& dims);

// Feature extractor shared by both domains: LSTM -> MHGAT -> GAT.
struct Branch {
  std::vector<LstmParams> lstm;  // empty when the branch skips the recurrence
  GatParams mhgat;
  GatParams gat;

  nn::ParameterList tensors();
};

struct MfGatModel {
  ModelVariant variant = ModelVariant::MfGat;
  ModelDims dims;
  std::uint64_t seed = 0;

  Branch source;
  std::optional<Branch> transform;   // absent for SdfeOnly
  std::optional<FuseParams> fuse;    // MfGat only
  std::optional<GatParams> distill;  // GAT after fusion (MfGat) or concatenation (Stdfe)
  Tensor classifier_w;               // [nodes*width x classes]
  Tensor classifier_b;               // [1 x classes]

  // Pointers into this object; recompute after copying the model.
  nn::ParameterList parameters();
  std::size_t parameter_count() const;
};

/// Constructs exactly the modules `variant` needs. Each module draws its
/// initial weights from its own stream of `seed`, so shared modules start
/// identical across variants.
MfGatModel build_variant(ModelVariant variant, const ModelDims& dims, std::uint64_t seed);

// `features` stacks graphs row-wise: [graphs*nodes x window].
Var sdfe_forward(Tape& tape, const Matrix& features, MfGatModel& model, const Adjacency& adjacency,
                 const DropoutContext& dropout = {});
Var tdfe_forward(Tape& tape, const Matrix& features, MfGatModel& model, const Adjacency& adjacency,
                 const DropoutContext& dropout = {});

// Node embeddings concatenated per graph: [graphs*nodes x w] -> [graphs x nodes*w].
Var readout(Var node_embeddings, int nodes);

/// Logits [graphs x classes] for the model's variant.
Var forward_logits(Tape& tape, const Matrix& features, MfGatModel& model, const Adjacency& adjacency,
                   const DropoutContext& dropout = {});

/// Class probabilities [graphs x classes] in inference mode.
Matrix forward(const Matrix& features, MfGatModel& model, const Adjacency& adjacency);

// Checkpoint container: magic "MFGATCK\0", u32 version, u32 variant, nine
// i32 dims fields, u64 seed, config hash string, u32 tensor count, tensor records.
void save_checkpoint(const std::filesystem::path& path, MfGatModel& model, const std::string& config_hash);

struct LoadedCheckpoint {
  MfGatModel model;
  std::string config_hash;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mfgat
