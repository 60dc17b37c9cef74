// Copyright 2026 The TCN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TCN_MODEL_H_
#define TCN_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcn/autodiff.h"
#include "tcn/context_index.h"
#include "tcn/corpus.h"
#include "tcn/embedding.h"
#include "tcn/param_store.h"

namespace tcn {

struct ModelDims {
  size_t cell = 300;     // D_d, initial cell embedding
  size_t column = 300;   // D_c
  size_t row = 300;      // D_r
  size_t intra = 300;    // D_a
  size_t inter = 300;    // D_b
  size_t topic = 300;    // D_p
  size_t hidden = 300;   // D_h

  // Every dimension set to `d`.
  static ModelDims Uniform(size_t d);
  bool operator==(const ModelDims&) const = default;
};

// Which inter-table aggregators run. kIntra disables all three.
enum class Variant { kFull, kIntra, kValue, kPosition, kTopic };

const char* VariantName(Variant v);  // "full", "intra", "nv", "ns", "np"
std::optional<Variant> ParseVariant(std::string_view name);
bool VariantUses(Variant v, NeighborKind kind);

struct ModelConfig {
  ModelDims dims;
  int views = 2;
  Variant variant = Variant::kFull;
  // One (W_s, W_b) pair for all three neighbor kinds instead of one per kind.
  bool share_inter_weights = false;
  bool train_embeddings = true;
  // Output heads; a zero count leaves the head out.
  int num_types = 0;
  int num_relations = 0;
  int num_values = 0;

  bool operator==(const ModelConfig&) const = default;
};

// Per-batch activations. Batch cells are laid out table by table, row-major
// within a table; columns likewise.
struct ForwardResult {
  std::vector<int> tables;
  std::vector<int> cell_offset;    // first batch-cell row per table
  std::vector<int> column_offset;  // first column row per table

  Var e;        // [cells x D_d]
  Var e_c;      // [cells x D_c]
  Var e_r;      // [cells x D_r]
  Var e_a;      // [cells x D_a]
  Var e_v;      // [cells x D_b]
  Var e_s;      // [cells x D_b]
  Var h;        // [cells x D_h]
  Var topic;    // [tables x D_p], fused topic embedding
  Var columns;  // [columns x D_h]

  // Number of sampled neighbors per kind, summed over the batch.
  size_t sampled[kNumNeighborKinds] = {0, 0, 0};

  int CellRow(size_t slot, int m, int n, int num_cols) const {
    return cell_offset[slot] + m * num_cols + n;
  }
};

class TcnModel {
 public:
  TcnModel() = default;
  // Fresh parameters (Xavier-uniform) seeded from `seed`; the embedding
  // matrix starts from `embeddings`.
  TcnModel(const ModelConfig& config, const EmbeddingTable& embeddings, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const EmbeddingTable& vocabulary() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Runs the network over the tables `batch` of `ds`. `index` may be null,
  // which leaves every inter-table context empty. Neighbor samples are drawn
  // from `sample_seed`.
  ForwardResult Forward(Tape& tape, const LabeledDataset& ds, const ContextIndex* index,
                        std::span<const int> batch, uint64_t sample_seed);

  Var TypeLogits(Tape& tape, const ForwardResult& fwd);      // [columns x |C|]
  Var RelationLogits(Tape& tape, const ForwardResult& fwd);  // [object columns x |R|]
  Var ValueLogits(Tape& tape, const ForwardResult& fwd, std::vector<int> cell_rows);

  // Copies every parameter except the output heads from `other`, which must
  // share the token vocabulary and the body dimensions.
  void InitBodyFrom(const TcnModel& other);

  // Re-attaches a parameter store and vocabulary loaded from disk.
  static TcnModel Restore(const ModelConfig& config, std::vector<std::string> tokens,
                          ParamStore params);

 private:
  std::string InterName(NeighborKind kind, const char* what) const;

  ModelConfig config_;
  EmbeddingTable vocab_;
  ParamStore params_;
};

// Metadata stored next to the parameters in a model file.
struct ModelMeta {
  int budget = 20;
  double gamma = 0.5;
  uint64_t seed = 0;
  Ontology ontology;
  std::vector<std::string> cell_vocab;  // pre-training targets
};

void SaveModel(const std::filesystem::path& path, const TcnModel& model,
               const ModelMeta& meta);
struct LoadedModel {
  TcnModel model;
  ModelMeta meta;
};
LoadedModel LoadModel(const std::filesystem::path& path);

// Single-target building blocks, used by the batch forward's tests and for
// inspection.

// Ω = rowwise-softmax(W_s Eᵀ), output = mean over views of Ω E W_b.
// `contexts` must have at least one row.
Var MultiviewAggregate(const Var& contexts, const Var& w_s, const Var& w_b);
// h = ReLU(W_h (e ∥ e_a ∥ e_v ∥ e_s)); every part must be present.
Var FuseCell(const Var& w_h, const Var& e, const Var& e_a, const Var& e_v, const Var& e_s);
// Index of the largest value; ties go to the lowest index.
int Argmax(std::span<const double> values);

}  // namespace tcn

#endif  // TCN_MODEL_H_
