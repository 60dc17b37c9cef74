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

#ifndef TCN_TRAINING_H_
#define TCN_TRAINING_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tcn/context_index.h"
#include "tcn/corpus.h"
#include "tcn/metrics.h"
#include "tcn/model.h"
#include "tcn/param_store.h"

namespace tcn {

struct TrainConfig {
  double gamma = 0.5;
  int batch_size = 8;
  int epochs = 30;
  uint64_t seed = 0;
  double mask_rate = 0.10;
  // Pre-training only recovers values seen in at least this many cells.
  int vocab_min_count = 2;
  int budget = 20;
  // Stop after this many epochs without a better validation F1; 0 disables.
  int patience = 5;
  AdamOptions adam;

  void Validate() const;
};

// Class index per distinct normalized non-empty cell value, sorted.
class CellVocab {
 public:
  CellVocab() = default;
  explicit CellVocab(std::vector<std::string> values);
  // Values of the data cells (row >= 1) of `tables`, all tables if empty,
  // that occur in at least `min_count` cells.
  static CellVocab Build(const LabeledDataset& ds, std::span<const int> tables = {},
                         int min_count = 1);

  size_t size() const { return values_.size(); }
  const std::vector<std::string>& values() const { return values_; }
  std::optional<int> Find(const std::string& value) const;

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, int> ids_;
};

// J = sum over batch tables of gamma * J^C + (1 - gamma) * J^R.
Var MultitaskLoss(TcnModel& model, Tape& tape, const ForwardResult& fwd,
                  const LabeledDataset& ds, double gamma);

struct MaskTarget {
  CellRef cell;
  std::string value;  // normalized value before masking
};

struct MaskedCorpus {
  LabeledDataset dataset;
  std::vector<MaskTarget> targets;  // in (table, row, col) order
};

// Masks floor(rate * n) of the n non-empty data cells (at least one).
// Headers, topics and empty cells are never masked.
MaskedCorpus MaskCells(const LabeledDataset& ds, double rate, uint64_t seed);

struct PretrainLossResult {
  Var loss;
  int masked = 0;   // targets that entered the loss
  int skipped = 0;  // targets whose value is not in the vocabulary
};

// Cross-entropy of M_v h over the vocabulary, summed over the masked cells
// of the batch tables.
PretrainLossResult PretrainLoss(TcnModel& model, Tape& tape, const ForwardResult& fwd,
                                const LabeledDataset& ds,
                                std::span<const MaskTarget> targets, const CellVocab& vocab);

struct ColumnPrediction {
  int table = 0;
  int column = 0;
  int type = 0;
  std::vector<double> type_probs;
  int relation = -1;  // -1 for the subject column
  std::vector<double> relation_probs;
};

// Predictions for every column of `tables`, with neighbor samples drawn from
// a fixed seed so repeated calls agree.
std::vector<ColumnPrediction> PredictTables(TcnModel& model, const LabeledDataset& ds,
                                            const ContextIndex* index,
                                            std::span<const int> tables, int batch_size,
                                            uint64_t seed);

struct EvalResult {
  MetricsReport type;
  MetricsReport relation;
  double mean_f1() const { return 0.5 * (type.f1_weighted + relation.f1_weighted); }
};

EvalResult Evaluate(TcnModel& model, const LabeledDataset& ds, const ContextIndex* index,
                    std::span<const int> tables, int batch_size, uint64_t seed);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  std::optional<EvalResult> valid;
};

struct TrainResult {
  TcnModel model;  // best-validation parameters
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

// Supervised multi-task training on `split.train`, model selection on
// `split.valid`. When `init` is given, every parameter except the task heads
// starts from it.
TrainResult Train(const LabeledDataset& ds, const ContextIndex* index, const Split& split,
                  const ModelConfig& model_config, const EmbeddingTable& embeddings,
                  const TrainConfig& config, const TcnModel* init = nullptr);

struct PretrainResult {
  TcnModel model;
  CellVocab vocab;
  std::vector<double> losses;  // mean loss per masked cell, per epoch
  int skipped = 0;
};

// Masked cell recovery over all tables of `ds`. The masked corpus gets its
// own context index, so masked cells have no value neighbors.
PretrainResult Pretrain(const LabeledDataset& ds, const IndexOptions& index_options,
                        const ModelConfig& model_config, const EmbeddingTable& embeddings,
                        const TrainConfig& config);

// One CSV row per epoch.
void WriteEpochLog(std::ostream& out, std::span<const EpochLog> log);
void WritePretrainLog(std::ostream& out, std::span<const double> losses);

}  // namespace tcn

#endif  // TCN_TRAINING_H_
