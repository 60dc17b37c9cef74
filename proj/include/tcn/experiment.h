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

#ifndef TCN_EXPERIMENT_H_
#define TCN_EXPERIMENT_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tcn/context_index.h"
#include "tcn/corpus.h"
#include "tcn/embedding.h"
#include "tcn/model.h"
#include "tcn/training.h"

namespace tcn {

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  int runs = 5;
  // Runs are independent and may execute concurrently; results do not
  // depend on the thread count.
  int threads = 1;
  std::array<double, 3> ratios = {0.8, 0.1, 0.1};
};

// Split seed used for a training run seeded with `train_seed`.
uint64_t SplitSeed(uint64_t train_seed);

struct RunResult {
  uint64_t split_seed = 0;
  int best_epoch = 0;
  EvalResult valid;  // at the best epoch
  EvalResult test;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  EvalResult mean_valid;
  EvalResult mean_test;
};

// Trains `config.runs` models, each on its own split and seed derived from
// config.train.seed, and averages their metrics.
ExperimentResult RunExperiment(const LabeledDataset& ds, const ContextIndex* index,
                               const EmbeddingTable& embeddings,
                               const ExperimentConfig& config,
                               const TcnModel* init = nullptr);

struct SweepPoint {
  int budget = 0;
  double gamma = 0;
  ExperimentResult result;
};

inline const std::vector<int> kSweepBudgets = {2, 5, 10, 20, 50, 100};
inline const std::vector<double> kSweepGammas = {0.01, 0.1, 0.2, 0.5, 0.9, 0.99};

// Varies one hyper-parameter at a time around the configured defaults: every
// budget at the configured gamma, then every gamma at the configured budget.
std::vector<SweepPoint> Sweep(const LabeledDataset& ds, const IndexOptions& index_options,
                              const EmbeddingTable& embeddings, const ExperimentConfig& config,
                              const std::vector<int>& budgets = kSweepBudgets,
                              const std::vector<double>& gammas = kSweepGammas);

void WriteExperimentCsv(std::ostream& out, const ExperimentResult& result);
void WriteSweepCsv(std::ostream& out, const std::vector<SweepPoint>& points);
// Human-readable summary table.
void PrintReport(std::ostream& out, const ExperimentResult& result);

}  // namespace tcn

#endif  // TCN_EXPERIMENT_H_
