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

#ifndef TCN_METRICS_H_
#define TCN_METRICS_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace tcn {

struct ClassMetrics {
  int label = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  int support = 0;  // occurrences in y_true
};

struct MetricsReport {
  int total = 0;
  double accuracy = 0;
  double f1_weighted = 0;
  double cohens_kappa = 0;
  // Every label seen in y_true or y_pred, ascending.
  std::vector<ClassMetrics> per_class;
};

// Accuracy, support-weighted F1 and Cohen's kappa. When chance agreement is
// 1 (a single label on both sides) kappa is 1 if all predictions agree and 0
// otherwise.
MetricsReport ComputeMetrics(std::span<const int> y_true, std::span<const int> y_pred);

// Element-wise mean of the scalar fields; per-class entries are dropped.
MetricsReport MeanReport(std::span<const MetricsReport> reports);

struct Split {
  std::vector<int> train;
  std::vector<int> valid;
  std::vector<int> test;
};

// Random partition of table ids 0..num_tables-1. Valid and test sizes are
// the rounded ratios; train takes the rest. Each part must be non-empty.
Split SplitDataset(int num_tables, std::array<double, 3> ratios, uint64_t seed);

}  // namespace tcn

#endif  // TCN_METRICS_H_
