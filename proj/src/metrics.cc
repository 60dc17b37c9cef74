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

#include "tcn/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "tcn/errors.h"

namespace tcn {

MetricsReport ComputeMetrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("metrics: " + std::to_string(y_true.size()) + " labels but " +
                    std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) throw DataError("metrics: no labels");
  struct Counts {
    int tp = 0, true_count = 0, pred_count = 0;
  };
  std::map<int, Counts> counts;
  int correct = 0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    counts[y_true[i]].true_count++;
    counts[y_pred[i]].pred_count++;
    if (y_true[i] == y_pred[i]) {
      counts[y_true[i]].tp++;
      correct++;
    }
  }
  const double n = static_cast<double>(y_true.size());
  MetricsReport r;
  r.total = static_cast<int>(y_true.size());
  r.accuracy = correct / n;
  double chance = 0;
  for (const auto& [label, c] : counts) {
    ClassMetrics m;
    m.label = label;
    m.support = c.true_count;
    m.precision = c.pred_count > 0 ? double(c.tp) / c.pred_count : 0.0;
    m.recall = c.true_count > 0 ? double(c.tp) / c.true_count : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    r.f1_weighted += m.f1 * c.true_count / n;
    chance += (c.true_count / n) * (c.pred_count / n);
    r.per_class.push_back(m);
  }
  if (chance >= 1.0) {
    r.cohens_kappa = correct == r.total ? 1.0 : 0.0;
  } else {
    r.cohens_kappa = (r.accuracy - chance) / (1.0 - chance);
  }
  return r;
}

MetricsReport MeanReport(std::span<const MetricsReport> reports) {
  MetricsReport out;
  if (reports.empty()) return out;
  for (const MetricsReport& r : reports) {
    out.total += r.total;
    out.accuracy += r.accuracy;
    out.f1_weighted += r.f1_weighted;
    out.cohens_kappa += r.cohens_kappa;
  }
  const double n = static_cast<double>(reports.size());
  out.accuracy /= n;
  out.f1_weighted /= n;
  out.cohens_kappa /= n;
  return out;
}

Split SplitDataset(int num_tables, std::array<double, 3> ratios, uint64_t seed) {
  for (double r : ratios) {
    if (!(r >= 0.0)) throw DataError("split ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw DataError("split ratios must sum to 1");
  }
  const int valid = static_cast<int>(std::llround(ratios[1] * num_tables));
  const int test = static_cast<int>(std::llround(ratios[2] * num_tables));
  const int train = num_tables - valid - test;
  if (train < 1 || valid < 1 || test < 1) {
    throw DataError("corpus of " + std::to_string(num_tables) +
                    " tables is too small for a train/valid/test split");
  }
  std::vector<int> ids(num_tables);
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 rng(seed);
  for (int i = num_tables - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(ids[i], ids[pick(rng)]);
  }
  Split s;
  s.train.assign(ids.begin(), ids.begin() + train);
  s.valid.assign(ids.begin() + train, ids.begin() + train + valid);
  s.test.assign(ids.begin() + train + valid, ids.end());
  for (auto* part : {&s.train, &s.valid, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

}  // namespace tcn
