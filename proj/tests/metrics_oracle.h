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

#ifndef TCN_TESTS_METRICS_ORACLE_H_
#define TCN_TESTS_METRICS_ORACLE_H_

#include <algorithm>
#include <set>
#include <vector>

#include "tcn/metrics.h"

namespace tcn::testing {

// Explicit confusion-matrix construction.
inline MetricsReport BruteForce(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  std::set<int> labels(y_true.begin(), y_true.end());
  labels.insert(y_pred.begin(), y_pred.end());
  std::vector<int> ids(labels.begin(), labels.end());
  const size_t c = ids.size();
  std::vector<std::vector<double>> conf(c, std::vector<double>(c, 0));
  auto pos = [&](int label) {
    return std::lower_bound(ids.begin(), ids.end(), label) - ids.begin();
  };
  for (size_t i = 0; i < y_true.size(); ++i) conf[pos(y_true[i])][pos(y_pred[i])] += 1;
  const double n = static_cast<double>(y_true.size());
  MetricsReport r;
  r.total = static_cast<int>(y_true.size());
  double trace = 0, pe = 0, f1w = 0;
  for (size_t a = 0; a < c; ++a) {
    double row = 0, col = 0;
    for (size_t b = 0; b < c; ++b) {
      row += conf[a][b];
      col += conf[b][a];
    }
    trace += conf[a][a];
    pe += (row / n) * (col / n);
    ClassMetrics m;
    m.label = ids[a];
    m.support = static_cast<int>(row);
    m.precision = col > 0 ? conf[a][a] / col : 0;
    m.recall = row > 0 ? conf[a][a] / row : 0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0;
    f1w += m.f1 * row;
    r.per_class.push_back(m);
  }
  r.accuracy = trace / n;
  r.f1_weighted = f1w / n;
  const double po = r.accuracy;
  r.cohens_kappa = pe >= 1.0 ? (po >= 1.0 ? 1.0 : 0.0) : (po - pe) / (1 - pe);
  return r;
}

}  // namespace tcn::testing

#endif  // TCN_TESTS_METRICS_ORACLE_H_
