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

#include "tcn/experiment.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "tcn/errors.h"
#include "tcn/hashing.h"

namespace tcn {
namespace {

EvalResult MeanEval(const std::vector<RunResult>& runs, bool test) {
  std::vector<MetricsReport> type, rel;
  for (const RunResult& r : runs) {
    const EvalResult& e = test ? r.test : r.valid;
    type.push_back(e.type);
    rel.push_back(e.relation);
  }
  return {MeanReport(type), MeanReport(rel)};
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

uint64_t SplitSeed(uint64_t train_seed) { return DeriveSeed(train_seed, {0x5b117}); }

ExperimentResult RunExperiment(const LabeledDataset& ds, const ContextIndex* index,
                               const EmbeddingTable& embeddings,
                               const ExperimentConfig& config, const TcnModel* init) {
  if (config.runs < 1) throw DataError("at least one run is required");
  config.train.Validate();
  ExperimentResult result;
  result.runs.resize(config.runs);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (int r = next++; r < config.runs; r = next++) {
      try {
        TrainConfig tc = config.train;
        tc.seed = DeriveSeed(config.train.seed, {uint64_t(r)});
        RunResult& out = result.runs[r];
        out.split_seed = SplitSeed(tc.seed);
        Split split = SplitDataset(ds.size(), config.ratios, out.split_seed);
        TrainResult trained = Train(ds, index, split, config.model, embeddings, tc, init);
        out.best_epoch = trained.best_epoch;
        for (const EpochLog& e : trained.log) {
          if (e.epoch == trained.best_epoch && e.valid) out.valid = *e.valid;
        }
        out.test = Evaluate(trained.model, ds, index, split.test, tc.batch_size, tc.seed);
        spdlog::info("run {} ({}) test f1 type {:.4f} rel {:.4f}", r,
                     VariantName(config.model.variant), out.test.type.f1_weighted,
                     out.test.relation.f1_weighted);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = config.runs;
      }
    }
  };
  const int threads = std::clamp(config.threads, 1, config.runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  result.mean_valid = MeanEval(result.runs, false);
  result.mean_test = MeanEval(result.runs, true);
  return result;
}

std::vector<SweepPoint> Sweep(const LabeledDataset& ds, const IndexOptions& index_options,
                              const EmbeddingTable& embeddings, const ExperimentConfig& config,
                              const std::vector<int>& budgets,
                              const std::vector<double>& gammas) {
  std::vector<SweepPoint> points;
  auto run = [&](int budget, double gamma) {
    IndexOptions opts = index_options;
    opts.budget = budget;
    ContextIndex index = ContextIndex::Build(ds, opts);
    ExperimentConfig c = config;
    c.train.budget = budget;
    c.train.gamma = gamma;
    spdlog::info("sweep point budget {} gamma {}", budget, gamma);
    points.push_back({budget, gamma, RunExperiment(ds, &index, embeddings, c)});
  };
  for (int b : budgets) run(b, config.train.gamma);
  for (double g : gammas) run(index_options.budget, g);
  return points;
}

void WriteExperimentCsv(std::ostream& out, const ExperimentResult& result) {
  out << "run,split,acc_type,f1_type,kappa_type,acc_rel,f1_rel,kappa_rel\n";
  auto row = [&](const std::string& run, const char* split, const EvalResult& e) {
    out << run << ',' << split;
    for (const MetricsReport* r : {&e.type, &e.relation}) {
      out << ',' << Num(r->accuracy) << ',' << Num(r->f1_weighted) << ','
          << Num(r->cohens_kappa);
    }
    out << '\n';
  };
  for (size_t i = 0; i < result.runs.size(); ++i) {
    row(std::to_string(i), "valid", result.runs[i].valid);
    row(std::to_string(i), "test", result.runs[i].test);
  }
  row("mean", "valid", result.mean_valid);
  row("mean", "test", result.mean_test);
}

void WriteSweepCsv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "budget,gamma,f1_type,f1_rel,acc_type,acc_rel\n";
  for (const SweepPoint& p : points) {
    const EvalResult& e = p.result.mean_test;
    out << p.budget << ',' << Num(p.gamma) << ',' << Num(e.type.f1_weighted) << ','
        << Num(e.relation.f1_weighted) << ',' << Num(e.type.accuracy) << ','
        << Num(e.relation.accuracy) << '\n';
  }
}

void PrintReport(std::ostream& out, const ExperimentResult& result) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s\n", "task", "acc", "f1_w", "kappa");
  out << line;
  auto print = [&](const char* name, const MetricsReport& r) {
    std::snprintf(line, sizeof(line), "%-10s %8.4f %8.4f %8.4f\n", name, r.accuracy,
                  r.f1_weighted, r.cohens_kappa);
    out << line;
  };
  print("type", result.mean_test.type);
  print("relation", result.mean_test.relation);
}

}  // namespace tcn
