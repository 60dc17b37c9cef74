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

#include "tcn/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "tcn/errors.h"
#include "tcn/hashing.h"
#include "tcn/ops.h"

namespace tcn {
namespace {

// Stream tags for DeriveSeed.
enum SeedTag : uint64_t { kInit = 1, kShuffle, kSample, kEval, kMask };

std::string Where(int table, int col) {
  return "table " + std::to_string(table) + " column " + std::to_string(col);
}

void Shuffle(std::vector<int>& v, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

void CheckFinite(double loss, const std::string& what) {
  if (!std::isfinite(loss)) throw NumericError(what + ": loss is not finite");
}

std::vector<double> RowSoftmax(const Tensor& logits, size_t r) {
  const size_t c = logits.cols();
  std::vector<double> p(logits.data() + r * c, logits.data() + (r + 1) * c);
  SoftmaxInPlace(p);
  return p;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DataError("gamma must lie in [0, 1]");
  if (batch_size < 1) throw DataError("batch size must be at least 1");
  if (epochs < 0) throw DataError("epochs must be non-negative");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) throw DataError("mask rate must lie in (0, 1)");
  if (vocab_min_count < 1) throw DataError("vocabulary minimum count must be at least 1");
  if (budget < 1) throw DataError("budget must be at least 1");
  if (patience < 0) throw DataError("patience must be non-negative");
  if (!(adam.lr > 0.0)) throw DataError("learning rate must be positive");
}

CellVocab::CellVocab(std::vector<std::string> values) : values_(std::move(values)) {
  for (size_t i = 0; i < values_.size(); ++i) {
    if (!ids_.emplace(values_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate cell vocabulary entry '" + values_[i] + "'");
    }
  }
}

CellVocab CellVocab::Build(const LabeledDataset& ds, std::span<const int> tables,
                           int min_count) {
  std::map<std::string, int> counts;
  auto add = [&](const Table& t) {
    for (int m = 1; m < t.num_rows(); ++m) {
      for (const Cell& c : t.rows[m]) {
        if (c.indexable()) counts[c.normalized]++;
      }
    }
  };
  if (tables.empty()) {
    for (const Table& t : ds.tables) add(t);
  } else {
    for (int k : tables) add(ds.tables.at(k));
  }
  std::vector<std::string> values;
  for (const auto& [value, count] : counts) {
    if (count >= min_count) values.push_back(value);
  }
  return CellVocab(std::move(values));
}

std::optional<int> CellVocab::Find(const std::string& value) const {
  auto it = ids_.find(value);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Var MultitaskLoss(TcnModel& model, Tape& tape, const ForwardResult& fwd,
                  const LabeledDataset& ds, double gamma) {
  std::vector<int> types, relations;
  for (int k : fwd.tables) {
    const Table& t = ds.tables[k];
    for (int n = 0; n < t.num_cols(); ++n) {
      if (!t.column_types[n]) throw DataError(Where(k, n) + ": missing type label");
      types.push_back(*t.column_types[n]);
      if (n == 0) continue;
      if (!t.column_relations[n]) throw DataError(Where(k, n) + ": missing relation label");
      relations.push_back(*t.column_relations[n]);
    }
  }
  Var type_loss = CrossEntropyRows(model.TypeLogits(tape, fwd), types);
  Var rel_loss = CrossEntropyRows(model.RelationLogits(tape, fwd), relations);
  return Add(Scale(type_loss, gamma), Scale(rel_loss, 1.0 - gamma));
}

MaskedCorpus MaskCells(const LabeledDataset& ds, double rate, uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0)) throw DataError("mask rate must lie in (0, 1)");
  std::vector<CellRef> eligible;
  for (const Table& t : ds.tables) {
    for (int m = 1; m < t.num_rows(); ++m) {
      for (int n = 0; n < t.num_cols(); ++n) {
        if (t.cell(m, n).indexable()) eligible.push_back({t.id, m, n});
      }
    }
  }
  MaskedCorpus out;
  out.dataset = ds;
  if (eligible.empty()) return out;
  size_t count = static_cast<size_t>(std::floor(rate * static_cast<double>(eligible.size())));
  count = std::max<size_t>(count, 1);
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<size_t> pick(i, eligible.size() - 1);
    std::swap(eligible[i], eligible[pick(rng)]);
  }
  eligible.resize(count);
  std::sort(eligible.begin(), eligible.end());
  for (const CellRef& r : eligible) {
    Cell& c = out.dataset.tables[r.table].rows[r.row][r.col];
    out.targets.push_back({r, c.normalized});
    c = MaskedCell();
  }
  return out;
}

PretrainLossResult PretrainLoss(TcnModel& model, Tape& tape, const ForwardResult& fwd,
                                const LabeledDataset& ds,
                                std::span<const MaskTarget> targets, const CellVocab& vocab) {
  std::map<int, size_t> slot;
  for (size_t b = 0; b < fwd.tables.size(); ++b) slot[fwd.tables[b]] = b;
  PretrainLossResult out;
  std::vector<int> rows, classes;
  for (const MaskTarget& t : targets) {
    auto it = slot.find(t.cell.table);
    if (it == slot.end()) continue;
    auto cls = vocab.Find(t.value);
    if (!cls) {
      out.skipped++;
      continue;
    }
    const int cols = ds.tables[t.cell.table].num_cols();
    rows.push_back(fwd.CellRow(it->second, t.cell.row, t.cell.col, cols));
    classes.push_back(*cls);
  }
  out.masked = static_cast<int>(rows.size());
  if (rows.empty()) {
    out.loss = tape.Constant(Tensor::Scalar(0.0));
  } else {
    out.loss = CrossEntropyRows(model.ValueLogits(tape, fwd, std::move(rows)), classes);
  }
  return out;
}

std::vector<ColumnPrediction> PredictTables(TcnModel& model, const LabeledDataset& ds,
                                            const ContextIndex* index,
                                            std::span<const int> tables, int batch_size,
                                            uint64_t seed) {
  if (batch_size < 1) throw DataError("batch size must be at least 1");
  std::vector<ColumnPrediction> out;
  for (size_t start = 0; start < tables.size(); start += batch_size) {
    auto batch = tables.subspan(start, std::min<size_t>(batch_size, tables.size() - start));
    Tape tape;
    ForwardResult fwd = model.Forward(tape, ds, index, batch, DeriveSeed(seed, {kEval}));
    const Tensor type_logits = model.TypeLogits(tape, fwd).value();
    const Tensor rel_logits = model.RelationLogits(tape, fwd).value();
    size_t col_row = 0, rel_row = 0;
    for (int k : batch) {
      for (int n = 0; n < ds.tables[k].num_cols(); ++n) {
        ColumnPrediction p;
        p.table = k;
        p.column = n;
        p.type_probs = RowSoftmax(type_logits, col_row++);
        p.type = Argmax(p.type_probs);
        if (n > 0) {
          p.relation_probs = RowSoftmax(rel_logits, rel_row++);
          p.relation = Argmax(p.relation_probs);
        }
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

EvalResult Evaluate(TcnModel& model, const LabeledDataset& ds, const ContextIndex* index,
                    std::span<const int> tables, int batch_size, uint64_t seed) {
  std::vector<int> type_true, type_pred, rel_true, rel_pred;
  for (const ColumnPrediction& p : PredictTables(model, ds, index, tables, batch_size, seed)) {
    const Table& t = ds.tables[p.table];
    if (auto y = t.column_types[p.column]) {
      type_true.push_back(*y);
      type_pred.push_back(p.type);
    }
    if (p.column > 0) {
      if (auto y = t.column_relations[p.column]) {
        rel_true.push_back(*y);
        rel_pred.push_back(p.relation);
      }
    }
  }
  if (type_true.empty() || rel_true.empty()) {
    throw DataError("evaluation tables carry no type or relation labels");
  }
  return {ComputeMetrics(type_true, type_pred), ComputeMetrics(rel_true, rel_pred)};
}

TrainResult Train(const LabeledDataset& ds, const ContextIndex* index, const Split& split,
                  const ModelConfig& model_config, const EmbeddingTable& embeddings,
                  const TrainConfig& config, const TcnModel* init) {
  config.Validate();
  if (split.train.empty()) throw DataError("no training tables");
  for (int k : split.train) {
    if (!ds.tables.at(k).fully_labeled()) {
      throw DataError("table " + std::to_string(k) + ": training table is not fully labeled");
    }
  }
  ModelConfig mc = model_config;
  mc.num_types = static_cast<int>(ds.ontology.types.size());
  mc.num_relations = static_cast<int>(ds.ontology.relations.size());
  mc.num_values = 0;
  if (mc.num_types == 0 || mc.num_relations == 0) {
    throw DataError("ontology needs at least one type and one relation");
  }
  TrainResult result;
  TcnModel model(mc, embeddings, DeriveSeed(config.seed, {kInit}));
  if (init != nullptr) model.InitBodyFrom(*init);
  result.model = model;

  double best = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<int> order = split.train;
    Shuffle(order, DeriveSeed(config.seed, {kShuffle, uint64_t(epoch)}));
    double total = 0;
    for (size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      std::span<const int> batch(order.data() + start,
                                 std::min<size_t>(config.batch_size, order.size() - start));
      Tape tape;
      ForwardResult fwd = model.Forward(
          tape, ds, index, batch, DeriveSeed(config.seed, {kSample, uint64_t(epoch), b}));
      Var loss = MultitaskLoss(model, tape, fwd, ds, config.gamma);
      CheckFinite(loss.value().item(), "epoch " + std::to_string(epoch));
      total += loss.value().item();
      tape.Backward(loss);
      AdamStep(model.params(), config.adam);
    }
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = total / static_cast<double>(order.size());
    if (!split.valid.empty()) {
      row.valid = Evaluate(model, ds, index, split.valid, config.batch_size, config.seed);
    }
    result.log.push_back(row);
    spdlog::info("epoch {} loss {:.6f}{}", epoch, row.train_loss,
                 row.valid ? fmt::format(" val_f1 type {:.4f} rel {:.4f}",
                                         row.valid->type.f1_weighted,
                                         row.valid->relation.f1_weighted)
                           : std::string());
    if (!row.valid) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    if (row.valid->mean_f1() > best) {
      best = row.valid->mean_f1();
      result.model = model;
      result.best_epoch = epoch;
    } else if (config.patience > 0 && epoch - result.best_epoch >= config.patience) {
      spdlog::info("early stop after epoch {}, best epoch {}", epoch, result.best_epoch);
      break;
    }
  }
  return result;
}

PretrainResult Pretrain(const LabeledDataset& ds, const IndexOptions& index_options,
                        const ModelConfig& model_config, const EmbeddingTable& embeddings,
                        const TrainConfig& config) {
  config.Validate();
  PretrainResult result;
  result.vocab = CellVocab::Build(ds, {}, config.vocab_min_count);
  ModelConfig mc = model_config;
  mc.num_types = 0;
  mc.num_relations = 0;
  mc.num_values = static_cast<int>(result.vocab.size());
  if (mc.num_values == 0) throw DataError("corpus has no non-empty data cells");
  TcnModel model(mc, embeddings, DeriveSeed(config.seed, {kInit}));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // A fresh mask set per epoch keeps the recovery task from being
    // memorized; the index is rebuilt so masked values stay unreachable.
    MaskedCorpus masked =
        MaskCells(ds, config.mask_rate, DeriveSeed(config.seed, {kMask, uint64_t(epoch)}));
    ContextIndex index = ContextIndex::Build(masked.dataset, index_options);
    std::vector<int> order;
    for (const MaskTarget& t : masked.targets) {
      if (order.empty() || order.back() != t.cell.table) order.push_back(t.cell.table);
    }
    Shuffle(order, DeriveSeed(config.seed, {kShuffle, uint64_t(epoch)}));
    double total = 0;
    int count = 0, skipped = 0;
    for (size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      std::vector<int> batch(order.begin() + start,
                             order.begin() + std::min(order.size(), start + config.batch_size));
      Tape tape;
      ForwardResult fwd = model.Forward(tape, masked.dataset, &index, batch,
                                        DeriveSeed(config.seed, {kSample, uint64_t(epoch), b}));
      PretrainLossResult loss =
          PretrainLoss(model, tape, fwd, masked.dataset, masked.targets, result.vocab);
      skipped += loss.skipped;
      if (loss.masked == 0) continue;
      CheckFinite(loss.loss.value().item(), "pre-training epoch " + std::to_string(epoch));
      total += loss.loss.value().item();
      count += loss.masked;
      tape.Backward(loss.loss);
      AdamStep(model.params(), config.adam);
    }
    result.losses.push_back(count > 0 ? total / count : 0.0);
    result.skipped = skipped;
    spdlog::info("pretrain epoch {} loss {:.6f}", epoch, result.losses.back());
  }
  result.model = std::move(model);
  return result;
}

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void WriteEpochLog(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,train_loss,val_acc_type,val_f1_type,val_kappa_type,val_acc_rel,val_f1_rel,"
         "val_kappa_rel\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << Num(e.train_loss);
    if (e.valid) {
      for (const MetricsReport* r : {&e.valid->type, &e.valid->relation}) {
        out << ',' << Num(r->accuracy) << ',' << Num(r->f1_weighted) << ','
            << Num(r->cohens_kappa);
      }
    } else {
      out << ",,,,,,";
    }
    out << '\n';
  }
}

void WritePretrainLog(std::ostream& out, std::span<const double> losses) {
  out << "epoch,train_loss\n";
  for (size_t i = 0; i < losses.size(); ++i) out << i + 1 << ',' << Num(losses[i]) << '\n';
}

}  // namespace tcn
