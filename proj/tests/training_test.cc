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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "tcn/context_index.h"
#include "tcn/errors.h"
#include "tcn/metrics.h"
#include "test_util.h"

namespace tcn {
namespace {

using testing::MakeTable;
using testing::ToyOntology;
using testing::TwoTableCorpus;

ModelConfig Config(const LabeledDataset& ds, size_t d) {
  ModelConfig c;
  c.dims = ModelDims::Uniform(d);
  c.num_types = static_cast<int>(ds.ontology.types.size());
  c.num_relations = static_cast<int>(ds.ontology.relations.size());
  return c;
}

void Zero(TcnModel& model, const std::string& name) { model.params().Get(name).value.Fill(0.0); }

double LossAt(TcnModel& model, const LabeledDataset& ds, const ContextIndex* index, double gamma) {
  std::vector<int> batch(ds.size());
  std::iota(batch.begin(), batch.end(), 0);
  Tape tape;
  ForwardResult fwd = model.Forward(tape, ds, index, batch, 1);
  return MultitaskLoss(model, tape, fwd, ds, gamma).value().item();
}

TEST(MultitaskLossTest, UniformLogits) {
  LabeledDataset ds;
  ds.ontology = ToyOntology();
  ds.tables.push_back(MakeTable(0, 0, "t", {{"a", "b"}, {"x", "y"}}, {0, 1}, {std::nullopt, 2}));
  TcnModel model(Config(ds, 4), EmbeddingTable::Random(ds, 4, 1), 1);
  Zero(model, "M_c");
  Zero(model, "M_r");
  EXPECT_NEAR(LossAt(model, ds, nullptr, 0.5), 0.5 * 2 * std::log(4.0) + 0.5 * std::log(3.0),
              1e-12);
  EXPECT_NEAR(LossAt(model, ds, nullptr, 0.5), 1.9356, 5e-5);
}

TEST(MultitaskLossTest, LinearInGamma) {
  LabeledDataset ds = TwoTableCorpus();
  ContextIndex index = ContextIndex::Build(ds, IndexOptions{});
  TcnModel model(Config(ds, 5), EmbeddingTable::Random(ds, 5, 2), 2);
  const double type_only = LossAt(model, ds, &index, 1.0);
  const double rel_only = LossAt(model, ds, &index, 0.0);
  EXPECT_GT(type_only, 0.0);
  EXPECT_GT(rel_only, 0.0);
  for (double g : {0.1, 0.37, 0.5, 0.9}) {
    EXPECT_NEAR(LossAt(model, ds, &index, g), g * type_only + (1 - g) * rel_only, 1e-12);
  }
}

TEST(MultitaskLossTest, TaskHeadsAreIsolated) {
  LabeledDataset ds = TwoTableCorpus();
  ContextIndex index = ContextIndex::Build(ds, IndexOptions{});
  TcnModel model(Config(ds, 5), EmbeddingTable::Random(ds, 5, 2), 2);
  std::vector<int> batch = {0, 1};
  for (double gamma : {0.0, 1.0}) {
    Tape tape;
    ForwardResult fwd = model.Forward(tape, ds, &index, batch, 1);
    tape.Backward(MultitaskLoss(model, tape, fwd, ds, gamma));
    const Parameter& silent = model.params().Get(gamma == 0.0 ? "M_c" : "M_r");
    const Parameter& active = model.params().Get(gamma == 0.0 ? "M_r" : "M_c");
    for (double v : silent.grad.values()) EXPECT_EQ(v, 0.0);
    double norm = 0;
    for (double v : active.grad.values()) norm += v * v;
    EXPECT_GT(norm, 0.0);
    model.params().ZeroGrad();
  }
}

TEST(MultitaskLossTest, MissingLabelNamesTableAndColumn) {
  LabeledDataset ds = TwoTableCorpus();
  ds.tables[1].column_relations[2].reset();
  TcnModel model(Config(ds, 4), EmbeddingTable::Random(ds, 4, 1), 1);
  try {
    LossAt(model, ds, nullptr, 0.5);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("table 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
}

LabeledDataset GridCorpus(int tables, int rows, int cols) {
  LabeledDataset ds;
  for (int k = 0; k < tables; ++k) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header;
    for (int n = 0; n < cols; ++n) header.push_back("h" + std::to_string(n));
    grid.push_back(header);
    for (int m = 0; m < rows; ++m) {
      std::vector<std::string> row;
      for (int n = 0; n < cols; ++n) {
        row.push_back("v" + std::to_string(k) + " " + std::to_string(m) + " " + std::to_string(n));
      }
      grid.push_back(row);
    }
    ds.tables.push_back(MakeTable(k, 0, "topic " + std::to_string(k), grid));
  }
  return ds;
}

TEST(MaskCellsTest, Counts) {
  LabeledDataset ds = GridCorpus(5, 4, 5);  // 100 data cells
  MaskedCorpus m = MaskCells(ds, 0.10, 7);
  EXPECT_EQ(m.targets.size(), 10u);
  EXPECT_EQ(MaskCells(ds, 0.001, 7).targets.size(), 1u);
  EXPECT_THROW(MaskCells(ds, 0.0, 7), DataError);
  EXPECT_THROW(MaskCells(ds, 1.0, 7), DataError);
}

TEST(MaskCellsTest, DeterministicAndSafe) {
  LabeledDataset ds = GridCorpus(5, 4, 5);
  ds.tables[2].rows[3][1] = NormalizeCell("");
  MaskedCorpus a = MaskCells(ds, 0.5, 11);
  MaskedCorpus b = MaskCells(ds, 0.5, 11);
  MaskedCorpus c = MaskCells(ds, 0.5, 12);
  EXPECT_EQ(a.dataset, b.dataset);
  ASSERT_EQ(a.targets.size(), b.targets.size());
  std::set<CellRef> sa, sc;
  for (size_t i = 0; i < a.targets.size(); ++i) {
    EXPECT_EQ(a.targets[i].cell, b.targets[i].cell);
    sa.insert(a.targets[i].cell);
  }
  for (const auto& t : c.targets) sc.insert(t.cell);
  EXPECT_NE(sa, sc);
  EXPECT_EQ(a.targets.size(), 49u);  // floor(0.5 * 99)
  for (const MaskTarget& t : a.targets) {
    EXPECT_GE(t.cell.row, 1);
    EXPECT_FALSE(t.value.empty());
    EXPECT_EQ(t.value, ds.tables[t.cell.table].cell(t.cell.row, t.cell.col).normalized);
    EXPECT_TRUE(a.dataset.tables[t.cell.table].cell(t.cell.row, t.cell.col).masked);
  }
  for (int k = 0; k < ds.size(); ++k) {
    EXPECT_EQ(a.dataset.tables[k].topic, ds.tables[k].topic);
    EXPECT_EQ(a.dataset.tables[k].header(), ds.tables[k].header());
  }
  EXPECT_FALSE(a.dataset.tables[2].cell(3, 1).masked);
}

TEST(MaskCellsTest, MaskedCellsGetNoValueNeighbors) {
  LabeledDataset ds = TwoTableCorpus();
  MaskedCorpus m = MaskCells(ds, 0.9, 3);
  ContextIndex index = ContextIndex::Build(m.dataset, IndexOptions{});
  for (const MaskTarget& t : m.targets) {
    EXPECT_EQ(index.NeighborCount(t.cell, NeighborKind::kValue), 0u);
  }
}

TEST(CellVocabTest, BuildAndMinCount) {
  LabeledDataset ds = TwoTableCorpus();
  CellVocab all = CellVocab::Build(ds);
  EXPECT_TRUE(all.Find("alice").has_value());
  EXPECT_TRUE(all.Find("night train").has_value());
  EXPECT_FALSE(all.Find("song").has_value());  // header
  EXPECT_FALSE(all.Find("red album").has_value());  // topic
  EXPECT_EQ(all.size(), 10u);
  CellVocab repeated = CellVocab::Build(ds, {}, 2);
  EXPECT_EQ(repeated.values(), (std::vector<std::string>{"3:10", "alice"}));
  std::vector<int> first = {0};
  EXPECT_EQ(CellVocab::Build(ds, first).size(), 6u);
  EXPECT_THROW(CellVocab({"a", "a"}), DataError);
}

TEST(PretrainLossTest, UniformLogits) {
  LabeledDataset ds = GridCorpus(2, 5, 5);  // 50 distinct values
  CellVocab vocab = CellVocab::Build(ds);
  ASSERT_EQ(vocab.size(), 50u);
  ModelConfig mc = Config(ds, 4);
  mc.num_types = mc.num_relations = 0;
  mc.num_values = 50;
  TcnModel model(mc, EmbeddingTable::Random(ds, 4, 1), 1);
  Zero(model, "M_v");
  std::vector<MaskTarget> targets = {{{0, 1, 1}, ds.tables[0].cell(1, 1).normalized},
                                     {{1, 2, 3}, ds.tables[1].cell(2, 3).normalized},
                                     {{1, 3, 3}, "never seen"}};
  LabeledDataset masked = ds;
  for (const MaskTarget& t : targets) masked.tables[t.cell.table].rows[t.cell.row][t.cell.col] = MaskedCell();
  std::vector<int> batch = {0, 1};
  Tape tape;
  ForwardResult fwd = model.Forward(tape, masked, nullptr, batch, 1);
  PretrainLossResult r = PretrainLoss(model, tape, fwd, masked, targets, vocab);
  EXPECT_EQ(r.masked, 2);
  EXPECT_EQ(r.skipped, 1);
  EXPECT_NEAR(r.loss.value().item(), 2 * std::log(50.0), 1e-12);
  EXPECT_NEAR(r.loss.value().item(), 7.824, 5e-4);

  std::vector<int> none = {0};
  Tape empty_tape;
  ForwardResult f0 = model.Forward(empty_tape, masked, nullptr, none, 1);
  std::vector<MaskTarget> later = {targets[1]};
  EXPECT_EQ(PretrainLoss(model, empty_tape, f0, masked, later, vocab).loss.value().item(), 0.0);
}

TEST(PretrainLossTest, DecreasesUnderAdam) {
  LabeledDataset ds = GridCorpus(5, 3, 3);
  for (int k = 1; k < 5; ++k) ds.tables[k].rows[1][1] = ds.tables[0].rows[1][1];
  MaskedCorpus m = MaskCells(ds, 0.2, 5);
  ContextIndex index = ContextIndex::Build(m.dataset, IndexOptions{});
  CellVocab vocab = CellVocab::Build(ds);
  ModelConfig mc = Config(ds, 6);
  mc.num_types = mc.num_relations = 0;
  mc.num_values = static_cast<int>(vocab.size());
  TcnModel model(mc, EmbeddingTable::Random(ds, 6, 4), 4);
  std::vector<int> batch = {0, 1, 2, 3, 4};
  double last = 1e300;
  for (int step = 0; step < 20; ++step) {
    Tape tape;
    ForwardResult fwd = model.Forward(tape, m.dataset, &index, batch, 9);
    PretrainLossResult r = PretrainLoss(model, tape, fwd, m.dataset, m.targets, vocab);
    const double loss = r.loss.value().item();
    EXPECT_LT(loss, last) << step;
    last = loss;
    tape.Backward(r.loss);
    AdamStep(model.params(), {.lr = 0.01});
  }
}

// Ten tables of two schemas whose column types are learnable from tokens.
LabeledDataset LearnableCorpus() {
  LabeledDataset ds;
  ds.ontology = ToyOntology();
  for (int k = 0; k < 10; ++k) {
    const std::string s = std::to_string(k);
    if (k % 2 == 0) {
      ds.tables.push_back(MakeTable(k, 0, "album " + s,
                                    {{"song", "artist"},
                                     {"song" + s + "a tune", "person" + s + " smith"},
                                     {"song" + s + "b tune", "person" + s + " jones"}},
                                    {2, 0}, {std::nullopt, 0}));
    } else {
      ds.tables.push_back(MakeTable(k, 1, "record " + s,
                                    {{"track", "length"},
                                     {"track" + s + " tune", "3:" + s + "0 min"},
                                     {"other" + s + " tune", "4:" + s + "5 min"}},
                                    {2, 3}, {std::nullopt, 1}));
    }
  }
  return ds;
}

TEST(TrainTest, LossHalvesOverThirtyEpochs) {
  LabeledDataset ds = LearnableCorpus();
  ContextIndex index = ContextIndex::Build(ds, IndexOptions{});
  Split split;
  split.train = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 4;
  tc.adam.lr = 0.01;
  TrainResult r = Train(ds, &index, split, Config(ds, 8), EmbeddingTable::Random(ds, 8, 1), tc);
  ASSERT_EQ(r.log.size(), 30u);
  EXPECT_LE(r.log.back().train_loss, 0.5 * r.log.front().train_loss);
  EXPECT_EQ(r.best_epoch, 30);
}

TEST(TrainTest, DeterministicLossCurves) {
  LabeledDataset ds = LearnableCorpus();
  ContextIndex index = ContextIndex::Build(ds, {.budget = 2});
  Split split = SplitDataset(ds.size(), {0.6, 0.2, 0.2}, 3);
  TrainConfig tc;
  tc.epochs = 6;
  tc.seed = 17;
  tc.adam.lr = 0.01;
  auto emb = EmbeddingTable::Random(ds, 6, 1);
  TrainResult a = Train(ds, &index, split, Config(ds, 6), emb, tc);
  TrainResult b = Train(ds, &index, split, Config(ds, 6), emb, tc);
  std::ostringstream la, lb;
  WriteEpochLog(la, a.log);
  WriteEpochLog(lb, b.log);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_TRUE(a.model.params().SameValues(b.model.params()));
  tc.seed = 18;
  TrainResult c = Train(ds, &index, split, Config(ds, 6), emb, tc);
  EXPECT_FALSE(a.model.params().SameValues(c.model.params()));
}

TEST(TrainTest, EarlyStoppingKeepsBestEpoch) {
  LabeledDataset ds = LearnableCorpus();
  Split split = SplitDataset(ds.size(), {0.6, 0.2, 0.2}, 3);
  TrainConfig tc;
  tc.epochs = 40;
  tc.patience = 2;
  tc.adam.lr = 0.05;
  TrainResult r = Train(ds, nullptr, split, Config(ds, 6), EmbeddingTable::Random(ds, 6, 1), tc);
  ASSERT_FALSE(r.log.empty());
  double best = -1;
  int best_epoch = 0;
  for (const EpochLog& e : r.log) {
    ASSERT_TRUE(e.valid.has_value());
    if (e.valid->mean_f1() > best) {
      best = e.valid->mean_f1();
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_LE(static_cast<int>(r.log.size()), std::min(40, best_epoch + 2));
  EvalResult again = Evaluate(r.model, ds, nullptr, split.valid, tc.batch_size, tc.seed);
  EXPECT_DOUBLE_EQ(again.mean_f1(), best);
}

TEST(TrainTest, RejectsUnlabeledTrainingTables) {
  LabeledDataset ds = LearnableCorpus();
  ds.tables[3].column_types[0].reset();
  Split split;
  split.train = {2, 3};
  TrainConfig tc;
  tc.epochs = 1;
  EXPECT_THROW(Train(ds, nullptr, split, Config(ds, 4), EmbeddingTable::Random(ds, 4, 1), tc),
               DataError);
}

TEST(TrainTest, FinetuneRejectsMismatchedVocabulary) {
  LabeledDataset ds = LearnableCorpus();
  LabeledDataset other = TwoTableCorpus();
  TcnModel foreign(Config(other, 4), EmbeddingTable::Random(other, 4, 1), 1);
  Split split;
  split.train = {0, 1};
  TrainConfig tc;
  tc.epochs = 1;
  EXPECT_THROW(
      Train(ds, nullptr, split, Config(ds, 4), EmbeddingTable::Random(ds, 4, 1), tc, &foreign),
      DataError);
}

TEST(TrainTest, ConfigValidation) {
  TrainConfig tc;
  tc.gamma = 1.5;
  EXPECT_THROW(tc.Validate(), DataError);
  tc = TrainConfig{};
  tc.batch_size = 0;
  EXPECT_THROW(tc.Validate(), DataError);
  tc = TrainConfig{};
  tc.mask_rate = 0;
  EXPECT_THROW(tc.Validate(), DataError);
  tc = TrainConfig{};
  tc.budget = 0;
  EXPECT_THROW(tc.Validate(), DataError);
  EXPECT_NO_THROW(TrainConfig{}.Validate());
}

TEST(PretrainTest, FinetuneStartsFromPretrainedBody) {
  LabeledDataset ds = LearnableCorpus();
  TrainConfig tc;
  tc.epochs = 2;
  tc.adam.lr = 0.01;
  tc.vocab_min_count = 1;
  auto emb = EmbeddingTable::Random(ds, 6, 1);
  PretrainResult pre = Pretrain(ds, IndexOptions{}, Config(ds, 6), emb, tc);
  ASSERT_EQ(pre.losses.size(), 2u);
  EXPECT_EQ(pre.vocab.size(), CellVocab::Build(ds).size());
  EXPECT_TRUE(pre.model.params().Has("M_v"));
  EXPECT_FALSE(pre.model.params().Has("M_c"));

  Split split;
  split.train = {0, 1, 2, 3};
  tc.epochs = 0;
  TrainResult r = Train(ds, nullptr, split, Config(ds, 6), emb, tc, &pre.model);
  for (const std::string& name : r.model.params().names()) {
    if (name == "M_c" || name == "M_r") continue;
    EXPECT_EQ(r.model.params().Get(name).value, pre.model.params().Get(name).value) << name;
  }
}

TEST(EpochLogTest, Columns) {
  std::vector<EpochLog> log(2);
  log[0].epoch = 1;
  log[0].train_loss = 0.5;
  log[1].epoch = 2;
  log[1].train_loss = 0.25;
  log[1].valid = EvalResult{};
  log[1].valid->type.f1_weighted = 0.75;
  std::ostringstream out;
  WriteEpochLog(out, log);
  EXPECT_EQ(out.str(),
            "epoch,train_loss,val_acc_type,val_f1_type,val_kappa_type,val_acc_rel,val_f1_rel,"
            "val_kappa_rel\n1,0.5,,,,,,\n2,0.25,0,0.75,0,0,0,0\n");
}

}  // namespace
}  // namespace tcn
