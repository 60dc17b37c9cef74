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

#include "tcn/model.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "oracle.h"
#include "tcn/context_index.h"
#include "tcn/errors.h"
#include "tcn/grad_check.h"
#include "tcn/ops.h"
#include "tcn/training.h"
#include "test_util.h"

namespace tcn {
namespace {

using testing::MakeTable;
using testing::TwoTableCorpus;

ModelConfig SmallConfig(const LabeledDataset& ds, size_t d) {
  ModelConfig c;
  c.dims = ModelDims::Uniform(d);
  c.num_types = static_cast<int>(ds.ontology.types.size());
  c.num_relations = static_cast<int>(ds.ontology.relations.size());
  return c;
}

TcnModel SmallModel(const LabeledDataset& ds, size_t d, uint64_t seed = 3,
                    Variant variant = Variant::kFull) {
  ModelConfig c = SmallConfig(ds, d);
  c.variant = variant;
  return TcnModel(c, EmbeddingTable::Random(ds, d, seed), seed);
}

void SetParam(TcnModel& model, const std::string& name, Tensor value) {
  Parameter& p = model.params().Get(name);
  ASSERT_EQ(p.value.shape(), value.shape()) << name;
  p.value = std::move(value);
}

void SetToken(TcnModel& model, const std::string& token, std::vector<double> v) {
  auto id = model.vocabulary().Find(token);
  ASSERT_TRUE(id.has_value()) << token;
  Tensor& emb = model.params().Get("embedding").value;
  for (size_t c = 0; c < v.size(); ++c) emb.at(*id, c) = v[c];
}

Tensor Identity(size_t n) {
  Tensor t({n, n});
  for (size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::vector<double> Row(const Var& v, size_t r) {
  const Tensor& t = v.value();
  return {t.data() + r * t.cols(), t.data() + (r + 1) * t.cols()};
}

TEST(ModelTest, ParameterShapesFollowDims) {
  LabeledDataset ds = TwoTableCorpus();
  ModelConfig c = SmallConfig(ds, 4);
  c.dims.intra = 5;
  c.dims.inter = 6;
  c.dims.hidden = 7;
  TcnModel m(c, EmbeddingTable::Random(ds, 4, 1), 1);
  EXPECT_EQ(m.params().Get("W_a").value.shape(), (Shape{5, 8}));
  EXPECT_EQ(m.params().Get("value.W_s").value.shape(), (Shape{2, 5}));
  EXPECT_EQ(m.params().Get("topic.W_b").value.shape(), (Shape{5, 6}));
  EXPECT_EQ(m.params().Get("P_t").value.shape(), (Shape{4, 10}));
  EXPECT_EQ(m.params().Get("W_h").value.shape(), (Shape{7, 4 + 5 + 12}));
  EXPECT_EQ(m.params().Get("M_c").value.shape(), (Shape{4, 7}));
  EXPECT_EQ(m.params().Get("M_r").value.shape(), (Shape{3, 14}));
  EXPECT_FALSE(m.params().Has("M_v"));
}

TEST(ModelTest, SharedInterWeightsUseOnePair) {
  LabeledDataset ds = TwoTableCorpus();
  ModelConfig c = SmallConfig(ds, 4);
  c.share_inter_weights = true;
  TcnModel m(c, EmbeddingTable::Random(ds, 4, 1), 1);
  EXPECT_TRUE(m.params().Has("inter.W_s"));
  EXPECT_FALSE(m.params().Has("value.W_s"));
}

TEST(ModelTest, DefaultDimsAre300) {
  ModelDims d;
  EXPECT_EQ(d, ModelDims::Uniform(300));
  EXPECT_EQ(ModelConfig().views, 2);
}

TEST(ModelTest, ColumnAggregateHandExample) {
  // Column 0 holds tokens a (target, header), b and c.
  LabeledDataset ds;
  ds.ontology = testing::ToyOntology();
  ds.tables.push_back(MakeTable(0, 0, "", {{"a", "z"}, {"b", "z"}, {"c", "z"}}));
  TcnModel m = SmallModel(ds, 2);
  SetToken(m, "a", {1, 0});
  SetToken(m, "b", {2, 0});
  SetToken(m, "c", {0, 1});
  SetParam(m, "W_c", Identity(2));
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, nullptr, batch, 0);
  std::vector<double> e_c = Row(f.e_c, 0);
  EXPECT_NEAR(e_c[0], 1.7616, 5e-5);
  EXPECT_NEAR(e_c[1], 0.1192, 5e-5);
}

TEST(ModelTest, ColumnAggregateSymmetricPeersGetEqualWeight) {
  LabeledDataset ds;
  ds.ontology = testing::ToyOntology();
  ds.tables.push_back(MakeTable(0, 0, "", {{"a", "z"}, {"b", "z"}, {"b", "z"}}));
  TcnModel m = SmallModel(ds, 2);
  Tape tape;
  Var q = tape.Constant(Tensor::Matrix({{0.3, -0.2}}));
  Var k = tape.Constant(Tensor::Matrix({{0.3, -0.2}, {1.0, 2.0}, {1.0, 2.0}}));
  auto w = PeerAttentionWeights(q.value(), k.value(), {{1, 2}});
  EXPECT_DOUBLE_EQ(w[0][0], 0.5);
  EXPECT_DOUBLE_EQ(w[0][1], 0.5);
}

TEST(ModelTest, RowAggregateSingleOtherCell) {
  // Two columns: the only other row cell gets weight 1.
  LabeledDataset ds;
  ds.ontology = testing::ToyOntology();
  ds.tables.push_back(MakeTable(0, 0, "t", {{"a", "b"}, {"c", "d"}}));
  TcnModel m = SmallModel(ds, 3);
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, nullptr, batch, 0);
  // Expected: ReLU(W_r (e_b ∥ topic)) for target (0, 0).
  Tape t2;
  Var e_b = Reshape(GatherRows(f.e, {1}), {3});
  Var topic = Reshape(GatherRows(f.topic, {0}), {3});
  Var expect = Relu(Linear(t2.Constant(m.params().Get("W_r").value),
                           t2.Constant(Concat({e_b, topic}).value())));
  std::vector<double> got = Row(f.e_r, 0);
  for (size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(got[i], expect.value()[i]);
}

TEST(ModelTest, RowQueryWithZeroTopicReducesToDotAttention) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Tensor e({1, 3}), keys({4, 3}), w_q({3, 6});
  for (double& v : e.values()) v = g(rng);
  for (double& v : keys.values()) v = g(rng);
  for (size_t i = 0; i < 3; ++i) w_q.at(i, i) = 1.0;
  Tape tape;
  Var query = Linear(tape.Constant(w_q), Concat({tape.Constant(e), tape.Constant(Tensor({1, 3}))}));
  auto via_query = PeerAttentionWeights(query.value(), keys, {{0, 1, 2, 3}});
  auto direct = PeerAttentionWeights(e, keys, {{0, 1, 2, 3}});
  for (size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(via_query[0][j], direct[0][j]);
}

TEST(ModelTest, RowAttentionIsPermutationInvariant) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Tensor q({1, 3}), keys({3, 3});
  for (double& v : q.values()) v = g(rng);
  for (double& v : keys.values()) v = g(rng);
  Tape tape;
  Var Q = tape.Constant(q), K = tape.Constant(keys);
  Var a = PeerAttention(Q, K, K, {{0, 1, 2}});
  Var b = PeerAttention(Q, K, K, {{2, 0, 1}});
  for (size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.value()[i], b.value()[i], 1e-15);
}

TEST(ModelTest, IntraAggregateZeroWeightGivesZero) {
  LabeledDataset ds = TwoTableCorpus();
  TcnModel m = SmallModel(ds, 4);
  SetParam(m, "W_a", Tensor({4, 8}));
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, nullptr, batch, 0);
  for (double v : f.e_a.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(ModelTest, IntraAggregateShape) {
  LabeledDataset ds = TwoTableCorpus();
  ModelConfig c = SmallConfig(ds, 4);
  c.dims.column = 3;
  c.dims.row = 3;
  c.dims.intra = 4;
  TcnModel m(c, EmbeddingTable::Random(ds, 4, 2), 2);
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, nullptr, batch, 0);
  EXPECT_EQ(f.e_a.shape(), (Shape{9, 4}));
  EXPECT_EQ(f.e_c.shape(), (Shape{9, 3}));
}

TEST(ModelTest, MultiviewSingleNeighborIsProjection) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Tensor a({1, 3}), w_s({2, 3}), w_b({3, 2});
  for (Tensor* t : {&a, &w_s, &w_b}) {
    for (double& v : t->values()) v = g(rng);
  }
  Tape tape;
  Var out = MultiviewAggregate(tape.Constant(a), tape.Constant(w_s), tape.Constant(w_b));
  for (size_t c = 0; c < 2; ++c) {
    double expect = 0;
    for (size_t i = 0; i < 3; ++i) expect += a[i] * w_b.at(i, c);
    EXPECT_NEAR(out.value()[c], expect, 1e-14);
  }
}

TEST(ModelTest, MultiviewIdenticalRowsSplitEvenly) {
  Tensor e = Tensor::Matrix({{1.0, -2.0}, {1.0, -2.0}});
  auto omegas = MultiViewWeights(e, {{0, 1}});
  EXPECT_DOUBLE_EQ(omegas[0].at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(omegas[0].at(1, 1), 0.5);
  Tape tape;
  Tensor contexts = Tensor::Matrix({{0.5, 1.5}, {0.5, 1.5}});
  Var out = MultiviewAggregate(tape.Constant(contexts), tape.Constant(Tensor::Matrix({{1, 0}, {0, 1}})),
                               tape.Constant(Identity(2)));
  EXPECT_NEAR(out.value()[0], 0.5, 1e-15);
  EXPECT_NEAR(out.value()[1], 1.5, 1e-15);
}

TEST(ModelTest, MultiviewSingleViewIsQueryAttention) {
  Tensor ctx = Tensor::Matrix({{1.0, 0.0}, {0.0, 2.0}, {1.0, 1.0}});
  Tensor w_s = Tensor::Matrix({{0.7, -0.4}});
  Tape tape;
  Var out = MultiviewAggregate(tape.Constant(ctx), tape.Constant(w_s), tape.Constant(Identity(2)));
  std::vector<double> s = {0.7, -0.8, 0.3};
  SoftmaxInPlace(s);
  for (size_t c = 0; c < 2; ++c) {
    double expect = s[0] * ctx.at(0, c) + s[1] * ctx.at(1, c) + s[2] * ctx.at(2, c);
    EXPECT_NEAR(out.value()[c], expect, 1e-15);
  }
}

TEST(ModelTest, MultiviewPermutationInvariant) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  Tensor ctx({5, 4}), w_s({2, 4}), w_b({4, 3});
  for (Tensor* t : {&ctx, &w_s, &w_b}) {
    for (double& v : t->values()) v = g(rng);
  }
  Tensor shuffled({5, 4});
  const int perm[] = {3, 0, 4, 1, 2};
  for (size_t r = 0; r < 5; ++r) {
    for (size_t c = 0; c < 4; ++c) shuffled.at(r, c) = ctx.at(perm[r], c);
  }
  Tape tape;
  Var a = MultiviewAggregate(tape.Constant(ctx), tape.Constant(w_s), tape.Constant(w_b));
  Var b = MultiviewAggregate(tape.Constant(shuffled), tape.Constant(w_s), tape.Constant(w_b));
  for (size_t c = 0; c < 3; ++c) EXPECT_NEAR(a.value()[c], b.value()[c], 1e-13);
}

TEST(ModelTest, MultiviewRejectsEmptyNeighborSet) {
  Tape tape;
  EXPECT_THROW(MultiviewAggregate(tape.Constant(Tensor({0, 2})), tape.Constant(Tensor({2, 2})),
                                  tape.Constant(Tensor({2, 2}))),
               ShapeError);
}

TEST(ModelTest, NoNeighborsGiveZeroInterContext) {
  LabeledDataset ds;
  ds.ontology = testing::ToyOntology();
  ds.tables.push_back(MakeTable(0, 0, "x", {{"a", "b"}, {"c", "d"}}));
  ds.tables.push_back(MakeTable(1, 1, "y", {{"e", "f"}, {"g", "h"}}));
  ContextIndex index = ContextIndex::Build(ds, {});
  TcnModel m = SmallModel(ds, 3);
  Tape tape;
  std::vector<int> batch = {0, 1};
  ForwardResult f = m.Forward(tape, ds, &index, batch, 0);
  for (double v : f.e_v.value().values()) EXPECT_EQ(v, 0.0);
  for (double v : f.e_s.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(ModelTest, OneValueNeighborGivesProjectedContext) {
  // "shared" occurs once in each table; its value context is the neighbor's
  // AGG_a output times W_b.
  LabeledDataset ds;
  ds.ontology = testing::ToyOntology();
  ds.tables.push_back(MakeTable(0, 0, "x", {{"a", "b"}, {"shared", "d"}}));
  ds.tables.push_back(MakeTable(1, 1, "y", {{"e", "f"}, {"g", "shared"}}));
  ContextIndex index = ContextIndex::Build(ds, {});
  TcnModel m = SmallModel(ds, 3);
  testing::Oracle oracle(m, ds);
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, &index, batch, 0);
  EXPECT_EQ(f.sampled[int(NeighborKind::kValue)], 1u);
  std::vector<double> h = Row(f.h, 2);
  std::vector<double> expect = oracle.H(0, 1, 0);
  for (size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], expect[i], 1e-12);
}

TEST(ModelTest, BudgetCapsSampledNeighbors) {
  LabeledDataset ds;
  ds.ontology = testing::ToyOntology();
  for (int k = 0; k < 101; ++k) {
    ds.tables.push_back(MakeTable(k, 0, "t" + std::to_string(k),
                                  {{"h1", "h2"}, {"common", "v" + std::to_string(k)}}));
  }
  IndexOptions opts;
  opts.budget = 20;
  ContextIndex index = ContextIndex::Build(ds, opts);
  ModelConfig c = SmallConfig(ds, 2);
  c.variant = Variant::kValue;
  TcnModel m(c, EmbeddingTable::Random(ds, 2, 1), 1);
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, &index, batch, 9);
  // Two header cells and "common" each have 100 value neighbors.
  EXPECT_EQ(f.sampled[int(NeighborKind::kValue)], 60u);
}

TEST(ModelTest, TopicFuseIdentityProjection) {
  LabeledDataset ds;
  ds.ontology = testing::ToyOntology();
  ds.tables.push_back(MakeTable(0, 0, "topic word", {{"a", "b"}, {"c", "d"}}));
  TcnModel m = SmallModel(ds, 3);
  Tensor p({3, 6});
  for (size_t i = 0; i < 3; ++i) p.at(i, i) = 1.0;
  SetParam(m, "P_t", p);
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, nullptr, batch, 0);
  std::vector<double> expect = m.vocabulary().CellEmbedding(ds.tables[0].topic);
  Tensor emb = m.params().Get("embedding").value;
  for (size_t i = 0; i < 3; ++i) {
    double mean = 0.5 * (emb.at(*m.vocabulary().Find("topic"), i) +
                         emb.at(*m.vocabulary().Find("word"), i));
    EXPECT_DOUBLE_EQ(f.topic.value()[i], std::max(mean, 0.0));
  }
}

TEST(ModelTest, TopicCellContextReachesFusedTopic) {
  LabeledDataset ds = TwoTableCorpus();
  ContextIndex index = ContextIndex::Build(ds, {});
  TcnModel m = SmallModel(ds, 4);
  testing::Oracle oracle(m, ds);
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, &index, batch, 0);
  EXPECT_EQ(f.sampled[int(NeighborKind::kTopic)], 1u);
  std::vector<double> expect = oracle.FusedTopic(0);
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(f.topic.value()[i], expect[i], 1e-12);

  ModelConfig c = m.config();
  c.variant = Variant::kIntra;
  TcnModel intra = m;
  intra = TcnModel::Restore(c, m.vocabulary().tokens(), m.params());
  Tape t2;
  ForwardResult g = intra.Forward(t2, ds, &index, batch, 0);
  EXPECT_NE(g.topic.value(), f.topic.value());
}

TEST(ModelTest, FuseCellZeroPartsGiveZero) {
  Tape tape;
  Tensor w({3, 8});
  for (double& v : w.values()) v = 0.25;
  Var zero = tape.Constant(Tensor({2}));
  Var h = FuseCell(tape.Constant(w), zero, zero, zero, zero);
  for (double v : h.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(ModelTest, FuseCellMissingPartThrows) {
  Tape tape;
  Var zero = tape.Constant(Tensor({2}));
  EXPECT_THROW(FuseCell(tape.Constant(Tensor({3, 8})), zero, Var(), zero, zero), Error);
}

TEST(ModelTest, FuseCellDefaultShape) {
  Tape tape;
  Var part = tape.Constant(Tensor({300}));
  Var h = FuseCell(tape.Constant(Tensor({300, 1200})), part, part, part, part);
  EXPECT_EQ(h.shape(), (Shape{300}));
}

TEST(ModelTest, ForwardMatchesOracle) {
  LabeledDataset ds = TwoTableCorpus();
  ContextIndex index = ContextIndex::Build(ds, {});
  TcnModel m = SmallModel(ds, 5);
  testing::Oracle oracle(m, ds);
  Tape tape;
  std::vector<int> batch = {0, 1};
  ForwardResult f = m.Forward(tape, ds, &index, batch, 11);
  for (size_t b = 0; b < 2; ++b) {
    const Table& t = ds.tables[b];
    for (int r = 0; r < t.num_rows(); ++r) {
      for (int c = 0; c < t.num_cols(); ++c) {
        std::vector<double> got = Row(f.h, f.CellRow(b, r, c, t.num_cols()));
        std::vector<double> expect = oracle.H(int(b), r, c);
        for (size_t i = 0; i < got.size(); ++i) {
          EXPECT_NEAR(got[i], expect[i], 1e-10) << b << ' ' << r << ' ' << c;
        }
      }
    }
  }
}

TEST(ModelTest, ColumnEmbeddingIsMeanOfCells) {
  LabeledDataset ds = TwoTableCorpus();
  TcnModel m = SmallModel(ds, 4);
  Tape tape;
  std::vector<int> batch = {0};
  ForwardResult f = m.Forward(tape, ds, nullptr, batch, 0);
  for (int n = 0; n < 3; ++n) {
    for (size_t i = 0; i < 4; ++i) {
      double mean = 0;
      for (int r = 0; r < 3; ++r) mean += f.h.value().at(f.CellRow(0, r, n, 3), i) / 3.0;
      EXPECT_NEAR(f.columns.value().at(n, i), mean, 1e-15);
    }
  }
}

TEST(ModelTest, ColumnEmbeddingIgnoresRowOrder) {
  LabeledDataset ds = TwoTableCorpus();
  LabeledDataset swapped = ds;
  std::swap(swapped.tables[0].rows[1], swapped.tables[0].rows[2]);
  TcnModel m = SmallModel(ds, 4);
  std::vector<int> batch = {0};
  Tape t1, t2;
  ForwardResult a = m.Forward(t1, ds, nullptr, batch, 0);
  ForwardResult b = m.Forward(t2, swapped, nullptr, batch, 0);
  for (size_t i = 0; i < a.columns.value().size(); ++i) {
    EXPECT_NEAR(a.columns.value()[i], b.columns.value()[i], 1e-14);
  }
}

TEST(ModelTest, ArgmaxSeparatedRowAndTies) {
  std::vector<double> logits = {0.0, 0.0, 0.0, 2.5, 0.0};
  EXPECT_EQ(Argmax(logits), 3);
  for (double& v : logits) v += 100.0;
  EXPECT_EQ(Argmax(logits), 3);
  std::vector<double> ties = {1.0, 4.0, 4.0};
  EXPECT_EQ(Argmax(ties), 1);
  EXPECT_THROW(Argmax(std::vector<double>{}), ShapeError);
}

TEST(ModelTest, TypeHeadPicksOrthogonalRow) {
  Tape tape;
  Tensor m_c({5, 4});
  m_c.at(3, 2) = 1.0;
  Tensor col_h = Tensor::Matrix({{0.0, 0.0, 0.7, 0.0}});
  Var logits = Linear(tape.Constant(m_c), tape.Constant(col_h));
  EXPECT_EQ(Argmax(logits.value().values()), 3);
}

TEST(ModelTest, RelationHeadIsOrderSensitive) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Tensor m_r({3, 4}), a({1, 2}), b({1, 2});
  for (Tensor* t : {&m_r, &a, &b}) {
    for (double& v : t->values()) v = g(rng);
  }
  Tape tape;
  Var A = tape.Constant(a), B = tape.Constant(b), M = tape.Constant(m_r);
  Var ab = Linear(M, Concat({A, B}));
  Var ba = Linear(M, Concat({B, A}));
  EXPECT_NE(ab.value(), ba.value());
}

TEST(ModelTest, RelationLogitsPairSubjectWithEachObject) {
  LabeledDataset ds = TwoTableCorpus();
  TcnModel m = SmallModel(ds, 4);
  Tape tape;
  std::vector<int> batch = {0, 1};
  ForwardResult f = m.Forward(tape, ds, nullptr, batch, 0);
  EXPECT_EQ(m.TypeLogits(tape, f).shape(), (Shape{6, 4}));
  EXPECT_EQ(m.RelationLogits(tape, f).shape(), (Shape{4, 3}));
}

TEST(ModelTest, EmptyIndexMatchesIntraVariantExactly) {
  // No shared values, distinct schemas, topics that never occur as cells.
  LabeledDataset ds;
  ds.ontology = testing::ToyOntology();
  ds.tables.push_back(MakeTable(0, 0, "x", {{"a", "b"}, {"c", "d"}}, {0, 1}, {std::nullopt, 0}));
  ds.tables.push_back(MakeTable(1, 1, "y", {{"e", "f"}, {"g", "h"}}, {0, 1}, {std::nullopt, 0}));
  ContextIndex empty = ContextIndex::Build(ds, {});
  TcnModel full = SmallModel(ds, 6, 5, Variant::kFull);
  ModelConfig c = full.config();
  c.variant = Variant::kIntra;
  TcnModel intra = TcnModel::Restore(c, full.vocabulary().tokens(), full.params());
  LabeledDataset linked = testing::TwoTableCorpus();
  std::vector<int> batch = {0, 1};
  Tape t1, t2;
  ForwardResult a = full.Forward(t1, ds, &empty, batch, 1);
  ForwardResult b = intra.Forward(t2, ds, &empty, batch, 1);
  EXPECT_EQ(a.h.value(), b.h.value());
  EXPECT_EQ(full.TypeLogits(t1, a).value(), intra.TypeLogits(t2, b).value());
  EXPECT_EQ(full.RelationLogits(t1, a).value(), intra.RelationLogits(t2, b).value());
}

TEST(ModelTest, ForwardIsDeterministicForSeed) {
  LabeledDataset ds = TwoTableCorpus();
  ContextIndex index = ContextIndex::Build(ds, {});
  TcnModel m = SmallModel(ds, 4);
  std::vector<int> batch = {1};
  Tape t1, t2;
  EXPECT_EQ(m.Forward(t1, ds, &index, batch, 8).h.value(),
            m.Forward(t2, ds, &index, batch, 8).h.value());
}

TEST(ModelTest, ForwardRejectsBadBatches) {
  LabeledDataset ds = TwoTableCorpus();
  TcnModel m = SmallModel(ds, 4);
  Tape tape;
  std::vector<int> repeated = {0, 0}, missing = {5}, none;
  EXPECT_THROW(m.Forward(tape, ds, nullptr, repeated, 0), DataError);
  EXPECT_THROW(m.Forward(tape, ds, nullptr, missing, 0), DataError);
  EXPECT_THROW(m.Forward(tape, ds, nullptr, none, 0), ShapeError);
}

TEST(ModelTest, GradientCheckFullLoss) {
  LabeledDataset ds = TwoTableCorpus();
  ContextIndex index = ContextIndex::Build(ds, {});
  TcnModel m = SmallModel(ds, 4);
  std::vector<int> batch = {0, 1};
  auto loss = [&](Tape& tape) {
    ForwardResult f = m.Forward(tape, ds, &index, batch, 2);
    return MultitaskLoss(m, tape, f, ds, 0.5);
  };
  GradCheckResult r = GradCheckParams(loss, m.params());
  EXPECT_EQ(r.checked + r.skipped, m.params().num_values());
  EXPECT_LT(r.skipped, r.checked / 20);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(ModelTest, SaveLoadRoundTrip) {
  LabeledDataset ds = TwoTableCorpus();
  TcnModel m = SmallModel(ds, 4);
  ModelMeta meta;
  meta.budget = 7;
  meta.gamma = 0.3;
  meta.seed = 99;
  meta.ontology = ds.ontology;
  auto path = std::filesystem::temp_directory_path() / "tcn_model_test.ckpt";
  SaveModel(path, m, meta);
  LoadedModel back = LoadModel(path);
  EXPECT_TRUE(back.model.params().SameValues(m.params()));
  EXPECT_EQ(back.model.config(), m.config());
  EXPECT_EQ(back.model.vocabulary().tokens(), m.vocabulary().tokens());
  EXPECT_EQ(back.meta.budget, 7);
  EXPECT_EQ(back.meta.gamma, 0.3);
  EXPECT_EQ(back.meta.seed, 99u);
  EXPECT_EQ(back.meta.ontology, ds.ontology);
  std::filesystem::remove(path);
}

TEST(ModelTest, InitBodyCopiesAllButHeads) {
  LabeledDataset ds = TwoTableCorpus();
  TcnModel a = SmallModel(ds, 4, 1);
  TcnModel b = SmallModel(ds, 4, 2);
  b.InitBodyFrom(a);
  EXPECT_EQ(b.params().Get("W_h").value, a.params().Get("W_h").value);
  EXPECT_EQ(b.params().Get("embedding").value, a.params().Get("embedding").value);
  EXPECT_NE(b.params().Get("M_c").value, a.params().Get("M_c").value);
}

TEST(ModelTest, InitBodyRejectsOtherVocabulary) {
  LabeledDataset ds = TwoTableCorpus();
  LabeledDataset other = ds;
  other.tables[0].rows[1][0] = NormalizeCell("unseen token");
  TcnModel a = SmallModel(other, 4);
  TcnModel b = SmallModel(ds, 4);
  EXPECT_THROW(b.InitBodyFrom(a), DataError);
}

TEST(ModelTest, VariantNamesRoundTrip) {
  for (Variant v : {Variant::kFull, Variant::kIntra, Variant::kValue, Variant::kPosition,
                    Variant::kTopic}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_FALSE(ParseVariant("bogus").has_value());
  EXPECT_TRUE(VariantUses(Variant::kPosition, NeighborKind::kPosition));
  EXPECT_FALSE(VariantUses(Variant::kPosition, NeighborKind::kValue));
}

}  // namespace
}  // namespace tcn
