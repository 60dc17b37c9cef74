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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "tcn/errors.h"
#include "tcn/hashing.h"
#include "tcn/ops.h"

namespace tcn {
namespace {

using json = nlohmann::json;

constexpr NeighborKind kKinds[] = {NeighborKind::kValue, NeighborKind::kPosition,
                                   NeighborKind::kTopic};
constexpr const char* kHeads[] = {"M_c", "M_r", "M_v"};

bool IsHead(const std::string& name) {
  return std::find(std::begin(kHeads), std::end(kHeads), name) != std::end(kHeads);
}

// Parameter shapes in creation order.
std::vector<std::pair<std::string, Shape>> ParamShapes(const ModelConfig& c,
                                                       size_t vocab_size) {
  const ModelDims& d = c.dims;
  const size_t views = static_cast<size_t>(c.views);
  std::vector<std::pair<std::string, Shape>> shapes = {
      {"embedding", {vocab_size, d.cell}},
      {"W_c", {d.column, d.cell}},
      {"W_q", {d.cell, d.cell + d.topic}},
      {"W_r", {d.row, d.cell + d.topic}},
      {"W_a", {d.intra, d.column + d.row}},
  };
  if (c.share_inter_weights) {
    shapes.push_back({"inter.W_s", {views, d.intra}});
    shapes.push_back({"inter.W_b", {d.intra, d.inter}});
  } else {
    for (NeighborKind k : kKinds) {
      shapes.push_back({std::string(NeighborKindName(k)) + ".W_s", {views, d.intra}});
      shapes.push_back({std::string(NeighborKindName(k)) + ".W_b", {d.intra, d.inter}});
    }
  }
  shapes.push_back({"P_t", {d.topic, d.cell + d.inter}});
  shapes.push_back({"W_h", {d.hidden, d.cell + d.intra + 2 * d.inter}});
  if (c.num_types > 0) shapes.push_back({"M_c", {size_t(c.num_types), d.hidden}});
  if (c.num_relations > 0) {
    shapes.push_back({"M_r", {size_t(c.num_relations), 2 * d.hidden}});
  }
  if (c.num_values > 0) shapes.push_back({"M_v", {size_t(c.num_values), d.hidden}});
  return shapes;
}

void CheckConfig(const ModelConfig& c) {
  const ModelDims& d = c.dims;
  for (size_t v : {d.cell, d.column, d.row, d.intra, d.inter, d.topic, d.hidden}) {
    if (v == 0) throw ShapeError("model dimensions must be positive");
  }
  if (c.views < 1) throw ShapeError("at least one attention view is required");
  if (c.num_types < 0 || c.num_relations < 0 || c.num_values < 0) {
    throw ShapeError("negative class count");
  }
}

Tensor XavierUniform(const Shape& shape, uint64_t seed) {
  Tensor t(shape);
  const double limit = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

struct Query {
  int slot, m, n;
};

}  // namespace

ModelDims ModelDims::Uniform(size_t d) { return {d, d, d, d, d, d, d}; }

const char* VariantName(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kIntra: return "intra";
    case Variant::kValue: return "nv";
    case Variant::kPosition: return "ns";
    case Variant::kTopic: return "np";
  }
  return "?";
}

std::optional<Variant> ParseVariant(std::string_view name) {
  for (Variant v : {Variant::kFull, Variant::kIntra, Variant::kValue,
                    Variant::kPosition, Variant::kTopic}) {
    if (name == VariantName(v)) return v;
  }
  return std::nullopt;
}

bool VariantUses(Variant v, NeighborKind kind) {
  switch (v) {
    case Variant::kFull: return true;
    case Variant::kIntra: return false;
    case Variant::kValue: return kind == NeighborKind::kValue;
    case Variant::kPosition: return kind == NeighborKind::kPosition;
    case Variant::kTopic: return kind == NeighborKind::kTopic;
  }
  return false;
}

TcnModel::TcnModel(const ModelConfig& config, const EmbeddingTable& embeddings,
                   uint64_t seed)
    : config_(config), vocab_(embeddings) {
  CheckConfig(config_);
  if (vocab_.size() == 0) throw DataError("empty token vocabulary");
  if (vocab_.dim() != config_.dims.cell) {
    throw ShapeError("embedding dimension " + std::to_string(vocab_.dim()) +
                     " does not match cell dimension " +
                     std::to_string(config_.dims.cell));
  }
  for (const auto& [name, shape] : ParamShapes(config_, vocab_.size())) {
    if (name == "embedding") {
      params_.Add(name, vocab_.vectors()).trainable = config_.train_embeddings;
    } else {
      params_.Add(name, XavierUniform(shape, DeriveSeed(seed, {Fingerprint(name)})));
    }
  }
}

TcnModel TcnModel::Restore(const ModelConfig& config, std::vector<std::string> tokens,
                           ParamStore params) {
  CheckConfig(config);
  auto shapes = ParamShapes(config, tokens.size());
  if (params.size() != shapes.size()) {
    throw DataError("model file has " + std::to_string(params.size()) +
                    " parameters, expected " + std::to_string(shapes.size()));
  }
  for (const auto& [name, shape] : shapes) {
    if (!params.Has(name)) throw DataError("model file lacks parameter " + name);
    if (params.Get(name).value.shape() != shape) {
      throw DataError("parameter " + name + " has shape " +
                      ShapeToString(params.Get(name).value.shape()) + ", expected " +
                      ShapeToString(shape));
    }
  }
  TcnModel model;
  model.config_ = config;
  model.vocab_ = EmbeddingTable(std::move(tokens), params.Get("embedding").value);
  params.Get("embedding").trainable = config.train_embeddings;
  model.params_ = std::move(params);
  return model;
}

void TcnModel::InitBodyFrom(const TcnModel& other) {
  const ModelConfig& a = config_;
  const ModelConfig& b = other.config_;
  if (vocab_.tokens() != other.vocab_.tokens()) {
    throw DataError("token vocabulary of the initial model does not match the corpus");
  }
  if (!(a.dims == b.dims) || a.views != b.views ||
      a.share_inter_weights != b.share_inter_weights) {
    throw DataError("initial model has different dimensions, views or weight sharing");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_.at(i);
    if (IsHead(p.name)) continue;
    const Parameter& src = other.params_.Get(p.name);
    p.value = src.value;
    p.grad = Tensor();
    p.first_moment = Tensor();
    p.second_moment = Tensor();
    p.steps = 0;
  }
}

std::string TcnModel::InterName(NeighborKind kind, const char* what) const {
  std::string prefix = config_.share_inter_weights ? "inter" : NeighborKindName(kind);
  return prefix + "." + what;
}

ForwardResult TcnModel::Forward(Tape& tape, const LabeledDataset& ds,
                                const ContextIndex* index, std::span<const int> batch,
                                uint64_t sample_seed) {
  if (batch.empty()) throw ShapeError("Forward: empty batch");
  if (index != nullptr && index->num_tables() != ds.size()) {
    throw DataError("context index covers " + std::to_string(index->num_tables()) +
                    " tables, corpus has " + std::to_string(ds.size()));
  }
  const ModelDims& d = config_.dims;
  ForwardResult out;
  out.tables.assign(batch.begin(), batch.end());

  // Slots: batch tables first, then tables that only supply context.
  std::vector<int> slot_of(ds.size(), -1);
  std::vector<int> slot_table;
  for (int k : batch) {
    if (k < 0 || k >= ds.size()) throw DataError("table " + std::to_string(k) + " out of range");
    if (slot_of[k] >= 0) throw DataError("table " + std::to_string(k) + " repeated in batch");
    slot_of[k] = static_cast<int>(slot_table.size());
    slot_table.push_back(k);
  }

  bool use[kNumNeighborKinds];
  for (NeighborKind kind : kKinds) {
    use[int(kind)] = index != nullptr && VariantUses(config_.variant, kind);
  }

  int total_cells = 0, total_cols = 0;
  for (int k : batch) {
    out.cell_offset.push_back(total_cells);
    out.column_offset.push_back(total_cols);
    total_cells += ds.tables[k].num_cells();
    total_cols += ds.tables[k].num_cols();
  }

  std::vector<std::vector<CellRef>> value_nbrs(total_cells), position_nbrs(total_cells);
  std::vector<std::vector<CellRef>> topic_nbrs(batch.size());
  std::vector<CellRef> ctx;
  auto sample = [&](const CellRef& target, NeighborKind kind) {
    uint64_t seed = DeriveSeed(sample_seed, {uint64_t(target.table), uint64_t(target.row),
                                             uint64_t(target.col), uint64_t(kind)});
    std::vector<CellRef> refs = index->Sample(target, kind, seed);
    ctx.insert(ctx.end(), refs.begin(), refs.end());
    out.sampled[int(kind)] += refs.size();
    return refs;
  };
  for (size_t b = 0; b < batch.size(); ++b) {
    const Table& t = ds.tables[batch[b]];
    if (use[int(NeighborKind::kTopic)]) {
      topic_nbrs[b] = sample({batch[b], 0, 0}, NeighborKind::kTopic);
    }
    for (int m = 0; m < t.num_rows(); ++m) {
      for (int n = 0; n < t.num_cols(); ++n) {
        const int row = out.CellRow(b, m, n, t.num_cols());
        if (use[int(NeighborKind::kValue)]) {
          value_nbrs[row] = sample({batch[b], m, n}, NeighborKind::kValue);
        }
        if (use[int(NeighborKind::kPosition)]) {
          position_nbrs[row] = sample({batch[b], m, n}, NeighborKind::kPosition);
        }
      }
    }
  }
  std::sort(ctx.begin(), ctx.end());
  ctx.erase(std::unique(ctx.begin(), ctx.end()), ctx.end());
  for (const CellRef& r : ctx) {
    if (slot_of[r.table] < 0) {
      slot_of[r.table] = static_cast<int>(slot_table.size());
      slot_table.push_back(r.table);
    }
  }

  std::vector<int> slot_base;
  std::vector<std::vector<int>> cell_tokens;
  for (int k : slot_table) {
    slot_base.push_back(static_cast<int>(cell_tokens.size()));
    for (const auto& row : ds.tables[k].rows) {
      for (const Cell& c : row) cell_tokens.push_back(vocab_.TokenIds(c));
    }
  }
  auto topic_tokens = [&](const std::vector<int>& tables) {
    std::vector<std::vector<int>> segs;
    for (int k : tables) segs.push_back(vocab_.TokenIds(ds.tables[k].topic));
    return segs;
  };

  Var emb = tape.Param(params_.Get("embedding"));
  Var w_c = tape.Param(params_.Get("W_c"));
  Var w_q = tape.Param(params_.Get("W_q"));
  Var w_r = tape.Param(params_.Get("W_r"));
  Var w_a = tape.Param(params_.Get("W_a"));
  Var p_t = tape.Param(params_.Get("P_t"));
  Var w_h = tape.Param(params_.Get("W_h"));
  Var x = SegmentMean(emb, std::move(cell_tokens));

  struct Intra {
    Var e, e_c, e_r, e_a;
  };
  // AGG_a for each query cell, with `topics` row `topic_rows[i]` as the
  // page-topic pseudo-column of query i.
  auto intra = [&](const std::vector<Query>& qs, const Var& topics,
                   std::vector<int> topic_rows) {
    std::vector<int> rows;
    std::vector<std::vector<int>> col_peers(qs.size()), row_peers(qs.size());
    for (size_t i = 0; i < qs.size(); ++i) {
      const Query& q = qs[i];
      const Table& t = ds.tables[slot_table[q.slot]];
      const int cols = t.num_cols(), base = slot_base[q.slot];
      rows.push_back(base + q.m * cols + q.n);
      for (int m = 0; m < t.num_rows(); ++m) {
        if (m != q.m) col_peers[i].push_back(base + m * cols + q.n);
      }
      for (int n = 0; n < cols; ++n) {
        if (n != q.n) row_peers[i].push_back(base + q.m * cols + n);
      }
    }
    Intra r;
    r.e = GatherRows(x, std::move(rows));
    Var tq = GatherRows(topics, std::move(topic_rows));
    r.e_c = Relu(Linear(w_c, PeerAttention(r.e, x, x, std::move(col_peers))));
    Var query = Linear(w_q, Concat({r.e, tq}));
    r.e_r = Relu(Linear(w_r, Concat({PeerAttention(query, x, x, std::move(row_peers)), tq})));
    r.e_a = Relu(Linear(w_a, Concat({r.e_c, r.e_r})));
    return r;
  };

  // Neighbor contexts use the unfused topic embedding of their own table.
  Var ctx_a;
  if (!ctx.empty()) {
    std::vector<int> ctx_tables;
    std::vector<int> ctx_topic_slot(slot_table.size(), -1);
    std::vector<Query> qs;
    std::vector<int> topic_rows;
    for (const CellRef& r : ctx) {
      const int slot = slot_of[r.table];
      if (ctx_topic_slot[slot] < 0) {
        ctx_topic_slot[slot] = static_cast<int>(ctx_tables.size());
        ctx_tables.push_back(r.table);
      }
      qs.push_back({slot, r.row, r.col});
      topic_rows.push_back(ctx_topic_slot[slot]);
    }
    Var topic0 = SegmentMean(emb, topic_tokens(ctx_tables));
    Var fused0 = Relu(Linear(
        p_t, Concat({topic0, tape.Constant(Tensor({ctx_tables.size(), d.inter}))})));
    ctx_a = intra(qs, fused0, std::move(topic_rows)).e_a;
  }
  auto pool = [&](NeighborKind kind, const std::vector<std::vector<CellRef>>& lists) {
    std::vector<std::vector<int>> rows(lists.size());
    bool any = false;
    for (size_t i = 0; i < lists.size(); ++i) {
      for (const CellRef& r : lists[i]) {
        rows[i].push_back(static_cast<int>(
            std::lower_bound(ctx.begin(), ctx.end(), r) - ctx.begin()));
        any = true;
      }
    }
    if (!any) return tape.Constant(Tensor({lists.size(), d.inter}));
    Var w_s = tape.Param(params_.Get(InterName(kind, "W_s")));
    Var w_b = tape.Param(params_.Get(InterName(kind, "W_b")));
    return MatMul(MultiViewPool(ctx_a, Linear(w_s, ctx_a), std::move(rows)), w_b);
  };

  Var e_p = pool(NeighborKind::kTopic, topic_nbrs);
  Var topic = SegmentMean(emb, topic_tokens(out.tables));
  out.topic = Relu(Linear(p_t, Concat({topic, e_p})));

  std::vector<Query> qs;
  std::vector<int> topic_rows;
  for (size_t b = 0; b < batch.size(); ++b) {
    const Table& t = ds.tables[batch[b]];
    for (int m = 0; m < t.num_rows(); ++m) {
      for (int n = 0; n < t.num_cols(); ++n) {
        qs.push_back({static_cast<int>(b), m, n});
        topic_rows.push_back(static_cast<int>(b));
      }
    }
  }
  Intra a = intra(qs, out.topic, std::move(topic_rows));
  out.e = a.e;
  out.e_c = a.e_c;
  out.e_r = a.e_r;
  out.e_a = a.e_a;
  out.e_v = pool(NeighborKind::kValue, value_nbrs);
  out.e_s = pool(NeighborKind::kPosition, position_nbrs);
  out.h = Relu(Linear(w_h, Concat({out.e, out.e_a, out.e_v, out.e_s})));

  std::vector<std::vector<int>> col_cells;
  for (size_t b = 0; b < batch.size(); ++b) {
    const Table& t = ds.tables[batch[b]];
    for (int n = 0; n < t.num_cols(); ++n) {
      std::vector<int> cells;
      for (int m = 0; m < t.num_rows(); ++m) cells.push_back(out.CellRow(b, m, n, t.num_cols()));
      col_cells.push_back(std::move(cells));
    }
  }
  out.columns = SegmentMean(out.h, std::move(col_cells));
  return out;
}

Var TcnModel::TypeLogits(Tape& tape, const ForwardResult& fwd) {
  if (!params_.Has("M_c")) throw Error("model has no column type head");
  return Linear(tape.Param(params_.Get("M_c")), fwd.columns);
}

Var TcnModel::RelationLogits(Tape& tape, const ForwardResult& fwd) {
  if (!params_.Has("M_r")) throw Error("model has no relation head");
  const int total = static_cast<int>(fwd.columns.shape()[0]);
  std::vector<int> subj, obj;
  for (size_t b = 0; b < fwd.column_offset.size(); ++b) {
    const int begin = fwd.column_offset[b];
    const int end = b + 1 < fwd.column_offset.size() ? fwd.column_offset[b + 1] : total;
    for (int c = begin + 1; c < end; ++c) {
      subj.push_back(begin);
      obj.push_back(c);
    }
  }
  Var pairs = Concat({GatherRows(fwd.columns, std::move(subj)),
                      GatherRows(fwd.columns, std::move(obj))});
  return Linear(tape.Param(params_.Get("M_r")), pairs);
}

Var TcnModel::ValueLogits(Tape& tape, const ForwardResult& fwd, std::vector<int> cell_rows) {
  if (!params_.Has("M_v")) throw Error("model has no cell value head");
  return Linear(tape.Param(params_.Get("M_v")), GatherRows(fwd.h, std::move(cell_rows)));
}

namespace {

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t ListHash(const std::vector<std::string>& items, std::string_view tag) {
  uint64_t h = Fingerprint(tag);
  for (const std::string& s : items) h = Fingerprint(s, Mix64(h));
  return h;
}

}  // namespace

void SaveModel(const std::filesystem::path& path, const TcnModel& model,
               const ModelMeta& meta) {
  const ModelConfig& c = model.config();
  json h;
  h["format"] = "tcn-model";
  h["version"] = 1;
  h["dims"] = {{"cell", c.dims.cell},   {"column", c.dims.column}, {"row", c.dims.row},
               {"intra", c.dims.intra}, {"inter", c.dims.inter},   {"topic", c.dims.topic},
               {"hidden", c.dims.hidden}};
  h["views"] = c.views;
  h["variant"] = VariantName(c.variant);
  h["share_inter_weights"] = c.share_inter_weights;
  h["train_embeddings"] = c.train_embeddings;
  h["num_types"] = c.num_types;
  h["num_relations"] = c.num_relations;
  h["num_values"] = c.num_values;
  h["budget"] = meta.budget;
  h["gamma"] = meta.gamma;
  h["seed"] = meta.seed;
  h["tokens"] = model.vocabulary().tokens();
  h["token_vocab_hash"] = Hex(model.vocabulary().VocabHash());
  h["cell_vocab"] = meta.cell_vocab;
  h["cell_vocab_hash"] = Hex(ListHash(meta.cell_vocab, "tcn-cell-vocab"));
  h["ontology"] = {{"types", meta.ontology.types}, {"relations", meta.ontology.relations}};
  SaveCheckpoint(path, model.params(), h.dump());
}

LoadedModel LoadModel(const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  json h;
  try {
    h = json::parse(ckpt.header);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad model header: " + e.what());
  }
  try {
    if (h.at("format") != "tcn-model" || h.at("version") != 1) {
      throw DataError(path.string() + ": not a model file");
    }
    ModelConfig c;
    const json& d = h.at("dims");
    c.dims = {d.at("cell"),  d.at("column"), d.at("row"),   d.at("intra"),
              d.at("inter"), d.at("topic"),  d.at("hidden")};
    c.views = h.at("views");
    auto variant = ParseVariant(h.at("variant").get<std::string>());
    if (!variant) throw DataError(path.string() + ": unknown variant");
    c.variant = *variant;
    c.share_inter_weights = h.at("share_inter_weights");
    c.train_embeddings = h.at("train_embeddings");
    c.num_types = h.at("num_types");
    c.num_relations = h.at("num_relations");
    c.num_values = h.at("num_values");
    LoadedModel out;
    out.meta.budget = h.at("budget");
    out.meta.gamma = h.at("gamma");
    out.meta.seed = h.at("seed");
    out.meta.cell_vocab = h.at("cell_vocab").get<std::vector<std::string>>();
    out.meta.ontology.types = h.at("ontology").at("types").get<std::vector<std::string>>();
    out.meta.ontology.relations =
        h.at("ontology").at("relations").get<std::vector<std::string>>();
    auto tokens = h.at("tokens").get<std::vector<std::string>>();
    if (Hex(ListHash(out.meta.cell_vocab, "tcn-cell-vocab")) != h.at("cell_vocab_hash")) {
      throw DataError(path.string() + ": cell vocabulary hash mismatch");
    }
    out.model = TcnModel::Restore(c, std::move(tokens), std::move(ckpt.params));
    if (Hex(out.model.vocabulary().VocabHash()) != h.at("token_vocab_hash")) {
      throw DataError(path.string() + ": token vocabulary hash mismatch");
    }
    if (c.num_values != static_cast<int>(out.meta.cell_vocab.size()) && c.num_values > 0) {
      throw DataError(path.string() + ": value head does not match cell vocabulary");
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad model header: " + e.what());
  }
}

Var MultiviewAggregate(const Var& contexts, const Var& w_s, const Var& w_b) {
  if (contexts.shape().size() != 2 || contexts.shape()[0] == 0) {
    throw ShapeError("MultiviewAggregate: needs at least one neighbor context");
  }
  const size_t n = contexts.shape()[0];
  std::vector<int> all(n);
  for (size_t i = 0; i < n; ++i) all[i] = static_cast<int>(i);
  Var pooled = MultiViewPool(contexts, Linear(w_s, contexts), {all});
  Var out = MatMul(pooled, w_b);
  return Reshape(out, {out.shape()[1]});
}

Var FuseCell(const Var& w_h, const Var& e, const Var& e_a, const Var& e_v, const Var& e_s) {
  if (!w_h.valid() || !e.valid() || !e_a.valid() || !e_v.valid() || !e_s.valid()) {
    throw Error("FuseCell: missing cell context part");
  }
  return Relu(Linear(w_h, Concat({e, e_a, e_v, e_s})));
}

int Argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("Argmax of an empty vector");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace tcn
