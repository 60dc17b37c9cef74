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

#include "tcn/synthgen.h"

#include <algorithm>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "tcn/context_index.h"
#include "tcn/errors.h"
#include "tcn/hashing.h"

namespace tcn {

Ontology SynthOntology::Labels() const {
  Ontology o;
  o.types = types;
  for (const RelationSignature& r : relations) o.relations.push_back(r.name);
  return o;
}

void SynthOntology::Validate() const {
  const int nt = static_cast<int>(types.size());
  const int nr = static_cast<int>(relations.size());
  auto type_ok = [&](int t) { return t >= 0 && t < nt; };
  for (const RelationSignature& r : relations) {
    if (!type_ok(r.subject_type) || !type_ok(r.object_type)) {
      throw DataError("relation " + r.name + " references an unknown type");
    }
  }
  if (schemas.empty()) throw DataError("ontology has no schema templates");
  for (const SchemaTemplate& s : schemas) {
    const size_t cols = s.columns.size();
    if (cols < 2 || s.header.size() != cols) {
      throw DataError("schema " + s.name + ": inconsistent column count");
    }
    if (s.topic_types.empty()) throw DataError("schema " + s.name + ": no page kinds");
    for (int t : s.topic_types) {
      if (!type_ok(t)) throw DataError("schema " + s.name + ": unknown topic type");
    }
    for (const auto& choices : s.columns) {
      if (choices.size() != 1 && static_cast<int>(choices.size()) != s.num_kinds()) {
        throw DataError("schema " + s.name + ": a column needs one choice or one per page kind");
      }
    }
    for (int kind = 0; kind < s.num_kinds(); ++kind) {
      const ColumnChoice& subject = s.column(0, kind);
      if (!type_ok(subject.type) || subject.relation != -1) {
        throw DataError("schema " + s.name + ": bad subject column");
      }
      for (size_t n = 1; n < cols; ++n) {
        const ColumnChoice& c = s.column(static_cast<int>(n), kind);
        if (!type_ok(c.type)) throw DataError("schema " + s.name + ": unknown type");
        if (c.relation < 0 || c.relation >= nr) {
          throw DataError("schema " + s.name + ": unknown relation");
        }
        const RelationSignature& r = relations[c.relation];
        if (r.subject_type != subject.type || r.object_type != c.type) {
          throw DataError("schema " + s.name + ": relation " + r.name +
                          " does not fit its columns");
        }
      }
    }
  }
}

SynthOntology MusicOntology() {
  enum { kPeople, kRelease, kRecording, kLabel, kString, kDate, kDuration };
  enum {
    kHasPerformer, kHasComposer, kHasDuration, kRecordedOn, kReleaseDate, kReleasedBy,
    kDistributedBy, kHasProducer, kHasLength, kHasRole, kAppearsOn, kSignedTo,
    kBirthDate, kFoundedOn, kHasFounder, kHasGenre
  };
  SynthOntology o;
  o.types = {"People", "Release", "Recording", "RecordLabel", "XMLSchema#string",
             "Date", "Duration"};
  o.relations = {
      {"hasPerformer", kRecording, kPeople}, {"hasComposer", kRecording, kPeople},
      {"hasDuration", kRecording, kDuration}, {"recordedOn", kRecording, kDate},
      {"releaseDate", kRelease, kDate},      {"releasedBy", kRelease, kLabel},
      {"distributedBy", kRelease, kLabel},   {"hasProducer", kRelease, kPeople},
      {"hasLength", kRelease, kDuration},    {"hasRole", kPeople, kString},
      {"appearsOn", kPeople, kRecording},    {"signedTo", kPeople, kLabel},
      {"birthDate", kPeople, kDate},         {"foundedOn", kLabel, kDate},
      {"hasFounder", kLabel, kPeople},       {"hasGenre", kLabel, kString},
  };
  const std::vector<std::string> header = {"name", "value a", "value b"};
  auto subject = [](int type) { return std::vector<ColumnChoice>{{type, -1}}; };
  o.schemas = {
      {"tracks", header, {kRelease, kPeople},
       {subject(kRecording),
        {{kPeople, kHasPerformer}, {kPeople, kHasComposer}},
        {{kDuration, kHasDuration}, {kDate, kRecordedOn}}}},
      {"releases", header, {kPeople, kLabel},
       {subject(kRelease),
        {{kDate, kReleaseDate}, {kDuration, kHasLength}},
        {{kLabel, kReleasedBy}, {kLabel, kDistributedBy}}}},
      {"credits", header, {kRecording, kRelease},
       {subject(kPeople),
        {{kString, kHasRole}},
        {{kRecording, kAppearsOn}, {kLabel, kSignedTo}}}},
      {"labels", header, {kPeople, kLabel},
       {subject(kLabel),
        {{kPeople, kHasFounder}, {kString, kHasGenre}},
        {{kDate, kFoundedOn}}}},
      {"artists", header, {kLabel, kRelease},
       {subject(kPeople),
        {{kDate, kBirthDate}, {kString, kHasRole}},
        {{kLabel, kSignedTo}, {kRecording, kAppearsOn}}}},
      {"albums", header, {kLabel, kPeople},
       {subject(kRelease),
        {{kPeople, kHasProducer}},
        {{kDate, kReleaseDate}, {kDuration, kHasLength}}}},
  };
  return o;
}

void GenConfig::Validate() const {
  for (double r : {overlap_rate, topic_reference_rate, noise_rate, ambiguity_rate,
                   topic_ambiguity_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw DataError("generator rates must lie in [0, 1]");
  }
  if (num_schemas < 1 || tables_per_schema < 1) {
    throw DataError("need at least one schema and one table per schema");
  }
  if (min_rows < 1 || max_rows < min_rows) throw DataError("bad row range");
  if (entities_per_type < 1 || private_tokens_per_type < 1 || shared_tokens < 1) {
    throw DataError("token and entity pools must be non-empty");
  }
}

namespace {

class Generator {
 public:
  Generator(const SynthOntology& onto, const GenConfig& config)
      : onto_(onto), config_(config), rng_(config.seed) {
    MakeTokens();
    MakeEntities();
  }

  GenResult Run();

 private:
  std::string Word() {
    static const char kConsonants[] = "bdfgklmnprstvz";
    static const char kVowels[] = "aeiou";
    std::uniform_int_distribution<int> syllables(2, 3), c(0, 13), v(0, 4);
    std::string w;
    for (int i = syllables(rng_); i > 0; --i) {
      w += kConsonants[c(rng_)];
      w += kVowels[v(rng_)];
    }
    return w;
  }

  std::vector<std::string> UniqueWords(int count) {
    std::vector<std::string> out;
    for (int tries = 0; static_cast<int>(out.size()) < count; ++tries) {
      if (tries > count * 50) throw DataError("cannot draw enough distinct tokens");
      std::string w = Word();
      if (words_.insert(w).second) out.push_back(w);
    }
    return out;
  }

  void MakeTokens() {
    // Header words are reserved so no entity token coincides with them.
    for (const SchemaTemplate& s : onto_.schemas) {
      for (const std::string& h : s.header) {
        for (const std::string& t : NormalizeCell(h).tokens) words_.insert(t);
      }
    }
    shared_ = UniqueWords(config_.shared_tokens);
    for (size_t t = 0; t < onto_.types.size(); ++t) {
      private_.push_back(UniqueWords(config_.private_tokens_per_type));
    }
  }

  std::vector<std::vector<std::string>> MakePool(double ambiguity,
                                                  std::unordered_set<std::string>& seen) {
    std::bernoulli_distribution shared(ambiguity);
    std::uniform_int_distribution<int> length(1, 3);
    std::vector<std::vector<std::string>> pool(onto_.types.size());
    for (size_t t = 0; t < onto_.types.size(); ++t) {
      int tries = 0;
      while (static_cast<int>(pool[t].size()) < config_.entities_per_type) {
        if (++tries > config_.entities_per_type * 50) {
          throw DataError("cannot draw " + std::to_string(config_.entities_per_type) +
                          " distinct " + onto_.types[t] + " entities");
        }
        std::string e;
        for (int i = length(rng_); i > 0; --i) {
          const auto& src = shared(rng_) ? shared_ : private_[t];
          std::uniform_int_distribution<size_t> pick(0, src.size() - 1);
          if (!e.empty()) e += ' ';
          e += src[pick(rng_)];
        }
        if (seen.insert(e).second) pool[t].push_back(e);
      }
    }
    return pool;
  }

  void MakeEntities() {
    std::unordered_set<std::string> seen;
    pool_ = MakePool(config_.ambiguity_rate, seen);
    topic_pool_ = MakePool(config_.topic_ambiguity_rate, seen);
    next_fresh_.assign(onto_.types.size(), 0);
    next_topic_.assign(onto_.types.size(), 0);
    used_by_type_.resize(onto_.types.size());
  }

  std::string FreshTopic(int type) {
    if (next_topic_[type] >= topic_pool_[type].size()) {
      throw DataError("topic pool for type " + onto_.types[type] + " exhausted after " +
                      std::to_string(topic_pool_[type].size()) + " entities");
    }
    return topic_pool_[type][next_topic_[type]++];
  }

  std::string Fresh(int type) {
    if (next_fresh_[type] >= pool_[type].size()) {
      throw DataError("entity pool for type " + onto_.types[type] + " exhausted after " +
                      std::to_string(pool_[type].size()) + " entities");
    }
    return pool_[type][next_fresh_[type]++];
  }

  // An entity for a cell of `type`. `slot` keys the (schema, column) whose
  // earlier entities are preferred on reuse; -1 reuses across the type.
  std::string Entity(int type, int slot, const std::set<std::string>& in_table) {
    std::bernoulli_distribution reuse(config_.overlap_rate);
    if (reuse(rng_)) {
      const std::vector<std::string>* from = &used_by_type_[type];
      if (slot >= 0 && !used_by_slot_[slot].empty()) from = &used_by_slot_[slot];
      if (!from->empty()) {
        std::uniform_int_distribution<size_t> pick(0, from->size() - 1);
        const std::string& e = (*from)[pick(rng_)];
        if (!in_table.count(e)) return e;
      }
    }
    std::string e = Fresh(type);
    pending_.push_back({type, slot, e});
    return e;
  }

  struct Pending {
    int type, slot;
    std::string entity;
  };

  const SynthOntology& onto_;
  const GenConfig& config_;
  std::mt19937_64 rng_;
  std::unordered_set<std::string> words_;
  std::vector<std::string> shared_;
  std::vector<std::vector<std::string>> private_;
  std::vector<std::vector<std::string>> pool_;
  std::vector<size_t> next_fresh_;
  std::vector<std::vector<std::string>> topic_pool_;
  std::vector<size_t> next_topic_;
  std::vector<std::vector<std::string>> used_by_type_;
  std::map<int, std::vector<std::string>> used_by_slot_;
  // Fresh entities of the current table; they become reusable once the table
  // is finished, so reuse always crosses tables.
  std::vector<Pending> pending_;
};

GenResult Generator::Run() {
  const int num_templates = static_cast<int>(onto_.schemas.size());
  const int num_types = static_cast<int>(onto_.types.size());
  GenResult out;
  LabeledDataset& ds = out.dataset;
  ds.ontology = onto_.Labels();
  std::uniform_int_distribution<int> rows_dist(config_.min_rows, config_.max_rows);
  std::uniform_int_distribution<int> any_type(0, num_types - 1);
  std::bernoulli_distribution noise(config_.noise_rate);
  std::vector<int> topic_types;

  for (int s = 0; s < config_.num_schemas; ++s) {
    const SchemaTemplate& tmpl = onto_.schemas[s % num_templates];
    const int cols = static_cast<int>(tmpl.columns.size());
    std::uniform_int_distribution<int> kind_dist(0, tmpl.num_kinds() - 1);
    for (int i = 0; i < config_.tables_per_schema; ++i) {
      const int kind = kind_dist(rng_);
      Table t;
      t.id = ds.size();
      t.schema_id = s;
      t.topic = NormalizeCell(FreshTopic(tmpl.topic_types[kind]));
      topic_types.push_back(tmpl.topic_types[kind]);
      std::vector<Cell> header;
      for (const std::string& h : tmpl.header) header.push_back(NormalizeCell(h));
      t.rows.push_back(std::move(header));
      std::set<std::string> in_table = {t.topic.normalized};
      pending_.clear();
      for (int m = rows_dist(rng_); m > 0; --m) {
        std::vector<Cell> row;
        for (int n = 0; n < cols; ++n) {
          std::string e;
          if (noise(rng_)) {
            e = Entity(any_type(rng_), -1, in_table);
            out.stats.noisy_cells++;
          } else {
            const int type = tmpl.column(n, kind).type;
            e = Entity(type, (s * 64 + n) * 64 + kind, in_table);
          }
          in_table.insert(e);
          row.push_back(NormalizeCell(e));
        }
        t.rows.push_back(std::move(row));
      }
      for (const Pending& p : pending_) {
        used_by_type_[p.type].push_back(p.entity);
        if (p.slot >= 0) used_by_slot_[p.slot].push_back(p.entity);
      }
      for (int n = 0; n < cols; ++n) {
        const ColumnChoice& c = tmpl.column(n, kind);
        t.column_types.push_back(c.type);
        t.column_relations.push_back(n == 0 ? std::nullopt : std::optional<int>(c.relation));
      }
      ds.tables.push_back(std::move(t));
    }
  }

  // Plant topics as cells of other tables in columns of the topic's type.
  std::vector<std::vector<CellRef>> hosts(num_types);
  for (const Table& t : ds.tables) {
    for (int m = 1; m < t.num_rows(); ++m) {
      for (int n = 0; n < t.num_cols(); ++n) hosts[*t.column_types[n]].push_back({t.id, m, n});
    }
  }
  for (auto& h : hosts) std::shuffle(h.begin(), h.end(), rng_);
  std::vector<size_t> next_host(num_types, 0);
  std::bernoulli_distribution plant(config_.topic_reference_rate);
  for (Table& t : ds.tables) {
    if (!plant(rng_)) continue;
    const int type = topic_types[t.id];
    auto& h = hosts[type];
    size_t& next = next_host[type];
    while (next < h.size() && h[next].table == t.id) ++next;
    if (next >= h.size()) continue;
    const CellRef ref = h[next++];
    ds.tables[ref.table].rows[ref.row][ref.col] = t.topic;
    out.stats.topic_references++;
  }

  ValidateDataset(ds);
  StatsReport st = CorpusStats(ds, ContextIndex::Build(ds, IndexOptions{}));
  out.stats.num_tables = st.num_tables;
  out.stats.num_schemas = st.num_schemas;
  out.stats.avg_value_cells = st.avg_value_cells;
  out.stats.avg_position_cells = st.avg_position_cells;
  out.stats.avg_topic_cells = st.avg_topic_cells;
  return out;
}

}  // namespace

GenResult Generate(const SynthOntology& ontology, const GenConfig& config) {
  config.Validate();
  ontology.Validate();
  Generator g(ontology, config);
  return g.Run();
}

void WriteManifest(std::ostream& out, const GenConfig& config, const GenStats& stats) {
  nlohmann::ordered_json j;
  j["config"] = {{"num_schemas", config.num_schemas},
                 {"tables_per_schema", config.tables_per_schema},
                 {"min_rows", config.min_rows},
                 {"max_rows", config.max_rows},
                 {"overlap_rate", config.overlap_rate},
                 {"topic_reference_rate", config.topic_reference_rate},
                 {"noise_rate", config.noise_rate},
                 {"ambiguity_rate", config.ambiguity_rate},
                 {"topic_ambiguity_rate", config.topic_ambiguity_rate},
                 {"entities_per_type", config.entities_per_type},
                 {"private_tokens_per_type", config.private_tokens_per_type},
                 {"shared_tokens", config.shared_tokens},
                 {"seed", config.seed}};
  j["stats"] = {{"num_tables", stats.num_tables},
                {"num_schemas", stats.num_schemas},
                {"noisy_cells", stats.noisy_cells},
                {"topic_references", stats.topic_references},
                {"avg_value_cells", stats.avg_value_cells},
                {"avg_position_cells", stats.avg_position_cells},
                {"avg_topic_cells", stats.avg_topic_cells}};
  out << j.dump(2) << '\n';
}

}  // namespace tcn
