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

#include "tcn/corpus.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "tcn/context_index.h"
#include "tcn/errors.h"

namespace tcn {

using json = nlohmann::json;

namespace {

bool IsSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

[[noreturn]] void Fail(int record, std::string_view field, std::string_view what) {
  std::ostringstream msg;
  msg << "table " << record << ": field '" << field << "': " << what;
  throw DataError(msg.str());
}

std::vector<Cell> ParseCellArray(const json& value, int record,
                                 std::string_view field) {
  if (!value.is_array()) Fail(record, field, "expected an array of strings");
  std::vector<Cell> cells;
  cells.reserve(value.size());
  for (const json& v : value) {
    if (!v.is_string()) Fail(record, field, "expected an array of strings");
    cells.push_back(NormalizeCell(v.get<std::string>()));
  }
  return cells;
}

int ParseColumnKey(const std::string& key, int record, std::string_view field) {
  size_t pos = 0;
  int col = -1;
  try {
    col = std::stoi(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != key.size() || key.empty()) {
    Fail(record, field, "column key '" + key + "' is not an integer");
  }
  return col;
}

}  // namespace

std::string NormalizeText(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                       : static_cast<char>(c));
  }
  return out;
}

Cell NormalizeCell(std::string_view raw) {
  Cell cell;
  cell.raw = std::string(raw);
  cell.normalized = NormalizeText(raw);
  size_t start = 0;
  const std::string& s = cell.normalized;
  while (start < s.size()) {
    size_t end = s.find(' ', start);
    if (end == std::string::npos) end = s.size();
    cell.tokens.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return cell;
}

Cell MaskedCell() {
  Cell cell;
  cell.raw = "[MASK]";
  cell.masked = true;
  return cell;
}

bool Table::fully_labeled() const {
  for (int n = 0; n < num_cols(); ++n) {
    if (!column_types[n].has_value()) return false;
    if (n >= 1 && !column_relations[n].has_value()) return false;
  }
  return true;
}

std::optional<int> Ontology::TypeId(std::string_view name) const {
  auto it = std::find(types.begin(), types.end(), name);
  if (it == types.end()) return std::nullopt;
  return static_cast<int>(it - types.begin());
}

std::optional<int> Ontology::RelationId(std::string_view name) const {
  auto it = std::find(relations.begin(), relations.end(), name);
  if (it == relations.end()) return std::nullopt;
  return static_cast<int>(it - relations.begin());
}

Ontology Ontology::Parse(std::istream& in) {
  Ontology ontology;
  std::vector<std::string>* section = nullptr;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string name = line;
    while (!name.empty() && IsSpace(name.back())) name.pop_back();
    size_t lead = 0;
    while (lead < name.size() && IsSpace(name[lead])) ++lead;
    name = name.substr(lead);
    if (name.empty()) continue;
    if (name == "[types]") {
      section = &ontology.types;
    } else if (name == "[relations]") {
      section = &ontology.relations;
    } else if (section == nullptr) {
      throw DataError("ontology line " + std::to_string(line_no) +
                      ": name outside of a [types] or [relations] section");
    } else {
      if (std::find(section->begin(), section->end(), name) != section->end()) {
        throw DataError("ontology line " + std::to_string(line_no) +
                        ": duplicate name '" + name + "'");
      }
      section->push_back(name);
    }
  }
  return ontology;
}

Ontology Ontology::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ontology file " + path.string());
  return Parse(in);
}

void Ontology::Write(std::ostream& out) const {
  out << "[types]\n";
  for (const auto& t : types) out << t << "\n";
  out << "[relations]\n";
  for (const auto& r : relations) out << r << "\n";
}

void Ontology::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ontology file " + path.string());
  Write(out);
}

int LabeledDataset::num_schemas() const {
  std::set<int> ids;
  for (const Table& t : tables) ids.insert(t.schema_id);
  return static_cast<int>(ids.size());
}

int LabeledDataset::total_cells() const {
  int total = 0;
  for (const Table& t : tables) total += t.num_cells();
  return total;
}

void ValidateDataset(const LabeledDataset& ds) {
  std::map<int, const Table*> schema_header;
  for (int k = 0; k < ds.size(); ++k) {
    const Table& t = ds.tables[k];
    auto fail = [&](const std::string& what) {
      throw DataError("table " + std::to_string(k) + ": " + what);
    };
    if (t.id != k) fail("table id " + std::to_string(t.id) + " out of order");
    if (t.num_rows() < 2) fail("needs at least 2 rows including the header");
    if (t.num_cols() < 2) fail("needs at least 2 columns");
    for (int m = 0; m < t.num_rows(); ++m) {
      if (static_cast<int>(t.rows[m].size()) != t.num_cols()) {
        fail("ragged row " + std::to_string(m) + " has " +
             std::to_string(t.rows[m].size()) + " cells, expected " +
             std::to_string(t.num_cols()));
      }
    }
    if (static_cast<int>(t.column_types.size()) != t.num_cols() ||
        static_cast<int>(t.column_relations.size()) != t.num_cols()) {
      fail("label vectors do not match the column count");
    }
    if (t.column_relations[0].has_value()) {
      fail("relation label on the subject column");
    }
    for (int n = 0; n < t.num_cols(); ++n) {
      const auto& type = t.column_types[n];
      if (type && (*type < 0 || *type >= static_cast<int>(ds.ontology.types.size()))) {
        fail("type label out of range in column " + std::to_string(n));
      }
      const auto& rel = t.column_relations[n];
      if (rel && (*rel < 0 || *rel >= static_cast<int>(ds.ontology.relations.size()))) {
        fail("relation label out of range in column " + std::to_string(n));
      }
    }
    auto [it, inserted] = schema_header.emplace(t.schema_id, &t);
    if (!inserted) {
      const auto& a = it->second->header();
      const auto& b = t.header();
      bool same = a.size() == b.size();
      for (size_t i = 0; same && i < a.size(); ++i) {
        same = a[i].normalized == b[i].normalized;
      }
      if (!same) {
        fail("header differs from table " + std::to_string(it->second->id) +
             " of the same schema " + std::to_string(t.schema_id));
      }
    }
  }
}

LabeledDataset ParseCorpus(std::istream& in, const Ontology* ontology) {
  LabeledDataset ds;
  if (ontology != nullptr) ds.ontology = *ontology;
  std::unordered_set<int64_t> seen_ids;
  std::string line;
  int record = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      Fail(record, "<record>", std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) Fail(record, "<record>", "expected a JSON object");

    Table t;
    t.id = record;
    if (j.contains("table_id")) {
      if (!j["table_id"].is_number_integer()) Fail(record, "table_id", "expected an integer");
      int64_t id = j["table_id"].get<int64_t>();
      if (!seen_ids.insert(id).second) {
        Fail(record, "table_id", "duplicate table id " + std::to_string(id));
      }
    }
    if (!j.contains("schema_id") || !j["schema_id"].is_number_integer()) {
      Fail(record, "schema_id", "missing or not an integer");
    }
    t.schema_id = j["schema_id"].get<int>();
    if (!j.contains("topic") || !j["topic"].is_string()) {
      Fail(record, "topic", "missing or not a string");
    }
    t.topic = NormalizeCell(j["topic"].get<std::string>());
    if (!j.contains("header")) Fail(record, "header", "missing");
    t.rows.push_back(ParseCellArray(j["header"], record, "header"));
    if (!j.contains("rows") || !j["rows"].is_array()) {
      Fail(record, "rows", "missing or not an array");
    }
    for (const json& row : j["rows"]) {
      t.rows.push_back(ParseCellArray(row, record, "rows"));
      if (t.rows.back().size() != t.rows[0].size()) {
        Fail(record, "rows",
             "ragged row " + std::to_string(t.rows.size() - 1) + " has " +
                 std::to_string(t.rows.back().size()) + " cells, header has " +
                 std::to_string(t.rows[0].size()));
      }
    }
    const int cols = t.num_cols();
    t.column_types.assign(cols, std::nullopt);
    t.column_relations.assign(cols, std::nullopt);
    for (const char* field : {"type_labels", "relation_labels"}) {
      if (!j.contains(field)) continue;
      const json& labels = j[field];
      if (!labels.is_object()) Fail(record, field, "expected an object");
      const bool is_type = std::string_view(field) == "type_labels";
      for (auto it = labels.begin(); it != labels.end(); ++it) {
        if (ontology == nullptr) Fail(record, field, "labels require an ontology");
        int col = ParseColumnKey(it.key(), record, field);
        if (col < 0 || col >= cols) {
          Fail(record, field, "column " + std::to_string(col) + " out of bounds");
        }
        if (!is_type && col == 0) {
          Fail(record, field, "relation label on the subject column");
        }
        if (!it.value().is_string()) Fail(record, field, "label is not a string");
        std::string name = it.value().get<std::string>();
        std::optional<int> id =
            is_type ? ontology->TypeId(name) : ontology->RelationId(name);
        if (!id) Fail(record, field, "unknown label '" + name + "'");
        (is_type ? t.column_types : t.column_relations)[col] = *id;
      }
    }
    ds.tables.push_back(std::move(t));
    ++record;
  }
  ValidateDataset(ds);
  return ds;
}

LabeledDataset LoadCorpus(const std::filesystem::path& path,
                          const Ontology* ontology) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return ParseCorpus(in, ontology);
}

void WriteCorpus(const LabeledDataset& ds, std::ostream& out) {
  for (const Table& t : ds.tables) {
    json j;
    j["table_id"] = t.id;
    j["schema_id"] = t.schema_id;
    j["topic"] = t.topic.raw;
    json header = json::array();
    for (const Cell& c : t.header()) header.push_back(c.raw);
    j["header"] = header;
    json rows = json::array();
    for (int m = 1; m < t.num_rows(); ++m) {
      json row = json::array();
      for (const Cell& c : t.rows[m]) row.push_back(c.raw);
      rows.push_back(row);
    }
    j["rows"] = rows;
    json types = json::object();
    json relations = json::object();
    for (int n = 0; n < t.num_cols(); ++n) {
      if (t.column_types[n]) types[std::to_string(n)] = ds.ontology.types.at(*t.column_types[n]);
      if (t.column_relations[n]) {
        relations[std::to_string(n)] = ds.ontology.relations.at(*t.column_relations[n]);
      }
    }
    if (!types.empty()) j["type_labels"] = types;
    if (!relations.empty()) j["relation_labels"] = relations;
    out << j.dump() << "\n";
  }
}

void SaveCorpus(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  WriteCorpus(ds, out);
}

StatsReport CorpusStats(const LabeledDataset& ds, const ContextIndex& index) {
  StatsReport r;
  r.num_tables = ds.size();
  r.num_schemas = ds.num_schemas();
  if (ds.tables.empty()) return r;
  double rows = 0, cols = 0, nv = 0, ns = 0, np = 0;
  long data_cells = 0;
  for (const Table& t : ds.tables) {
    rows += t.num_data_rows();
    cols += t.num_cols();
    for (int m = 1; m < t.num_rows(); ++m) {
      for (int n = 0; n < t.num_cols(); ++n) {
        CellRef ref{t.id, m, n};
        nv += static_cast<double>(index.NeighborCount(ref, NeighborKind::kValue));
        ns += static_cast<double>(index.NeighborCount(ref, NeighborKind::kPosition));
        np += static_cast<double>(index.NeighborCount(ref, NeighborKind::kTopic));
        ++data_cells;
      }
    }
  }
  r.avg_rows = rows / ds.size();
  r.avg_cols = cols / ds.size();
  if (data_cells > 0) {
    r.avg_value_cells = nv / static_cast<double>(data_cells);
    r.avg_position_cells = ns / static_cast<double>(data_cells);
    r.avg_topic_cells = np / static_cast<double>(data_cells);
  }
  return r;
}

}  // namespace tcn
