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

#ifndef TCN_CORPUS_H_
#define TCN_CORPUS_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tcn {

// A table cell. The normalized form lowercases ASCII letters, collapses runs
// of whitespace into a single space and trims both ends; tokens are the
// space-split of the normalized form.
struct Cell {
  std::string raw;
  std::string normalized;
  std::vector<std::string> tokens;

  // Set on cells hidden for masked-value pre-training. A masked cell has no
  // tokens and never takes part in value or topic matching.
  bool masked = false;

  bool empty() const { return normalized.empty(); }
  // True if the cell can be matched by value against other cells.
  bool indexable() const { return !masked && !normalized.empty(); }

  bool operator==(const Cell&) const = default;
};

// Lowercases and collapses whitespace. Idempotent.
std::string NormalizeText(std::string_view raw);

Cell NormalizeCell(std::string_view raw);

// The reserved sentinel that replaces a masked cell.
Cell MaskedCell();

// A relational table. Row 0 is the header; column 0 is the subject column.
struct Table {
  int id = 0;
  int schema_id = 0;
  Cell topic;
  std::vector<std::vector<Cell>> rows;

  // Per-column labels. Relations are only defined for object columns, so
  // column_relations[0] is always empty.
  std::vector<std::optional<int>> column_types;
  std::vector<std::optional<int>> column_relations;

  int num_rows() const { return static_cast<int>(rows.size()); }
  int num_cols() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
  int num_data_rows() const { return num_rows() - 1; }
  int num_cells() const { return num_rows() * num_cols(); }
  const Cell& cell(int m, int n) const { return rows[m][n]; }
  const std::vector<Cell>& header() const { return rows[0]; }

  // True if every column has a type and every object column a relation.
  bool fully_labeled() const;

  bool operator==(const Table&) const = default;
};

// Label vocabularies C (column types) and R (relations).
struct Ontology {
  std::vector<std::string> types;
  std::vector<std::string> relations;

  std::optional<int> TypeId(std::string_view name) const;
  std::optional<int> RelationId(std::string_view name) const;

  // Ontology file: a "[types]" section followed by a "[relations]" section,
  // one name per line. Ids are the line order inside each section.
  static Ontology Parse(std::istream& in);
  static Ontology Load(const std::filesystem::path& path);
  void Write(std::ostream& out) const;
  void Save(const std::filesystem::path& path) const;

  bool operator==(const Ontology&) const = default;
};

struct LabeledDataset {
  std::vector<Table> tables;
  Ontology ontology;

  int size() const { return static_cast<int>(tables.size()); }
  // Number of distinct schema ids (U).
  int num_schemas() const;
  int total_cells() const;

  bool operator==(const LabeledDataset&) const = default;
};

// Checks every Table and LabeledDataset invariant; throws DataError naming the
// offending table on the first violation.
void ValidateDataset(const LabeledDataset& ds);

// Corpus files hold one JSON record per line:
//   {"schema_id": 3, "topic": "...", "header": [...], "rows": [[...], ...],
//    "type_labels": {"0": "People"}, "relation_labels": {"1": "hasPerformer"}}
// An optional "table_id" is checked for uniqueness; tables are renumbered
// 0..K-1 in file order. Label names resolve through `ontology`, which is
// required whenever a record carries labels.
LabeledDataset ParseCorpus(std::istream& in, const Ontology* ontology);
LabeledDataset LoadCorpus(const std::filesystem::path& path,
                          const Ontology* ontology);
void WriteCorpus(const LabeledDataset& ds, std::ostream& out);
void SaveCorpus(const LabeledDataset& ds, const std::filesystem::path& path);

class ContextIndex;

struct StatsReport {
  int num_tables = 0;          // K
  int num_schemas = 0;         // U
  double avg_rows = 0;         // data rows per table
  double avg_cols = 0;         // columns per table
  double avg_value_cells = 0;  // mean |N_v| over data cells
  double avg_position_cells = 0;
  double avg_topic_cells = 0;
};

// Table averages are over tables; neighbor averages are over data cells
// (row >= 1), so identical same-schema headers do not inflate |N_v|.
StatsReport CorpusStats(const LabeledDataset& ds, const ContextIndex& index);

}  // namespace tcn

#endif  // TCN_CORPUS_H_
