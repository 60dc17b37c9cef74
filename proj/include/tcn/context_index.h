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

#ifndef TCN_CONTEXT_INDEX_H_
#define TCN_CONTEXT_INDEX_H_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "tcn/corpus.h"

namespace tcn {

// Location of a cell: table k, row m, column n.
struct CellRef {
  int table = 0;
  int row = 0;
  int col = 0;

  auto operator<=>(const CellRef&) const = default;
};

enum class NeighborKind { kValue = 0, kPosition = 1, kTopic = 2 };
inline constexpr int kNumNeighborKinds = 3;

const char* NeighborKindName(NeighborKind kind);

struct IndexOptions {
  // Per-cell cap on sampled neighbors, shared by all three kinds.
  int budget = 20;
  // Include header cells (row 0) in the position index. Same-schema headers
  // are identical, so they are left out by default.
  bool index_header_positions = false;

  bool operator==(const IndexOptions&) const = default;
};

// Inverted lookups from a cell to its inter-table neighbors:
//   value:    cells of other tables with the same normalized value (N_v)
//   position: cells at the same (row, column) in other tables of the same
//             schema (N_s)
//   topic:    cells of other tables whose value equals this table's topic
//             (N_p)
// Empty and masked cells are never value or topic keys. Immutable after Build.
class ContextIndex {
 public:
  ContextIndex() = default;

  static ContextIndex Build(const LabeledDataset& ds, const IndexOptions& options);

  int budget() const { return options_.budget; }
  const IndexOptions& options() const { return options_; }
  int num_tables() const { return static_cast<int>(tables_.size()); }

  // Full neighbor set of `target`, ordered by (table, row, col).
  std::vector<CellRef> Neighbors(const CellRef& target, NeighborKind kind) const;
  size_t NeighborCount(const CellRef& target, NeighborKind kind) const;

  // At most budget() neighbors drawn uniformly without replacement. The
  // result depends only on the target, kind and seed, and is returned in
  // (table, row, col) order.
  std::vector<CellRef> Sample(const CellRef& target, NeighborKind kind,
                              uint64_t seed) const;

  // Binary snapshot: magic, version, options, per-table layout, then the
  // length-prefixed value and position postings.
  void Save(const std::filesystem::path& path) const;
  static ContextIndex Load(const std::filesystem::path& path);

  // True if the snapshot was built over a corpus with this layout.
  bool Matches(const LabeledDataset& ds) const;

  bool operator==(const ContextIndex&) const = default;

 private:
  struct TableInfo {
    int schema_id = 0;
    int rows = 0;
    int cols = 0;
    int topic_key = -1;             // value key of the topic, or -1
    std::vector<int> cell_keys;     // value key per cell (row-major), or -1
    bool operator==(const TableInfo&) const = default;
  };

  using PositionKey = std::tuple<int, int, int>;  // (schema, row, col)

  const std::vector<CellRef>* Postings(const CellRef& target,
                                       NeighborKind kind) const;
  void CheckRef(const CellRef& ref) const;

  IndexOptions options_;
  std::vector<TableInfo> tables_;
  std::vector<std::string> value_keys_;
  std::vector<std::vector<CellRef>> value_postings_;
  std::map<PositionKey, std::vector<CellRef>> position_postings_;
};

}  // namespace tcn

#endif  // TCN_CONTEXT_INDEX_H_
