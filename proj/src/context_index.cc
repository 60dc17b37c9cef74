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

#include "tcn/context_index.h"

#include <algorithm>
#include <fstream>
#include <random>

#include "tcn/binary_io.h"
#include "tcn/errors.h"

namespace tcn {

namespace {

constexpr char kMagic[8] = {'T', 'C', 'N', 'I', 'D', 'X', '\0', '\0'};
constexpr uint32_t kVersion = 1;

}  // namespace

const char* NeighborKindName(NeighborKind kind) {
  switch (kind) {
    case NeighborKind::kValue:
      return "value";
    case NeighborKind::kPosition:
      return "position";
    case NeighborKind::kTopic:
      return "topic";
  }
  return "unknown";
}

ContextIndex ContextIndex::Build(const LabeledDataset& ds,
                                 const IndexOptions& options) {
  if (options.budget < 1) throw ShapeError("sampling budget must be >= 1");
  ContextIndex index;
  index.options_ = options;
  index.tables_.resize(ds.tables.size());

  std::unordered_map<std::string, int> key_ids;
  auto key_of = [&](const std::string& value) {
    auto [it, inserted] = key_ids.emplace(value, static_cast<int>(index.value_keys_.size()));
    if (inserted) {
      index.value_keys_.push_back(value);
      index.value_postings_.emplace_back();
    }
    return it->second;
  };

  // Tables are visited in id order, so every posting list ends up sorted.
  for (const Table& t : ds.tables) {
    TableInfo& info = index.tables_[t.id];
    info.schema_id = t.schema_id;
    info.rows = t.num_rows();
    info.cols = t.num_cols();
    info.cell_keys.assign(t.num_cells(), -1);
    for (int m = 0; m < t.num_rows(); ++m) {
      for (int n = 0; n < t.num_cols(); ++n) {
        const Cell& c = t.cell(m, n);
        CellRef ref{t.id, m, n};
        if (c.indexable()) {
          int key = key_of(c.normalized);
          info.cell_keys[m * t.num_cols() + n] = key;
          index.value_postings_[key].push_back(ref);
        }
        if (m >= 1 || options.index_header_positions) {
          index.position_postings_[{t.schema_id, m, n}].push_back(ref);
        }
      }
    }
  }
  // Topic keys are resolved after all cell values are known. A topic that
  // never occurs as a cell value has no topic cells.
  for (const Table& t : ds.tables) {
    if (!t.topic.indexable()) continue;
    auto it = key_ids.find(t.topic.normalized);
    if (it != key_ids.end()) index.tables_[t.id].topic_key = it->second;
  }
  return index;
}

void ContextIndex::CheckRef(const CellRef& ref) const {
  if (ref.table < 0 || ref.table >= num_tables()) {
    throw ShapeError("cell reference to unknown table " + std::to_string(ref.table));
  }
  const TableInfo& info = tables_[ref.table];
  if (ref.row < 0 || ref.row >= info.rows || ref.col < 0 || ref.col >= info.cols) {
    throw ShapeError("cell reference (" + std::to_string(ref.row) + ", " +
                     std::to_string(ref.col) + ") outside table " +
                     std::to_string(ref.table));
  }
}

const std::vector<CellRef>* ContextIndex::Postings(const CellRef& target,
                                                   NeighborKind kind) const {
  CheckRef(target);
  const TableInfo& info = tables_[target.table];
  switch (kind) {
    case NeighborKind::kValue: {
      int key = info.cell_keys[target.row * info.cols + target.col];
      return key < 0 ? nullptr : &value_postings_[key];
    }
    case NeighborKind::kPosition: {
      auto it = position_postings_.find({info.schema_id, target.row, target.col});
      return it == position_postings_.end() ? nullptr : &it->second;
    }
    case NeighborKind::kTopic:
      return info.topic_key < 0 ? nullptr : &value_postings_[info.topic_key];
  }
  return nullptr;
}

std::vector<CellRef> ContextIndex::Neighbors(const CellRef& target,
                                             NeighborKind kind) const {
  std::vector<CellRef> out;
  const std::vector<CellRef>* postings = Postings(target, kind);
  if (postings == nullptr) return out;
  for (const CellRef& ref : *postings) {
    if (ref.table != target.table) out.push_back(ref);
  }
  return out;
}

size_t ContextIndex::NeighborCount(const CellRef& target, NeighborKind kind) const {
  const std::vector<CellRef>* postings = Postings(target, kind);
  if (postings == nullptr) return 0;
  return static_cast<size_t>(std::count_if(
      postings->begin(), postings->end(),
      [&](const CellRef& ref) { return ref.table != target.table; }));
}

std::vector<CellRef> ContextIndex::Sample(const CellRef& target, NeighborKind kind,
                                          uint64_t seed) const {
  std::vector<CellRef> all = Neighbors(target, kind);
  const size_t budget = static_cast<size_t>(options_.budget);
  if (all.size() <= budget) return all;
  // Partial Fisher-Yates over positions, then restore list order.
  std::mt19937_64 rng(seed);
  std::vector<size_t> pos(all.size());
  for (size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  for (size_t i = 0; i < budget; ++i) {
    std::uniform_int_distribution<size_t> pick(i, pos.size() - 1);
    std::swap(pos[i], pos[pick(rng)]);
  }
  pos.resize(budget);
  std::sort(pos.begin(), pos.end());
  std::vector<CellRef> out;
  out.reserve(budget);
  for (size_t p : pos) out.push_back(all[p]);
  return out;
}

bool ContextIndex::Matches(const LabeledDataset& ds) const {
  if (static_cast<int>(ds.tables.size()) != num_tables()) return false;
  for (const Table& t : ds.tables) {
    const TableInfo& info = tables_[t.id];
    if (info.schema_id != t.schema_id || info.rows != t.num_rows() ||
        info.cols != t.num_cols()) {
      return false;
    }
    for (int m = 0; m < t.num_rows(); ++m) {
      for (int n = 0; n < t.num_cols(); ++n) {
        int key = info.cell_keys[m * t.num_cols() + n];
        const Cell& c = t.cell(m, n);
        if ((key < 0) != !c.indexable()) return false;
        if (key >= 0 && value_keys_[key] != c.normalized) return false;
      }
    }
  }
  return true;
}

void ContextIndex::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write index snapshot " + path.string());
  using namespace binary;
  out.write(kMagic, sizeof(kMagic));
  WriteU32(out, kVersion);
  WriteI32(out, options_.budget);
  WriteU32(out, options_.index_header_positions ? 1 : 0);

  WriteU64(out, value_keys_.size());
  for (const std::string& key : value_keys_) WriteString(out, key);

  WriteU64(out, tables_.size());
  for (const TableInfo& info : tables_) {
    WriteI32(out, info.schema_id);
    WriteI32(out, info.rows);
    WriteI32(out, info.cols);
    WriteI32(out, info.topic_key);
    for (int key : info.cell_keys) WriteI32(out, key);
  }
  // Postings are derivable from the layout, but are stored so that loading is
  // a straight read with no regrouping.
  auto write_refs = [&](const std::vector<CellRef>& refs) {
    WriteU64(out, refs.size());
    for (const CellRef& r : refs) {
      WriteI32(out, r.table);
      WriteI32(out, r.row);
      WriteI32(out, r.col);
    }
  };
  for (const auto& refs : value_postings_) write_refs(refs);
  WriteU64(out, position_postings_.size());
  for (const auto& [key, refs] : position_postings_) {
    WriteI32(out, std::get<0>(key));
    WriteI32(out, std::get<1>(key));
    WriteI32(out, std::get<2>(key));
    write_refs(refs);
  }
  if (!out) throw DataError("failed writing index snapshot " + path.string());
}

ContextIndex ContextIndex::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index snapshot " + path.string());
  using namespace binary;
  char magic[sizeof(kMagic)];
  ReadExact(in, magic, sizeof(magic));
  if (!std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw DataError(path.string() + " is not an index snapshot");
  }
  uint32_t version = ReadU32(in);
  if (version != kVersion) {
    throw DataError("unsupported index snapshot version " + std::to_string(version));
  }
  ContextIndex index;
  index.options_.budget = ReadI32(in);
  index.options_.index_header_positions = ReadU32(in) != 0;
  if (index.options_.budget < 1) throw DataError("corrupt snapshot: budget < 1");

  auto read_count = [&](uint64_t limit) {
    uint64_t n = ReadU64(in);
    if (n > limit) throw DataError("corrupt snapshot: count out of range");
    return static_cast<size_t>(n);
  };
  const uint64_t kLimit = 1ULL << 31;
  index.value_keys_.resize(read_count(kLimit));
  for (auto& key : index.value_keys_) key = ReadString(in);

  index.tables_.resize(read_count(kLimit));
  for (TableInfo& info : index.tables_) {
    info.schema_id = ReadI32(in);
    info.rows = ReadI32(in);
    info.cols = ReadI32(in);
    info.topic_key = ReadI32(in);
    if (info.rows < 0 || info.cols < 0 ||
        static_cast<uint64_t>(info.rows) * static_cast<uint64_t>(info.cols) > kLimit) {
      throw DataError("corrupt snapshot: bad table shape");
    }
    info.cell_keys.resize(static_cast<size_t>(info.rows) * info.cols);
    for (int& key : info.cell_keys) key = ReadI32(in);
  }
  auto read_refs = [&]() {
    std::vector<CellRef> refs(read_count(kLimit));
    for (CellRef& r : refs) {
      r.table = ReadI32(in);
      r.row = ReadI32(in);
      r.col = ReadI32(in);
    }
    return refs;
  };
  index.value_postings_.resize(index.value_keys_.size());
  for (auto& refs : index.value_postings_) refs = read_refs();
  size_t positions = read_count(kLimit);
  for (size_t i = 0; i < positions; ++i) {
    int schema = ReadI32(in);
    int row = ReadI32(in);
    int col = ReadI32(in);
    index.position_postings_[{schema, row, col}] = read_refs();
  }
  // Reject dangling references before anyone dereferences them.
  const int num_keys = static_cast<int>(index.value_keys_.size());
  for (const TableInfo& info : index.tables_) {
    if (info.topic_key < -1 || info.topic_key >= num_keys) {
      throw DataError("corrupt snapshot: topic key out of range");
    }
    for (int key : info.cell_keys) {
      if (key < -1 || key >= num_keys) throw DataError("corrupt snapshot: value key out of range");
    }
  }
  auto check_refs = [&](const std::vector<CellRef>& refs) {
    for (const CellRef& r : refs) {
      if (r.table < 0 || r.table >= index.num_tables()) {
        throw DataError("corrupt snapshot: posting references unknown table");
      }
      const TableInfo& info = index.tables_[r.table];
      if (r.row < 0 || r.row >= info.rows || r.col < 0 || r.col >= info.cols) {
        throw DataError("corrupt snapshot: posting outside its table");
      }
    }
  };
  for (const auto& refs : index.value_postings_) check_refs(refs);
  for (const auto& [key, refs] : index.position_postings_) check_refs(refs);
  return index;
}

}  // namespace tcn
