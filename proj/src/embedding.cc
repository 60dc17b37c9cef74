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

#include "tcn/embedding.h"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "tcn/errors.h"
#include "tcn/hashing.h"

namespace tcn {

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Tensor vectors)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
  if (vectors_.rank() != 2 || vectors_.rows() != tokens_.size()) {
    throw ShapeError("embedding matrix " + ShapeToString(vectors_.shape()) +
                     " does not match " + std::to_string(tokens_.size()) + " tokens");
  }
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate embedding token '" + tokens_[i] + "'");
    }
  }
}

EmbeddingTable EmbeddingTable::Random(const LabeledDataset& ds, size_t dim,
                                      uint64_t seed) {
  std::vector<std::string> tokens = CorpusTokens(ds);
  Tensor vectors({tokens.size(), dim});
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  for (size_t i = 0; i < tokens.size(); ++i) {
    std::mt19937_64 rng(DeriveSeed(seed, {Fingerprint(tokens[i])}));
    std::normal_distribution<double> normal(0.0, stddev);
    for (size_t c = 0; c < dim; ++c) vectors.at(i, c) = normal(rng);
  }
  return EmbeddingTable(std::move(tokens), std::move(vectors));
}

EmbeddingTable EmbeddingTable::LoadText(const std::filesystem::path& path,
                                        const std::unordered_set<std::string>* keep) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  std::vector<std::string> tokens;
  std::vector<double> values;
  size_t dim = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    if (keep != nullptr && !keep->count(token)) continue;
    std::vector<double> vec;
    double v;
    while (fields >> v) vec.push_back(v);
    if (!fields.eof()) {
      throw DataError("embedding line " + std::to_string(line_no) + ": bad number");
    }
    if (dim == 0) dim = vec.size();
    if (vec.empty() || vec.size() != dim) {
      throw DataError("embedding line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, got " + std::to_string(vec.size()));
    }
    tokens.push_back(token);
    values.insert(values.end(), vec.begin(), vec.end());
  }
  if (tokens.empty()) throw DataError("embedding file " + path.string() + " has no vectors");
  return EmbeddingTable(std::move(tokens), Tensor({tokens.size(), dim}, std::move(values)));
}

std::optional<int> EmbeddingTable::Find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> EmbeddingTable::TokenIds(const Cell& cell) const {
  std::vector<int> ids;
  if (cell.masked) return ids;
  for (const std::string& tok : cell.tokens) {
    if (auto id = Find(tok)) ids.push_back(*id);
  }
  return ids;
}

std::vector<double> EmbeddingTable::CellEmbedding(const Cell& cell) const {
  std::vector<double> out(dim(), 0.0);
  std::vector<int> ids = TokenIds(cell);
  if (ids.empty()) return out;
  for (int id : ids) {
    for (size_t c = 0; c < dim(); ++c) out[c] += vectors_.at(id, c);
  }
  for (double& v : out) v /= static_cast<double>(ids.size());
  return out;
}

uint64_t EmbeddingTable::VocabHash() const {
  uint64_t h = Fingerprint("tcn-token-vocab");
  for (const std::string& t : tokens_) h = Fingerprint(t, Mix64(h));
  return h;
}

std::vector<std::string> CorpusTokens(const LabeledDataset& ds) {
  std::set<std::string> tokens;
  for (const Table& t : ds.tables) {
    for (const std::string& tok : t.topic.tokens) tokens.insert(tok);
    for (const auto& row : t.rows) {
      for (const Cell& c : row) {
        for (const std::string& tok : c.tokens) tokens.insert(tok);
      }
    }
  }
  return {tokens.begin(), tokens.end()};
}

}  // namespace tcn
