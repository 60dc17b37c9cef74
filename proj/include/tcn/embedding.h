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

#ifndef TCN_EMBEDDING_H_
#define TCN_EMBEDDING_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tcn/corpus.h"
#include "tcn/tensor.h"

namespace tcn {

// Token vectors used to build initial cell embeddings. A cell embeds as the
// mean of its known tokens' vectors; a cell with no known token (including
// empty and masked cells) embeds as the zero vector.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // `vectors` is [tokens.size() x dim]. Tokens must be unique.
  EmbeddingTable(std::vector<std::string> tokens, Tensor vectors);

  // One N(0, 1/dim) vector per distinct token of the corpus (cells and
  // topics). A token's vector depends only on the token and the seed.
  static EmbeddingTable Random(const LabeledDataset& ds, size_t dim, uint64_t seed);

  // Whitespace-separated text vectors ("token v1 v2 ..."), GloVe style. When
  // `keep` is given, other tokens are skipped.
  static EmbeddingTable LoadText(const std::filesystem::path& path,
                                 const std::unordered_set<std::string>* keep = nullptr);

  size_t dim() const { return vectors_.cols(); }
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const Tensor& vectors() const { return vectors_; }

  std::optional<int> Find(std::string_view token) const;
  // Ids of the known tokens of `cell`, in token order.
  std::vector<int> TokenIds(const Cell& cell) const;
  std::vector<double> CellEmbedding(const Cell& cell) const;

  // Fingerprint of the token list, used to match checkpoints to corpora.
  uint64_t VocabHash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  Tensor vectors_;
};

// Sorted distinct tokens of all cells and topics.
std::vector<std::string> CorpusTokens(const LabeledDataset& ds);

}  // namespace tcn

#endif  // TCN_EMBEDDING_H_
