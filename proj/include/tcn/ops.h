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

#ifndef TCN_OPS_H_
#define TCN_OPS_H_

#include <span>
#include <vector>

#include "tcn/autodiff.h"
#include "tcn/tensor.h"

// Differentiable primitives. All inputs of one call must live on the same
// tape. Shape violations throw ShapeError naming the offending shapes.
namespace tcn {

// [n x k] . [k x m] -> [n x m]
Var MatMul(const Var& a, const Var& b);

// w: [p x q]. x: [q] -> [p], or x: [n x q] -> [n x p] (each row times w^T).
Var Linear(const Var& w, const Var& x);

Var Add(const Var& a, const Var& b);
Var Scale(const Var& x, double factor);
Var Relu(const Var& x);

// Softmax of a vector, or of every row of a matrix. Max-shifted.
Var Softmax(const Var& x);

// Concatenation along the last axis: vectors end to end, or matrices with
// equal row counts side by side.
Var Concat(std::span<const Var> parts);
Var Concat(std::initializer_list<Var> parts);

// [n x d] -> [d], arithmetic mean of the rows. n must be positive.
Var MeanRows(const Var& m);

// Sum of all elements -> [1].
Var Sum(const Var& x);

Var Reshape(const Var& x, Shape shape);

// [N x d] -> [len(index) x d].
Var GatherRows(const Var& x, std::vector<int> index);

// Row i of the result is the mean of rows segments[i] of x; an empty segment
// yields a zero row. [N x d] -> [S x d].
Var SegmentMean(const Var& x, std::vector<std::vector<int>> segments);

// -log softmax(logits)[true_class] for logits [C] -> [1].
Var CrossEntropy(const Var& logits, int true_class);
// Sum over rows of the per-row cross entropy. logits [N x C] -> [1].
Var CrossEntropyRows(const Var& logits, std::span<const int> targets);

// Dot-product attention of each query over its own set of peer rows:
//   out[i] = sum_j softmax_j(query[i] . key[peers[i][j]]) * value[peers[i][j]]
// query [Nq x d], key [Nk x d], value [Nk x dv] -> [Nq x dv]. A query with no
// peers yields a zero row.
Var PeerAttention(const Var& query, const Var& key, const Var& value,
                  std::vector<std::vector<int>> peers);

// Multi-view attention pooling over neighbor rows. For target t with neighbor
// rows J = neighbors[t] and V views:
//   omega[v] = softmax_j(scores[J_j][v])             (one distribution per view)
//   out[t]   = mean_v sum_j omega[v][j] * contexts[J_j]
// contexts [N x D], scores [N x V] -> [T x D]. Targets without neighbors get a
// zero row.
Var MultiViewPool(const Var& contexts, const Var& scores,
                  std::vector<std::vector<int>> neighbors);

// Forward-only helpers shared with the differentiable ops, exposed so the
// attention weights can be inspected.
void SoftmaxInPlace(std::span<double> v);
std::vector<std::vector<double>> PeerAttentionWeights(
    const Tensor& query, const Tensor& key,
    const std::vector<std::vector<int>>& peers);
// Per target, the [V x |neighbors|] view weight matrix omega.
std::vector<Tensor> MultiViewWeights(const Tensor& scores,
                                     const std::vector<std::vector<int>>& neighbors);

}  // namespace tcn

#endif  // TCN_OPS_H_
