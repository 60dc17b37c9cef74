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

#ifndef TCN_AUTODIFF_H_
#define TCN_AUTODIFF_H_

#include <deque>
#include <functional>
#include <vector>

#include "tcn/param_store.h"
#include "tcn/tensor.h"

namespace tcn {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  // Gradient after Tape::Backward; empty if the loss does not depend on it.
  const Tensor& grad() const;
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode gradient tape. Operations append nodes in evaluation order;
// Backward walks them in reverse, so the tape order is a topological order.
// One tape serves one forward/backward pass and is single-threaded.
class Tape {
 public:
  // Propagates the gradient of node `self` into its inputs.
  using BackwardFn = std::function<void(Tape& tape, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Tensor value);
  // Differentiable input whose gradient is read back through Var::grad().
  Var Leaf(Tensor value);
  // Parameter input; Backward adds its gradient into `param.grad`.
  Var Param(Parameter& param);

  // Records an operation result. `backward` may be empty when no input
  // requires a gradient.
  Var Record(Tensor value, bool requires_grad, BackwardFn backward);

  void Backward(const Var& loss);

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  // Accumulator for node `id`, zero-initialized on first use.
  Tensor& grad(int id);
  const Tensor& grad_or_empty(int id) const { return nodes_[id].grad; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  // A deque keeps node addresses stable, so value references survive later ops.
  std::deque<Node> nodes_;
};

}  // namespace tcn

#endif  // TCN_AUTODIFF_H_
