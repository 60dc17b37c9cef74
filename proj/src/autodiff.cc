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

#include "tcn/autodiff.h"

#include "tcn/errors.h"

namespace tcn {

const Tensor& Var::value() const { return tape_->value(id_); }

const Tensor& Var::grad() const { return tape_->grad_or_empty(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::Constant(Tensor value) { return Record(std::move(value), false, nullptr); }

Var Tape::Leaf(Tensor value) { return Record(std::move(value), true, nullptr); }

Var Tape::Param(Parameter& param) {
  Var v = Record(param.value, param.trainable, nullptr);
  nodes_[v.id_].param = &param;
  return v;
}

Var Tape::Record(Tensor value, bool requires_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Tape::grad(int id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor::ZerosLike(node.value);
  return node.grad;
}

void Tape::Backward(const Var& loss) {
  if (loss.tape_ != this) throw ShapeError("loss recorded on a different tape");
  if (value(loss.id_).size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " +
                     ShapeToString(value(loss.id_).shape()));
  }
  if (!nodes_[loss.id_].requires_grad) return;
  grad(loss.id_).Fill(1.0);
  for (int id = loss.id_; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, id);
  }
  for (Node& node : nodes_) {
    if (node.param == nullptr || node.grad.empty()) continue;
    if (node.param->grad.empty()) {
      node.param->grad = node.grad;
    } else {
      node.param->grad.AddInPlace(node.grad);
    }
  }
}

}  // namespace tcn
