// Copyright 2026 The VIC Authors. All Rights Reserved.
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

#include "vic/tape.hpp"

#include "vic/error.hpp"

namespace vic {

const Tensor& Var::value() const { return tape_->value(id_); }
Tensor Var::grad() const { return tape_->grad(id_); }

Var Tape::make(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.is_leaf = true;
  return make(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.is_leaf = true;
  return make(std::move(n));
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, Forward forward,
                 Backward backward) {
  Node n;
  n.value = std::move(value);
  n.forward = std::move(forward);
  for (const Var& p : parents) {
    if (p.tape() != this) throw Error(ErrorCode::shape_mismatch, "operand from another tape");
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return make(std::move(n));
}

Tensor Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

void Tape::set_value(Var leaf, Tensor value) {
  Node& n = nodes_[leaf.id()];
  if (!n.is_leaf) throw Error(ErrorCode::shape_mismatch, "set_value on a non-leaf node");
  if (!n.value.same_shape(value)) throw Error(ErrorCode::shape_mismatch, "set_value shape");
  n.value = std::move(value);
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    n.grad = g.reshaped(n.value.shape());
    return;
  }
  double* dst = n.grad.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var root) {
  if (nodes_[root.id()].value.size() != 1) {
    throw Error(ErrorCode::shape_mismatch, "backward root must be a scalar");
  }
  accumulate(root.id(), Tensor::scalar(1.0));
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad = Tensor();
}

void Tape::replay() {
  for (Node& n : nodes_) {
    if (n.forward) n.value = n.forward(*this);
  }
}

}  // namespace vic
