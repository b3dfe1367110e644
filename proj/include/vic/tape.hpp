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

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "vic/tensor.hpp"

namespace vic {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Tensor grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode gradient tape. Nodes are recorded in topological order, so
// backward() walks them in reverse and replay() re-runs each forward closure
// in recording order against the current leaf values.
class Tape {
 public:
  using Forward = std::function<Tensor(const Tape&)>;
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);
  Var record(Tensor value, const std::vector<Var>& parents, Forward forward, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  // Zeros of the value's shape when no gradient reached the node.
  Tensor grad(std::size_t id) const;
  Tensor grad(Var v) const { return grad(v.id()); }
  // Gradient flowing into a node during backward(); only valid inside a Backward.
  const Tensor& out_grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  void set_value(Var leaf, Tensor value);
  void accumulate(std::size_t id, const Tensor& g);

  // Seeds d(root)/d(root) = 1 and propagates; root must hold one element.
  void backward(Var root);
  void zero_grad();
  void replay();

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Forward forward;
    Backward backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  Var make(Node node);

  std::vector<Node> nodes_;
};

}  // namespace vic
