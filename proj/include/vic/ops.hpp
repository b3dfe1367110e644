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
#include <vector>

#include "vic/tape.hpp"
#include "vic/tensor.hpp"

// Differentiable kernels. Every function records one node on the operands'
// tape and throws Error{shape_mismatch} on incompatible shapes. Binary
// elementwise ops broadcast an operand whose row or column count is 1.
namespace vic::ops {

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var divide(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var square(Var a);
Var clamp(Var a, double lo, double hi);

// theta^exponent elementwise for a 1x1 base theta > 0.
Var pow_base(Var theta, Var exponent);

Var softmax_rows(Var a);
Var layer_norm_rows(Var a, double eps = 1e-9);
Var row_norm(Var a);

Var sum_rows(Var a);
Var sum_cols(Var a);
Var sum_all(Var a);
Var mean_all(Var a);

// (count*group) x c -> count x c, mean over each run of `group` rows.
Var global_avg_pool(Var a, std::size_t group);
// count x c -> (count*group) x c, each row repeated `group` times.
Var repeat_rows(Var a, std::size_t group);

Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var gather_rows(Var a, std::vector<std::size_t> index);
Var reshape(Var a, std::vector<std::size_t> shape);

inline Var linear(Var x, Var weight, Var bias) { return add(matmul(x, weight), bias); }

// While alive, records the smallest distance between any relu or clamp input
// evaluated on this thread and that kernel's non-differentiable points, and
// the smallest non-zero row_norm output.
// Gradient checks use it to reject instances that sit on a kink.
class KinkMonitor {
 public:
  KinkMonitor();
  ~KinkMonitor();
  KinkMonitor(const KinkMonitor&) = delete;
  KinkMonitor& operator=(const KinkMonitor&) = delete;
  double margin() const noexcept { return margin_; }
  void note(double distance) noexcept;

 private:
  KinkMonitor* previous_;
  double margin_;
};

}  // namespace vic::ops

namespace vic {

// Plain-value versions used outside the tape.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& a);

// Sinusoidal 2D position embedding, count x d with d % 4 == 0. Channel block
// k is [sin(w_k x), cos(w_k x), sin(w_k y), cos(w_k y)].
Tensor position_embed(const Tensor& positions, std::size_t d);

}  // namespace vic
