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

#include "vic/tape.hpp"
#include "vic/tensor.hpp"

namespace vic {

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  std::size_t evaluations = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double tolerance = 1e-6;
  double step = 1e-5;
  // Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps entries
  // whose true derivative is ~0 from dominating through rounding noise.
  double floor = 1e-4;
};

// Compares `analytic` against central differences of f at x.
GradCheckReport check_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               const Tensor& analytic, const GradCheckOptions& options = {});

// Builds a scalar graph over leaves holding `inputs`, backpropagates once,
// then perturbs each leaf entry and replays the same tape for the numeric side.
using GraphBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;
GradCheckReport check_graph_gradient(const GraphBuilder& build, const std::vector<Tensor>& inputs,
                                     const GradCheckOptions& options = {});

}  // namespace vic
