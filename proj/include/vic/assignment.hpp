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
#include <utility>
#include <vector>

#include "vic/tensor.hpp"

namespace vic {

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), sorted by row
  double total_cost = 0.0;
};

// Minimum-cost one-to-one assignment covering min(rows, cols) pairs.
Assignment hungarian(const Tensor& cost);

struct SinkhornOptions {
  double epsilon = 0.1;
  std::size_t max_iter = 500;
  double tol = 1e-6;
};

struct TransportPlan {
  Tensor plan;
  std::vector<double> row_marginal;
  std::vector<double> col_marginal;
  double epsilon = 0.0;
  std::size_t iterations_used = 0;
  double row_residual = 0.0;  // max |plan row sum - target|
  double col_residual = 0.0;
  bool converged = false;

  double cost(const Tensor& c) const;
};

// Entropic OT by alternating log-domain scaling. Non-convergence is reported
// through `converged`, not thrown.
TransportPlan sinkhorn(const Tensor& cost, const std::vector<double>& row_marginal,
                       const std::vector<double>& col_marginal, const SinkhornOptions& options = {});

// Unit total mass spread evenly over rows and over columns.
std::pair<std::vector<double>, std::vector<double>> uniform_marginals(std::size_t rows, std::size_t cols);

}  // namespace vic
