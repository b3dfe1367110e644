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

#include "vic/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vic/error.hpp"

namespace vic {

namespace {

// Shortest-augmenting-path Hungarian method with row/column potentials.
// Requires rows <= cols; returns the column assigned to each row.
std::vector<std::size_t> solve_rows_le_cols(const Tensor& a) {
  const std::size_t n = a.rows(), m = a.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double log_sum_exp(const std::vector<double>& xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

Assignment hungarian(const Tensor& cost) {
  if (cost.rank() != 2) throw Error(ErrorCode::shape_mismatch, "cost must be a matrix");
  if (!cost.all_finite()) throw Error(ErrorCode::non_finite, "hungarian cost contains non-finite entries");
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;
  if (cost.rows() <= cost.cols()) {
    const auto cols = solve_rows_le_cols(cost);
    for (std::size_t r = 0; r < cols.size(); ++r) out.pairs.emplace_back(r, cols[r]);
  } else {
    const auto rows = solve_rows_le_cols(cost.transposed());
    for (std::size_t c = 0; c < rows.size(); ++c) out.pairs.emplace_back(rows[c], c);
    std::sort(out.pairs.begin(), out.pairs.end());
  }
  for (const auto& [r, c] : out.pairs) out.total_cost += cost(r, c);
  return out;
}

double TransportPlan::cost(const Tensor& c) const {
  double s = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) s += plan[i] * c[i];
  return s;
}

std::pair<std::vector<double>, std::vector<double>> uniform_marginals(std::size_t rows, std::size_t cols) {
  return {std::vector<double>(rows, rows ? 1.0 / static_cast<double>(rows) : 0.0),
          std::vector<double>(cols, cols ? 1.0 / static_cast<double>(cols) : 0.0)};
}

TransportPlan sinkhorn(const Tensor& cost, const std::vector<double>& row_marginal,
                       const std::vector<double>& col_marginal, const SinkhornOptions& options) {
  const std::size_t n = cost.rows(), m = cost.cols();
  if (cost.rank() != 2 || row_marginal.size() != n || col_marginal.size() != m) {
    throw Error(ErrorCode::shape_mismatch, "marginals do not match cost " + cost.shape_string());
  }
  if (!(options.epsilon > 0.0)) throw Error(ErrorCode::invalid_config, "epsilon must be positive");
  if (!cost.all_finite()) throw Error(ErrorCode::non_finite, "sinkhorn cost contains non-finite entries");
  for (double a : row_marginal)
    if (!(a > 0.0)) throw Error(ErrorCode::marginal_mass_mismatch, "row marginal entries must be positive");
  for (double b : col_marginal)
    if (!(b > 0.0)) throw Error(ErrorCode::marginal_mass_mismatch, "column marginal entries must be positive");
  const double row_mass = std::accumulate(row_marginal.begin(), row_marginal.end(), 0.0);
  const double col_mass = std::accumulate(col_marginal.begin(), col_marginal.end(), 0.0);
  if (std::abs(row_mass - col_mass) > 1e-9) {
    throw Error(ErrorCode::marginal_mass_mismatch, "row mass " + std::to_string(row_mass) + " vs column mass " +
                                                       std::to_string(col_mass));
  }

  const double eps = options.epsilon;
  TransportPlan out;
  out.row_marginal = row_marginal;
  out.col_marginal = col_marginal;
  out.epsilon = eps;
  out.plan = Tensor(n, m);
  if (n == 0 || m == 0) {
    out.converged = true;
    return out;
  }

  std::vector<double> log_a(n), log_b(m);
  for (std::size_t i = 0; i < n; ++i) log_a[i] = std::log(row_marginal[i]);
  for (std::size_t j = 0; j < m; ++j) log_b[j] = std::log(col_marginal[j]);
  std::vector<double> f(n, 0.0), g(m, 0.0), scratch_m(m), scratch_n(n);

  auto residuals = [&]() {
    double row_res = 0.0, col_res = 0.0;
    std::vector<double> col_sums(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double p = std::exp((f[i] + g[j] - cost(i, j)) / eps);
        row_sum += p;
        col_sums[j] += p;
      }
      row_res = std::max(row_res, std::abs(row_sum - row_marginal[i]));
    }
    for (std::size_t j = 0; j < m; ++j) col_res = std::max(col_res, std::abs(col_sums[j] - col_marginal[j]));
    return std::pair{row_res, col_res};
  };

  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) scratch_m[j] = (g[j] - cost(i, j)) / eps;
      f[i] = eps * (log_a[i] - log_sum_exp(scratch_m));
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) scratch_n[i] = (f[i] - cost(i, j)) / eps;
      g[j] = eps * (log_b[j] - log_sum_exp(scratch_n));
    }
    out.iterations_used = it;
    const auto [row_res, col_res] = residuals();
    out.row_residual = row_res;
    out.col_residual = col_res;
    if (row_res <= options.tol && col_res <= options.tol) {
      out.converged = true;
      break;
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps);
  return out;
}

}  // namespace vic
