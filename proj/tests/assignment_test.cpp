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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "vic/assignment.hpp"
#include "vic/error.hpp"

namespace vic {
namespace {

using testing::brute_force_assignment;
using testing::random_tensor;

Tensor integer_costs(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(0, 50);
  Tensor c(rows, cols);
  for (double& v : c.values()) v = dist(rng);
  return c;
}

TEST(Hungarian, Examples) {
  const Assignment a = hungarian(Tensor::matrix({{1, 2}, {2, 1}}));
  EXPECT_EQ(a.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
  EXPECT_EQ(a.total_cost, 2.0);
  const Assignment d = hungarian(Tensor::matrix({{0, 9, 9}, {9, 0, 9}, {9, 9, 0}}));
  EXPECT_EQ(d.total_cost, 0.0);
  for (const auto& [r, c] : d.pairs) EXPECT_EQ(r, c);
}

TEST(Hungarian, SixBySixMatchesAllPermutations) {
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor c = integer_costs(6, 6, rng);
    EXPECT_EQ(hungarian(c).total_cost, brute_force_assignment(c));
  }
}

TEST(Hungarian, RectangularCoversSmallerSide) {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    const std::size_t rows = dim(rng), cols = dim(rng);
    const Tensor c = integer_costs(rows, cols, rng);
    const Assignment a = hungarian(c);
    ASSERT_EQ(a.pairs.size(), std::min(rows, cols));
    double sum = 0.0;
    std::vector<bool> row_used(rows), col_used(cols);
    for (std::size_t k = 0; k < a.pairs.size(); ++k) {
      const auto [r, col] = a.pairs[k];
      EXPECT_FALSE(row_used[r] || col_used[col]);
      row_used[r] = col_used[col] = true;
      if (k > 0) {
        EXPECT_LT(a.pairs[k - 1].first, r);
      }
      sum += c(r, col);
    }
    EXPECT_EQ(sum, a.total_cost);
    EXPECT_EQ(a.total_cost, brute_force_assignment(c));
  }
}

TEST(Hungarian, RejectsNonFinite) {
  Tensor c(2, 2);
  c[1] = std::nan("");
  try {
    hungarian(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_finite);
  }
}

TEST(Hungarian, EmptyMatrix) { EXPECT_TRUE(hungarian(Tensor(0, 3)).pairs.empty()); }

TEST(Sinkhorn, ConstantCostGivesOuterProduct) {
  const auto [r, c] = uniform_marginals(3, 4);
  const TransportPlan p = sinkhorn(Tensor(3, 4, 0.7), r, c);
  ASSERT_TRUE(p.converged);
  for (double v : p.plan.values()) EXPECT_NEAR(v, 1.0 / 12.0, 1e-12);
}

TEST(Sinkhorn, TwoByTwoMatchesLpVertex) {
  const auto [r, c] = uniform_marginals(2, 2);
  SinkhornOptions o;
  o.epsilon = 0.01;
  const TransportPlan p = sinkhorn(Tensor::matrix({{0, 1}, {1, 0}}), r, c, o);
  const Tensor lp = Tensor::matrix({{0.5, 0}, {0, 0.5}});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p.plan[i], lp[i], 1e-3);
}

TEST(Sinkhorn, ConvergedResidualsWithinTolerance) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor cost = random_tensor({10, 10}, rng, 0.0, 1.0);
    const auto [r, c] = uniform_marginals(10, 10);
    const TransportPlan p = sinkhorn(cost, r, c);
    ASSERT_TRUE(p.converged);
    EXPECT_LE(p.iterations_used, 500u);
    EXPECT_LE(p.row_residual, 1e-6);
    EXPECT_LE(p.col_residual, 1e-6);
    for (std::size_t i = 0; i < 10; ++i) {
      double rs = 0.0, cs = 0.0;
      for (std::size_t j = 0; j < 10; ++j) {
        rs += p.plan(i, j);
        cs += p.plan(j, i);
        EXPECT_GE(p.plan(i, j), 0.0);
      }
      EXPECT_NEAR(rs, r[i], 1e-6);
      EXPECT_NEAR(cs, c[i], 1e-6);
    }
  }
}

TEST(Sinkhorn, SmallEpsilonNearLpOptimum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor cost = random_tensor({5, 5}, rng, 0.0, 1.0);
    // Unit marginals: each row and column carries mass 1.
    const std::vector<double> ones(5, 1.0);
    SinkhornOptions o;
    o.epsilon = 0.01;
    o.max_iter = 5000;
    const TransportPlan p = sinkhorn(cost, ones, ones, o);
    const double optimum = brute_force_assignment(cost);  // LP optimum with unit marginals
    EXPECT_LE(p.cost(cost), 1.05 * optimum + 1e-12);
    // Near-degenerate instances converge slowly at this epsilon; whatever
    // marginal error remains bounds how far the plan can undercut the LP.
    EXPECT_LE(p.row_residual, 1e-3);
    EXPECT_GE(p.cost(cost), optimum - 25.0 * std::max(p.row_residual, p.col_residual));
  }
}

TEST(Sinkhorn, CostMonotoneInEpsilon) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Tensor cost = random_tensor({5, 5}, rng, 0.0, 1.0);
    const auto [r, c] = uniform_marginals(5, 5);
    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {1.0, 0.5, 0.2, 0.1, 0.05}) {
      SinkhornOptions o;
      o.epsilon = eps;
      o.max_iter = 100000;
      o.tol = 1e-9;
      const TransportPlan p = sinkhorn(cost, r, c, o);
      ASSERT_TRUE(p.converged);
      EXPECT_LE(p.cost(cost), previous + 1e-9);
      previous = p.cost(cost);
    }
  }
}

TEST(Sinkhorn, LargeCostsStayFinite) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor cost = random_tensor({6, 4}, rng, -1e3, 1e3);
    const auto [r, c] = uniform_marginals(6, 4);
    SinkhornOptions o;
    o.epsilon = 1e-3;
    const TransportPlan p = sinkhorn(cost, r, c, o);
    EXPECT_TRUE(p.plan.all_finite());
  }
}

TEST(Sinkhorn, NonConvergenceIsFlagged) {
  std::mt19937_64 rng(14);
  const auto [r, c] = uniform_marginals(6, 6);
  SinkhornOptions o;
  o.epsilon = 1e-3;
  o.max_iter = 1;
  o.tol = 1e-14;
  const TransportPlan p = sinkhorn(random_tensor({6, 6}, rng, 0.0, 1.0), r, c, o);
  EXPECT_FALSE(p.converged);
  EXPECT_EQ(p.iterations_used, 1u);
}

TEST(Sinkhorn, MarginalErrors) {
  try {
    sinkhorn(Tensor(2, 2), {0.5, 0.5}, {0.3, 0.3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::marginal_mass_mismatch);
  }
  EXPECT_THROW(sinkhorn(Tensor(2, 2), {1.0, 0.0}, {0.5, 0.5}), Error);
  EXPECT_THROW(sinkhorn(Tensor(2, 3), {0.5, 0.5}, {0.5, 0.5}), Error);
}

TEST(Sinkhorn, UniformMarginalsHaveEqualMass) {
  const auto [r, c] = uniform_marginals(3, 7);
  double rs = 0.0, cs = 0.0;
  for (double v : r) rs += v;
  for (double v : c) cs += v;
  EXPECT_NEAR(rs, 1.0, 1e-15);
  EXPECT_NEAR(cs, 1.0, 1e-15);
}

}  // namespace
}  // namespace vic
