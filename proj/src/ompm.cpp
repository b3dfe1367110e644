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

#include "vic/ompm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vic/assignment.hpp"
#include "vic/ops.hpp"

namespace vic {

PairSimilarity pair_similarity(std::span<const double> f_prev, std::span<const double> f_curr, PatchShape patch) {
  if (f_prev.size() != f_curr.size()) {
    throw Error(ErrorCode::dimension_mismatch, "similarity of widths " + std::to_string(f_prev.size()) + " and " +
                                                   std::to_string(f_curr.size()));
  }
  const std::size_t d = f_prev.size();
  if (patch.area() == 0 || d % patch.area() != 0) {
    throw Error(ErrorCode::dimension_indivisible, "d is not divisible by the patch area");
  }
  Tensor v(1, d);
  for (std::size_t k = 0; k < d; ++k) v[k] = f_prev[k] * f_curr[k];
  return PairSimilarity{v, v.reshaped({patch.h, patch.w, d / patch.area()})};
}

Var pairwise_similarity(Var f_prev, Var f_curr) {
  if (f_prev.cols() != f_curr.cols()) throw Error(ErrorCode::dimension_mismatch, "feature widths differ");
  const std::size_t m = f_prev.rows(), n = f_curr.rows();
  std::vector<std::size_t> prev_index, curr_index;
  prev_index.reserve(n * m);
  curr_index.reserve(n * m);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      prev_index.push_back(i);
      curr_index.push_back(j);
    }
  return ops::hadamard(ops::gather_rows(f_prev, std::move(prev_index)), ops::gather_rows(f_curr, std::move(curr_index)));
}

ModulatorVars modulate(Var similarity, Var prior_embedding, const BoundParams& params, const ModelShape& shape) {
  const std::size_t pairs = similarity.rows(), area = shape.patch.area(), c = shape.channels();
  if (prior_embedding.rows() != pairs || prior_embedding.cols() != c) {
    throw Error(ErrorCode::shape_mismatch, "prior embedding does not match the pair batch");
  }
  ModulatorVars out;
  out.coarse = ops::layer_norm_rows(params.delta(similarity));
  const Var spatial = ops::reshape(similarity, {pairs * area, c});
  const Var response = ops::relu(params.conv(spatial));
  const Var gain = ops::repeat_rows(params.alpha(prior_embedding), area);
  const Var shift = ops::repeat_rows(params.beta(prior_embedding), area);
  out.fine = ops::add(ops::hadamard(gain, response), shift);
  out.fused = ops::add(out.coarse, ops::global_avg_pool(out.fine, area));
  return out;
}

Var head_logits(Var input, const BoundParams& params) {
  Var x = input;
  for (std::size_t layer = 0; layer < params.head.size(); ++layer) {
    x = params.head[layer](x);
    if (layer + 1 < params.head.size()) x = ops::relu(x);
  }
  return x;
}

PairwiseVars ompm_forward(Var f_prev, Var f_curr, std::optional<Var> prior_embedding, const BoundParams& params,
                          const ModelShape& shape) {
  const std::size_t m = f_prev.rows(), n = f_curr.rows();
  PairwiseVars out;
  out.similarity = pairwise_similarity(f_prev, f_curr);
  Var input = out.similarity;
  if (shape.head_input != HeadInput::similarity) {
    if (!prior_embedding) throw Error(ErrorCode::invalid_config, "head input needs the prior embedding");
    if (shape.head_input == HeadInput::modulated) {
      out.modulator = modulate(out.similarity, *prior_embedding, params, shape);
      input = out.modulator->fused;
    } else {
      input = ops::concat_cols({out.similarity, *prior_embedding});
    }
  }
  out.logits = head_logits(input, params);
  out.probabilities = ops::reshape(ops::sigmoid(out.logits), {n, m});
  return out;
}

ModulatedFeature modulate(const PairSimilarity& s, const Tensor& prior_embedding_pair, const ModelParams& params) {
  Tape tape;
  const BoundParams bound = bind(tape, params);
  const Var sim = tape.constant(s.vector);
  const Var prior = tape.constant(prior_embedding_pair.reshaped({1, prior_embedding_pair.size()}));
  const ModulatorVars v = modulate(sim, prior, bound, params.shape);
  const PatchShape p = params.shape.patch;
  return ModulatedFeature{v.coarse.value(), v.fine.value().reshaped({p.h, p.w, params.shape.channels()}),
                          v.fused.value()};
}

double match_probability(const Tensor& head_input, const ModelParams& params) {
  Tape tape;
  const BoundParams bound = bind(tape, params);
  const Var x = tape.constant(head_input.reshaped({1, head_input.size()}));
  return ops::sigmoid(head_logits(x, bound)).value()[0];
}

const char* to_string(FlowCounting counting) {
  return counting == FlowCounting::coverage ? "coverage" : "pair_sum";
}

FlowCounting parse_flow_counting(const std::string& text) {
  if (text == "coverage") return FlowCounting::coverage;
  if (text == "pair_sum") return FlowCounting::pair_sum;
  throw Error(ErrorCode::invalid_config, "unknown flow counting '" + text + "'");
}

namespace {

void check_probabilities(const Tensor& p) {
  if (p.rank() != 2) throw Error(ErrorCode::shape_mismatch, "probabilities must be n x m");
  for (double v : p.values())
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::probability_out_of_range, "probability " + std::to_string(v));
}

void count_coverage(MatchResult& r) {
  const std::size_t n = r.match_matrix.rows(), m = r.match_matrix.cols();
  std::vector<char> prev_covered(m, 0);
  std::size_t curr_covered = 0;
  for (std::size_t j = 0; j < n; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < m; ++i)
      if (r.match_matrix(j, i) != 0.0) {
        any = true;
        prev_covered[i] = 1;
      }
    curr_covered += any ? 1 : 0;
  }
  r.inflow = n - curr_covered;
  r.outflow = m - static_cast<std::size_t>(std::count(prev_covered.begin(), prev_covered.end(), 1));
}

}  // namespace

MatchResult derive_flows(const Tensor& probabilities, std::size_t eta, FlowCounting counting) {
  check_probabilities(probabilities);
  if (eta == 0) throw Error(ErrorCode::invalid_config, "group cap must be positive");
  const std::size_t n = probabilities.rows(), m = probabilities.cols();
  MatchResult r;
  r.probabilities = probabilities;
  r.match_matrix = Tensor(n, m);
  r.group_cap = eta;
  std::size_t pairs = 0;
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < n; ++j) {
    cols.clear();
    for (std::size_t i = 0; i < m; ++i)
      if (probabilities(j, i) >= 0.5) cols.push_back(i);
    std::stable_sort(cols.begin(), cols.end(),
                     [&](std::size_t a, std::size_t b) { return probabilities(j, a) > probabilities(j, b); });
    if (cols.size() > eta) cols.resize(eta);
    for (std::size_t i : cols) r.match_matrix(j, i) = 1.0;
    pairs += cols.size();
  }
  if (counting == FlowCounting::coverage) {
    count_coverage(r);
  } else {
    r.inflow = pairs >= n ? 0 : n - pairs;
    r.outflow = pairs >= m ? 0 : m - pairs;
  }
  return r;
}

MatchResult derive_flows_one_to_one(const Tensor& probabilities) {
  check_probabilities(probabilities);
  const std::size_t n = probabilities.rows(), m = probabilities.cols();
  MatchResult r;
  r.probabilities = probabilities;
  r.match_matrix = Tensor(n, m);
  r.group_cap = 1;
  Tensor cost(n, m);
  for (std::size_t k = 0; k < cost.size(); ++k) cost[k] = 1.0 - probabilities[k];
  for (const auto& [j, i] : hungarian(cost).pairs)
    if (probabilities(j, i) >= 0.5) r.match_matrix(j, i) = 1.0;
  count_coverage(r);
  return r;
}

}  // namespace vic
