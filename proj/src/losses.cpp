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

#include "vic/losses.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vic/error.hpp"
#include "vic/ops.hpp"

namespace vic {

Var zscore(Var x) {
  const Var centered = ops::sub(x, ops::mean_all(x));
  const Var stddev = ops::sqrt(ops::mean_all(ops::square(centered)));
  return ops::divide(centered, ops::add_scalar(stddev, kZScoreSmoothing));
}

Var bidirectional_cost(Var affinity) {
  const Var e = ops::exp(affinity);
  const Var denom = ops::sub(ops::add(ops::sum_cols(e), ops::sum_rows(e)), e);
  return ops::add_scalar(ops::scale(ops::divide(e, denom), -1.0), 1.0);
}

Var displacement_cost(Var prior_cost) { return bidirectional_cost(ops::scale(zscore(prior_cost), -1.0)); }

Tensor displacement_cost(const Tensor& prior_cost) {
  Tape tape;
  return displacement_cost(tape.constant(prior_cost)).value();
}

Var cosine_similarity(Var f_prev, Var f_curr) {
  for (const Var& f : {f_prev, f_curr}) {
    const Tensor norms = ops::row_norm(f).value();
    for (double v : norms.values())
      if (!(v > 0.0)) throw Error(ErrorCode::zero_norm_feature, "feature row has zero norm");
  }
  const Var prev_unit = ops::divide(f_prev, ops::row_norm(f_prev));
  const Var curr_unit = ops::divide(f_curr, ops::row_norm(f_curr));
  return ops::matmul(curr_unit, ops::transpose(prev_unit));
}

Var appearance_cost(Var f_prev, Var f_curr) { return bidirectional_cost(zscore(cosine_similarity(f_prev, f_curr))); }

Tensor appearance_cost(const Tensor& f_prev, const Tensor& f_curr) {
  Tape tape;
  return appearance_cost(tape.constant(f_prev), tape.constant(f_curr)).value();
}

CostPair CostPair::mix(Tensor c_disp, Tensor c_appear, double lambda) {
  if (!c_disp.same_shape(c_appear)) throw Error(ErrorCode::shape_mismatch, "cost matrices differ in shape");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::invalid_config, "lambda must lie in [0,1]");
  Tensor combined = c_disp;
  for (std::size_t k = 0; k < combined.size(); ++k) combined[k] = lambda * c_disp[k] + (1.0 - lambda) * c_appear[k];
  return CostPair{std::move(c_disp), std::move(c_appear), std::move(combined), lambda};
}

const char* to_string(LossSign sign) { return sign == LossSign::literal ? "literal" : "cost_minimizing"; }

LossSign parse_loss_sign(const std::string& text) {
  if (text == "literal") return LossSign::literal;
  if (text == "cost_minimizing") return LossSign::cost_minimizing;
  throw Error(ErrorCode::invalid_config, "unknown loss sign '" + text + "'");
}

DotLoss dot_loss(Var c_disp, Var c_appear, const DotOptions& options) {
  if (!(options.lambda >= 0.0 && options.lambda <= 1.0)) {
    throw Error(ErrorCode::invalid_config, "lambda must lie in [0,1]");
  }
  Tape& tape = *c_disp.tape();
  DotLoss out;
  out.combined = ops::add(ops::scale(c_disp, options.lambda), ops::scale(c_appear, 1.0 - options.lambda));
  const Tensor& c = out.combined.value();
  const auto [a, b] = uniform_marginals(c.rows(), c.cols());
  out.plan = sinkhorn(c, a, b, options.sinkhorn);
  const Var plan = tape.constant(out.plan.plan);
  const double sign = options.sign == LossSign::literal ? -1.0 : 1.0;
  out.loss = ops::scale(ops::sum_all(ops::hadamard(out.combined, plan)), sign);
  return out;
}

std::pair<double, TransportPlan> dot_loss(const CostPair& costs, const DotOptions& options) {
  Tape tape;
  DotOptions o = options;
  o.lambda = costs.lambda;
  DotLoss r = dot_loss(tape.constant(costs.c_disp), tape.constant(costs.c_appear), o);
  return {r.loss.value()[0], std::move(r.plan)};
}

CandidateSet select_candidates(const Tensor& prev_pos, const Tensor& curr_pos, const Tensor& probabilities,
                               double radius, const std::vector<bool>* prev_persists,
                               const std::vector<bool>* curr_persists, bool propose_matches) {
  const std::size_t m = prev_pos.rows(), n = curr_pos.rows();
  if (probabilities.rows() != n || probabilities.cols() != m) {
    throw Error(ErrorCode::shape_mismatch, "probabilities do not match point counts");
  }
  if ((prev_persists && prev_persists->size() != m) || (curr_persists && curr_persists->size() != n)) {
    throw Error(ErrorCode::length_mismatch, "persistence flags do not match point counts");
  }
  CandidateSet out;
  out.radius = radius;
  std::set<PairIndex> proposed;
  std::set<PairIndex> positives;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const double dx = curr_pos(j, 0) - prev_pos(i, 0);
      const double dy = curr_pos(j, 1) - prev_pos(i, 1);
      if (std::sqrt(dx * dx + dy * dy) > radius) continue;
      const bool keep = (!curr_persists || (*curr_persists)[j]) && (!prev_persists || (*prev_persists)[i]);
      (keep ? positives : proposed).insert({j, i});
    }
  Tensor cost(n, m);
  for (std::size_t k = 0; k < cost.size(); ++k) cost[k] = 1.0 - probabilities[k];
  for (const auto& pair : hungarian(cost).pairs) proposed.insert(pair);
  if (propose_matches)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i)
        if (probabilities(j, i) >= 0.5) proposed.insert({j, i});
  out.positives.assign(positives.begin(), positives.end());
  for (const PairIndex& p : proposed)
    if (!positives.count(p)) out.negatives.push_back(p);
  return out;
}

Var cls_loss(Var probabilities, const CandidateSet& candidates) {
  Tape& tape = *probabilities.tape();
  const std::size_t count = candidates.positives.size() + candidates.negatives.size();
  if (count == 0) return tape.constant(Tensor::scalar(0.0));
  const std::size_t m = probabilities.cols();
  std::vector<std::size_t> index;
  Tensor target(count, 1);
  index.reserve(count);
  for (const auto& [j, i] : candidates.positives) {
    target(index.size(), 0) = 1.0;
    index.push_back(j * m + i);
  }
  for (const auto& [j, i] : candidates.negatives) index.push_back(j * m + i);
  for (std::size_t k : index)
    if (k >= probabilities.value().size()) throw Error(ErrorCode::index_out_of_range, "candidate outside the pair grid");

  const Var flat = ops::reshape(probabilities, {probabilities.value().size(), 1});
  const Var p = ops::clamp(ops::gather_rows(flat, std::move(index)), kProbabilityClamp, 1.0 - kProbabilityClamp);
  const Var y = tape.constant(target);
  const Var not_y = tape.constant([&] {
    Tensor t = target;
    for (double& v : t.values()) v = 1.0 - v;
    return t;
  }());
  const Var log_p = ops::log(p);
  const Var log_q = ops::log(ops::add_scalar(ops::scale(p, -1.0), 1.0));
  const Var ll = ops::add(ops::hadamard(y, log_p), ops::hadamard(not_y, log_q));
  return ops::scale(ops::mean_all(ll), -1.0);
}

double cls_loss(const Tensor& probabilities, const CandidateSet& candidates) {
  Tape tape;
  return cls_loss(tape.constant(probabilities), candidates).value()[0];
}

Var total_loss(Var dot, Var cls) { return ops::add(dot, cls); }

}  // namespace vic
