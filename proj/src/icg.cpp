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

#include "vic/icg.hpp"

#include <cmath>

#include "vic/ops.hpp"

namespace vic {

const char* to_string(PriorSource source) {
  return source == PriorSource::cost ? "cost" : "raw_displacement";
}

PriorSource parse_prior_source(const std::string& text) {
  if (text == "cost") return PriorSource::cost;
  if (text == "raw_displacement") return PriorSource::raw_displacement;
  throw Error(ErrorCode::invalid_config, "unknown prior source '" + text + "'");
}

namespace {

void require_positions(const Tensor& pos) {
  if (pos.rank() != 2 || (pos.rows() > 0 && pos.cols() != 2)) {
    throw Error(ErrorCode::shape_mismatch, "positions must be count x 2, got " + pos.shape_string());
  }
}

Tensor stacked_positions(const Tensor& prev_pos, const Tensor& curr_pos) {
  const std::size_t m = prev_pos.rows(), n = curr_pos.rows();
  Tensor all(m + n, 2);
  for (std::size_t i = 0; i < m; ++i) {
    all(i, 0) = prev_pos(i, 0);
    all(i, 1) = prev_pos(i, 1);
  }
  for (std::size_t j = 0; j < n; ++j) {
    all(m + j, 0) = curr_pos(j, 0);
    all(m + j, 1) = curr_pos(j, 1);
  }
  return all;
}

}  // namespace

PriorVars build_prior(Tape& tape, const BoundParams& params, const ModelShape& shape, const Tensor& prev_pos,
                      const Tensor& curr_pos, PriorSource source) {
  require_positions(prev_pos);
  require_positions(curr_pos);
  const std::size_t m = prev_pos.rows(), n = curr_pos.rows(), total = m + n;
  const Tensor all = stacked_positions(prev_pos, curr_pos);

  PriorVars out;
  out.displacement = Tensor::zeros({n, m, 2});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      out.displacement.at(j, i, 0) = curr_pos(j, 0) - prev_pos(i, 0);
      out.displacement.at(j, i, 1) = curr_pos(j, 1) - prev_pos(i, 1);
    }

  // Row r * total + c holds position[r] - position[c].
  Tensor deltas(total * total, 2);
  for (std::size_t r = 0; r < total; ++r)
    for (std::size_t c = 0; c < total; ++c) {
      deltas(r * total + c, 0) = all(r, 0) - all(c, 0);
      deltas(r * total + c, 1) = all(r, 1) - all(c, 1);
    }

  const Var d_all = tape.constant(deltas);
  Var hidden = ops::matmul(d_all, params.phi_in);
  if (!shape.phi_linear) hidden = ops::tanh(hidden);
  const Var embedding_all = ops::matmul(hidden, params.phi_out);

  const Var norms = source == PriorSource::cost ? ops::row_norm(embedding_all) : ops::row_norm(d_all);
  out.full_cost = ops::reshape(norms, {total, total});
  out.prior_cost = ops::slice_cols(ops::slice_rows(out.full_cost, m, total), 0, m);

  std::vector<std::size_t> cross;
  cross.reserve(n * m);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) cross.push_back((m + j) * total + i);
  out.embedding = ops::gather_rows(embedding_all, std::move(cross));
  return out;
}

PriorField build_prior_field(const Tensor& prev_pos, const Tensor& curr_pos, const ModelParams& params,
                             PriorSource source) {
  Tape tape;
  const BoundParams bound = bind(tape, params);
  const PriorVars v = build_prior(tape, bound, params.shape, prev_pos, curr_pos, source);
  const std::size_t n = curr_pos.rows(), m = prev_pos.rows(), c = params.shape.channels();
  return PriorField{v.displacement, v.embedding.value().reshaped({n, m, c}), v.prior_cost.value(),
                    v.full_cost.value()};
}

Tensor concat_frames(const DescriptorSet& prev, const DescriptorSet& curr) {
  if (prev.d() != curr.d() || !(prev.patch() == curr.patch())) {
    throw Error(ErrorCode::dimension_mismatch, "descriptor widths " + std::to_string(prev.d()) + " and " +
                                                   std::to_string(curr.d()) + " differ");
  }
  const std::size_t m = prev.count(), n = curr.count(), d = prev.d();
  Tensor out(m + n, d);
  std::copy(prev.features().values().begin(), prev.features().values().end(), out.values().begin());
  std::copy(curr.features().values().begin(), curr.features().values().end(),
            out.values().begin() + static_cast<std::ptrdiff_t>(m * d));
  return out;
}

namespace {

// Weight matrix W with context = rowsum(map (.) W).
Tensor context_weights(std::size_t m, std::size_t n) {
  const std::size_t total = m + n;
  Tensor w(total, total);
  for (std::size_t r = 0; r < m && n > 0; ++r)
    for (std::size_t c = m; c < total; ++c) w(r, c) = 1.0 / static_cast<double>(n);
  for (std::size_t r = m; r < total && m > 0; ++r)
    for (std::size_t c = 0; c < m; ++c) w(r, c) = 1.0 / static_cast<double>(m);
  return w;
}

}  // namespace

Tensor context_scalars(const AttentionQuadrants& q) {
  const std::size_t m = q.m(), n = q.n();
  Tensor out(m + n, 1);
  for (std::size_t i = 0; i < m && n > 0; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += q.cls(i, j);
    out(i, 0) = s / static_cast<double>(n);
  }
  for (std::size_t j = 0; j < n && m > 0; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += q.match(j, i);
    out(m + j, 0) = s / static_cast<double>(m);
  }
  return out;
}

Var context_scalars(Var map, std::size_t m, std::size_t n) {
  const Var w = map.tape()->constant(context_weights(m, n));
  return ops::sum_rows(ops::hadamard(map, w));
}

AttentionVars self_attention(Var tokens, const BoundParams& params, std::size_t heads, std::optional<Var> gamma,
                             std::optional<Var> theta) {
  const std::size_t d = tokens.cols();
  if (heads == 0 || d % heads != 0) throw Error(ErrorCode::invalid_config, "head count must divide d");
  const std::size_t dh = d / heads;
  const Var normed = ops::layer_norm_rows(tokens);
  const Var q = ops::matmul(normed, params.w_q);
  const Var k = ops::matmul(normed, params.w_k);
  const Var v = ops::matmul(normed, params.w_v);

  std::optional<Var> decay;
  if (gamma) decay = ops::pow_base(theta ? *theta : params.theta(), *gamma);

  std::vector<Var> outputs, maps, effective;
  for (std::size_t h = 0; h < heads; ++h) {
    const Var qh = heads == 1 ? q : ops::slice_cols(q, h * dh, (h + 1) * dh);
    const Var kh = heads == 1 ? k : ops::slice_cols(k, h * dh, (h + 1) * dh);
    const Var vh = heads == 1 ? v : ops::slice_cols(v, h * dh, (h + 1) * dh);
    const Var logits = ops::scale(ops::matmul(qh, ops::transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    const Var a = ops::softmax_rows(logits);
    const Var eff = decay ? ops::hadamard(a, *decay) : a;
    outputs.push_back(ops::matmul(eff, vh));
    maps.push_back(a);
    effective.push_back(eff);
  }

  auto average = [heads](const std::vector<Var>& xs) {
    if (heads == 1) return xs.front();
    Var acc = xs.front();
    for (std::size_t h = 1; h < xs.size(); ++h) acc = ops::add(acc, xs[h]);
    return ops::scale(acc, 1.0 / static_cast<double>(heads));
  };
  return AttentionVars{heads == 1 ? outputs.front() : ops::concat_cols(outputs), average(maps), average(effective)};
}

IcgVars icg_forward(Var tokens, std::size_t m, std::size_t n, const BoundParams& params, const ModelShape& shape,
                    std::optional<Var> gamma_full, const IcgOptions& options) {
  if (tokens.rows() != m + n) throw Error(ErrorCode::size_mismatch, "token count differs from m + n");
  if (options.dasa && !gamma_full) throw Error(ErrorCode::invalid_config, "DASA requires a prior field");
  Tape& tape = *tokens.tape();
  std::optional<Var> theta;
  if (options.theta_override) theta = tape.constant(Tensor::scalar(*options.theta_override));

  IcgVars out;
  out.attention = self_attention(tokens, params, shape.heads, options.dasa ? gamma_full : std::nullopt, theta);
  const Var hidden = ops::add(tokens, out.attention.output);
  out.context = context_scalars(out.attention.modulated, m, n);
  const Var joined = ops::concat_cols({hidden, out.context});
  out.enriched = ops::add(hidden, ops::relu(params.ffn(joined)));
  return out;
}

IcgOutput icg_forward(const DescriptorSet& prev, const DescriptorSet& curr, const PriorField* prior,
                      const ModelParams& params, const IcgOptions& options) {
  if (options.dasa && prior == nullptr) throw Error(ErrorCode::invalid_config, "DASA requires a prior field");
  const std::size_t m = prev.count(), n = curr.count();
  Tape tape;
  const BoundParams bound = bind(tape, params);
  const Var tokens = tape.constant(concat_frames(prev, curr));
  std::optional<Var> gamma;
  if (options.dasa) gamma = tape.constant(prior->full_cost);
  const IcgVars v = icg_forward(tokens, m, n, bound, params.shape, gamma, options);
  return IcgOutput{v.enriched.value(), split_quadrants(v.attention.map.value(), m, n), v.context.value(),
                   v.attention.map.value(), v.attention.modulated.value()};
}

}  // namespace vic
