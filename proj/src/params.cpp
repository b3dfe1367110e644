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

#include "vic/params.hpp"

#include <cmath>
#include <random>

#include "vic/ops.hpp"

namespace vic {

const char* to_string(HeadInput input) {
  switch (input) {
    case HeadInput::similarity: return "similarity";
    case HeadInput::modulated: return "modulated";
    case HeadInput::concat: return "concat";
  }
  return "modulated";
}

HeadInput parse_head_input(const std::string& text) {
  if (text == "similarity") return HeadInput::similarity;
  if (text == "modulated") return HeadInput::modulated;
  if (text == "concat") return HeadInput::concat;
  throw Error(ErrorCode::invalid_config, "unknown head input '" + text + "'");
}

std::size_t ModelShape::head_input_width() const {
  switch (head_input) {
    case HeadInput::similarity: return d;
    case HeadInput::modulated: return channels();
    case HeadInput::concat: return d + channels();
  }
  return d;
}

void ModelShape::validate() const {
  if (patch.area() == 0 || d % patch.area() != 0) {
    throw Error(ErrorCode::dimension_indivisible, "d = " + std::to_string(d) + " is not divisible by h*w = " +
                                                      std::to_string(patch.area()));
  }
  if (d % 4 != 0) throw Error(ErrorCode::dimension_indivisible, "d must be a multiple of 4 for position embedding");
  if (heads == 0 || d % heads != 0) throw Error(ErrorCode::invalid_config, "head count must divide d");
  if (head_layers == 0) throw Error(ErrorCode::invalid_config, "mlp head needs at least one layer");
  if (raw_dim == 0 || head_hidden == 0 || phi_hidden == 0) throw Error(ErrorCode::invalid_config, "zero width");
}

namespace {

Tensor gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Linear dense(std::size_t in, std::size_t out, double gain, std::mt19937_64& rng) {
  return Linear{gaussian(in, out, gain / std::sqrt(static_cast<double>(in)), rng), Tensor(1, out)};
}

}  // namespace

ModelParams ModelParams::init(const ModelShape& shape, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = shape.d, c = shape.channels();
  ModelParams p;
  p.shape = shape;

  p.embed = dense(shape.raw_dim, d, 0.3, rng);
  if (shape.raw_dim == d)
    for (std::size_t i = 0; i < d; ++i) p.embed.weight(i, i) += 1.0;

  const double attn_std = 1.0 / std::sqrt(static_cast<double>(d));
  p.w_q = gaussian(d, d, attn_std, rng);
  p.w_k = gaussian(d, d, attn_std, rng);
  p.w_v = gaussian(d, d, attn_std, rng);
  p.theta_raw = Tensor(1, 1, 0.0);

  p.phi_in = gaussian(2, shape.phi_hidden, 4.0, rng);
  p.phi_out = gaussian(shape.phi_hidden, c, 1.0 / std::sqrt(static_cast<double>(shape.phi_hidden)), rng);

  p.ffn = dense(d + 1, d, 0.1, rng);
  p.delta = dense(d, c, 1.0, rng);
  p.conv = dense(c, c, 1.0, rng);
  p.alpha = dense(c, c, 0.1, rng);
  for (double& v : p.alpha.bias.values()) v = 1.0;
  p.beta = dense(c, c, 0.1, rng);

  std::size_t in = shape.head_input_width();
  for (std::size_t layer = 0; layer < shape.head_layers; ++layer) {
    const bool last = layer + 1 == shape.head_layers;
    const std::size_t out = last ? 1 : shape.head_hidden;
    p.head.push_back(dense(in, out, last ? 0.1 : std::sqrt(2.0), rng));
    in = out;
  }
  return p;
}

double ModelParams::theta() const {
  const double x = theta_raw[0];
  return 1.0 / (1.0 + std::exp(-x));
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for_each([&](const std::string&, const Tensor& t) { total += t.size(); });
  return total;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

Var BoundLinear::operator()(Var x) const { return ops::linear(x, weight, bias); }

Var BoundParams::theta() const { return ops::sigmoid(theta_raw); }

BoundParams bind(const std::vector<Var>& leaves, std::size_t head_layers) {
  if (leaves.size() != 18 + 2 * head_layers) {
    throw Error(ErrorCode::size_mismatch, "bind: expected " + std::to_string(18 + 2 * head_layers) + " leaves, got " +
                                              std::to_string(leaves.size()));
  }
  BoundParams b;
  b.leaves = leaves;
  std::size_t k = 0;
  auto next = [&] { return leaves[k++]; };
  auto lin = [&] {
    BoundLinear out;
    out.weight = next();
    out.bias = next();
    return out;
  };
  // Order must match ModelParams::for_each.
  b.embed = lin();
  b.w_q = next();
  b.w_k = next();
  b.w_v = next();
  b.theta_raw = next();
  b.phi_in = next();
  b.phi_out = next();
  b.ffn = lin();
  b.delta = lin();
  b.conv = lin();
  b.alpha = lin();
  b.beta = lin();
  for (std::size_t i = 0; i < head_layers; ++i) b.head.push_back(lin());
  return b;
}

BoundParams bind(Tape& tape, const ModelParams& params) {
  std::vector<Var> leaves;
  params.for_each([&](const std::string&, const Tensor& t) { leaves.push_back(tape.leaf(t)); });
  return vic::bind(leaves, params.head.size());
}

ModelParams gradients(const Tape& tape, const BoundParams& bound, const ModelParams& params) {
  ModelParams g = params;
  std::size_t k = 0;
  g.for_each([&](const std::string&, Tensor& t) { t = tape.grad(bound.leaves[k++]); });
  return g;
}

}  // namespace vic
