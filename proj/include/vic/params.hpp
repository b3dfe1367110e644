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
#include <cstdint>
#include <string>
#include <vector>

#include "vic/core.hpp"
#include "vic/tape.hpp"
#include "vic/tensor.hpp"

namespace vic {

// What the match head consumes.
enum class HeadInput {
  similarity,  // s = f_prev (.) f_curr
  modulated,   // z_fused from the coarse-to-fine modulator
  concat,      // [s, prior embedding]
};

const char* to_string(HeadInput input);
HeadInput parse_head_input(const std::string& text);

struct ModelShape {
  std::size_t raw_dim = 64;  // descriptor width delivered by the provider
  std::size_t d = 64;
  PatchShape patch{4, 4};
  std::size_t heads = 1;
  std::size_t head_layers = 3;
  std::size_t head_hidden = 32;
  std::size_t phi_hidden = 16;
  HeadInput head_input = HeadInput::modulated;
  // Identity activation inside the prior projection (test hook).
  bool phi_linear = false;

  std::size_t channels() const { return d / patch.area(); }
  std::size_t head_input_width() const;
  void validate() const;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

struct ModelParams {
  ModelShape shape;
  Linear embed;  // toy descriptor backbone, raw_dim -> d
  Tensor w_q, w_k, w_v;
  Tensor theta_raw;  // 1x1, theta = sigmoid(theta_raw)
  Tensor phi_in;     // 2 x phi_hidden, bias-free
  Tensor phi_out;    // phi_hidden x channels, bias-free
  Linear ffn;        // (d + 1) -> d
  Linear delta;      // d -> channels
  Linear conv;       // 1x1 convolution, channels -> channels
  Linear alpha;      // channels -> channels
  Linear beta;       // channels -> channels
  std::vector<Linear> head;

  static ModelParams init(const ModelShape& shape, std::uint64_t seed);

  double theta() const;
  std::size_t parameter_count() const;
  bool all_finite() const;

  // Visits every tensor with a stable dotted name, in serialization order.
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit(Self& p, F& f) {
    f("embed.weight", p.embed.weight);
    f("embed.bias", p.embed.bias);
    f("attn.w_q", p.w_q);
    f("attn.w_k", p.w_k);
    f("attn.w_v", p.w_v);
    f("attn.theta_raw", p.theta_raw);
    f("phi.in", p.phi_in);
    f("phi.out", p.phi_out);
    f("ffn.weight", p.ffn.weight);
    f("ffn.bias", p.ffn.bias);
    f("delta.weight", p.delta.weight);
    f("delta.bias", p.delta.bias);
    f("conv.weight", p.conv.weight);
    f("conv.bias", p.conv.bias);
    f("alpha.weight", p.alpha.weight);
    f("alpha.bias", p.alpha.bias);
    f("beta.weight", p.beta.weight);
    f("beta.bias", p.beta.bias);
    for (std::size_t i = 0; i < p.head.size(); ++i) {
      const std::string prefix = "head." + std::to_string(i);
      f(prefix + ".weight", p.head[i].weight);
      f(prefix + ".bias", p.head[i].bias);
    }
  }
};

struct BoundLinear {
  Var weight;
  Var bias;
  Var operator()(Var x) const;
};

// ModelParams mirrored as tape leaves.
struct BoundParams {
  BoundLinear embed;
  Var w_q, w_k, w_v;
  Var theta_raw;
  Var phi_in, phi_out;
  BoundLinear ffn, delta, conv, alpha, beta;
  std::vector<BoundLinear> head;
  std::vector<Var> leaves;  // same order as ModelParams::for_each

  Var theta() const;
};

BoundParams bind(Tape& tape, const ModelParams& params);
// Wires existing leaves, given in ModelParams::for_each order.
BoundParams bind(const std::vector<Var>& leaves, std::size_t head_layers);

// Gradients of every bound leaf, shaped like `params`.
ModelParams gradients(const Tape& tape, const BoundParams& bound, const ModelParams& params);

}  // namespace vic
