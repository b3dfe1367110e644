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
#include <optional>
#include <span>
#include <string>

#include "vic/core.hpp"
#include "vic/params.hpp"
#include "vic/tape.hpp"

namespace vic {

struct PairSimilarity {
  Tensor vector;   // 1 x d
  Tensor spatial;  // h x w x (d / hw)
};

PairSimilarity pair_similarity(std::span<const double> f_prev, std::span<const double> f_curr, PatchShape patch);

struct ModulatedFeature {
  Tensor coarse;  // 1 x c
  Tensor fine;    // h x w x c
  Tensor fused;   // 1 x c
};

ModulatedFeature modulate(const PairSimilarity& s, const Tensor& prior_embedding_pair, const ModelParams& params);

// sigmoid(MLP(input)) for a single 1 x k head input.
double match_probability(const Tensor& head_input, const ModelParams& params);

// Batched, taped versions. Pair rows are ordered j * m + i (current-major).
Var pairwise_similarity(Var f_prev, Var f_curr);

struct ModulatorVars {
  Var coarse;  // K x c
  Var fine;    // (K * hw) x c
  Var fused;   // K x c
};

ModulatorVars modulate(Var similarity, Var prior_embedding, const BoundParams& params, const ModelShape& shape);

Var head_logits(Var input, const BoundParams& params);

struct PairwiseVars {
  Var similarity;
  std::optional<ModulatorVars> modulator;
  Var logits;         // (n*m) x 1
  Var probabilities;  // n x m
};

// `prior_embedding` is required unless shape.head_input == similarity.
PairwiseVars ompm_forward(Var f_prev, Var f_curr, std::optional<Var> prior_embedding, const BoundParams& params,
                          const ModelShape& shape);

enum class FlowCounting { coverage, pair_sum };

const char* to_string(FlowCounting counting);
FlowCounting parse_flow_counting(const std::string& text);

// Threshold at 0.5, keep each row's eta most probable matches (lower column
// wins ties), then derive flows from the set of covered pedestrians.
MatchResult derive_flows(const Tensor& probabilities, std::size_t eta,
                         FlowCounting counting = FlowCounting::coverage);

// One-to-one baseline: Hungarian on 1 - p, keeping assigned pairs with p >= 0.5.
MatchResult derive_flows_one_to_one(const Tensor& probabilities);

}  // namespace vic
