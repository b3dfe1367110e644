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
#include <string>

#include "vic/core.hpp"
#include "vic/params.hpp"
#include "vic/tape.hpp"

namespace vic {

// Which scalar field modulates attention and feeds the displacement cost.
enum class PriorSource {
  cost,              // gamma = ||phi(D)||
  raw_displacement,  // gamma = ||D||
};

const char* to_string(PriorSource source);
PriorSource parse_prior_source(const std::string& text);

// Prior field recorded on a tape. Token order is previous frame then current.
struct PriorVars {
  Tensor displacement;  // n x m x 2
  Var embedding;        // (n*m) x c, row j*m + i
  Var prior_cost;       // n x m
  Var full_cost;        // (m+n) x (m+n)
};

PriorVars build_prior(Tape& tape, const BoundParams& params, const ModelShape& shape, const Tensor& prev_pos,
                      const Tensor& curr_pos, PriorSource source = PriorSource::cost);

PriorField build_prior_field(const Tensor& prev_pos, const Tensor& curr_pos, const ModelParams& params,
                             PriorSource source = PriorSource::cost);

// Rows 0..m are previous-frame tokens, m..m+n current-frame tokens.
Tensor concat_frames(const DescriptorSet& prev, const DescriptorSet& curr);

// Per-token mean attention over the other frame's tokens, previous tokens first.
Tensor context_scalars(const AttentionQuadrants& q);
Var context_scalars(Var map, std::size_t m, std::size_t n);

struct AttentionVars {
  Var output;     // map_eff . V
  Var map;        // softmax map, averaged over heads
  Var modulated;  // map after theta^Gamma, averaged over heads; equals map without a prior
};

// Pre-norm single- or multi-head self-attention. With `gamma` set, each head's
// post-softmax map is multiplied elementwise by theta^gamma (no renormalization).
AttentionVars self_attention(Var tokens, const BoundParams& params, std::size_t heads,
                             std::optional<Var> gamma = std::nullopt, std::optional<Var> theta = std::nullopt);

struct IcgVars {
  Var enriched;  // (m+n) x d
  Var context;   // (m+n) x 1
  AttentionVars attention;
};

struct IcgOptions {
  bool dasa = false;
  // Replaces sigmoid(theta_raw) when set.
  std::optional<double> theta_override;
};

IcgVars icg_forward(Var tokens, std::size_t m, std::size_t n, const BoundParams& params, const ModelShape& shape,
                    std::optional<Var> gamma_full, const IcgOptions& options);

struct IcgOutput {
  Tensor enriched;
  AttentionQuadrants quadrants;
  Tensor context_scalars;
  Tensor attention;
  Tensor modulated;
};

// Untaped convenience wrapper. `prior` is required iff options.dasa.
IcgOutput icg_forward(const DescriptorSet& prev, const DescriptorSet& curr, const PriorField* prior,
                      const ModelParams& params, const IcgOptions& options);

}  // namespace vic
