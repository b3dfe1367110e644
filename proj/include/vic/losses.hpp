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
#include <utility>
#include <vector>

#include "vic/assignment.hpp"
#include "vic/tape.hpp"
#include "vic/tensor.hpp"

namespace vic {

inline constexpr double kZScoreSmoothing = 1e-8;
inline constexpr double kProbabilityClamp = 1e-7;

// (x - mean) / (std + kZScoreSmoothing) over all entries, population std.
Var zscore(Var x);

// 1 - e_ij / (sum_k e_kj + sum_k e_ik - e_ij) with e = exp(affinity).
// Higher affinity gives lower cost; entries lie in [0, 1).
Var bidirectional_cost(Var affinity);

// Cost from prior cost gamma: small gamma (short displacement) is cheap.
Var displacement_cost(Var prior_cost);
Tensor displacement_cost(const Tensor& prior_cost);

// n x m cosine similarity between current rows and previous rows.
Var cosine_similarity(Var f_prev, Var f_curr);

// Cost from enriched features: similar pairs are cheap.
Var appearance_cost(Var f_prev, Var f_curr);
Tensor appearance_cost(const Tensor& f_prev, const Tensor& f_curr);

struct CostPair {
  Tensor c_disp;
  Tensor c_appear;
  Tensor combined;
  double lambda = 0.1;

  static CostPair mix(Tensor c_disp, Tensor c_appear, double lambda);
};

enum class LossSign {
  cost_minimizing,  // +<C, Pi>
  literal,          // -<C, Pi>
};

const char* to_string(LossSign sign);
LossSign parse_loss_sign(const std::string& text);

struct DotOptions {
  double lambda = 0.1;
  SinkhornOptions sinkhorn;
  LossSign sign = LossSign::cost_minimizing;
};

struct DotLoss {
  Var loss;
  Var combined;
  TransportPlan plan;
};

// Pi is solved on the combined cost's current value and held constant, so
// gradients flow through C only.
DotLoss dot_loss(Var c_disp, Var c_appear, const DotOptions& options);
std::pair<double, TransportPlan> dot_loss(const CostPair& costs, const DotOptions& options);

using PairIndex = std::pair<std::size_t, std::size_t>;  // (current, previous)

struct CandidateSet {
  std::vector<PairIndex> positives;
  std::vector<PairIndex> negatives;
  double radius = 0.2;
};

// Hungarian on 1 - p proposes anchor pairs. Pairs whose cross-frame distance
// is within `radius` (inclusive) are positives when both ends persist across
// the pair; every other proposed or in-radius pair is a negative. Omitted
// persistence flags mean every pedestrian persists. With `propose_matches`,
// every pair currently predicted as a match (p >= 0.5) is proposed as well.
CandidateSet select_candidates(const Tensor& prev_pos, const Tensor& curr_pos, const Tensor& probabilities,
                               double radius, const std::vector<bool>* prev_persists = nullptr,
                               const std::vector<bool>* curr_persists = nullptr, bool propose_matches = false);

// Mean binary cross-entropy over candidate pairs; 0 for an empty set.
Var cls_loss(Var probabilities, const CandidateSet& candidates);
double cls_loss(const Tensor& probabilities, const CandidateSet& candidates);

inline double total_loss(double dot, double cls) { return dot + cls; }
Var total_loss(Var dot, Var cls);

}  // namespace vic
