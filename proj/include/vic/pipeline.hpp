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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vic/assignment.hpp"
#include "vic/flux.hpp"
#include "vic/icg.hpp"
#include "vic/losses.hpp"
#include "vic/ompm.hpp"
#include "vic/params.hpp"

namespace vic {

enum class Fusion { modulate, concat };
const char* to_string(Fusion fusion);
Fusion parse_fusion(const std::string& text);

struct PipelineConfig {
  std::size_t interval = 1;
  double lambda = 0.1;
  std::size_t eta = 5;
  double radius = 0.2;
  SinkhornOptions sinkhorn;

  bool icg = true;
  bool ompm = true;  // false: one-to-one Hungarian baseline at inference
  bool dasa = true;
  bool modulator = true;
  bool dot_loss = true;
  Fusion fusion = Fusion::modulate;
  PriorSource prior = PriorSource::cost;
  LossSign loss_sign = LossSign::cost_minimizing;
  FlowCounting counting = FlowCounting::coverage;
  // Also supervise every pair the model currently matches, not only the
  // Hungarian anchors.
  bool propose_matches = true;

  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  std::uint64_t seed = 1;
  ModelShape shape;

  // shape with head_input derived from the modulator and fusion switches.
  ModelShape model_shape() const;
  FlowOptions flow_options() const;
  void validate() const;
};

// Recorded forward pass for one (previous, current) frame pair.
struct PairForward {
  std::size_t m = 0, n = 0;
  Var tokens;
  std::optional<PriorVars> prior;
  std::optional<IcgVars> icg;
  Var f_prev, f_curr;
  PairwiseVars pairwise;
};

// Requires m, n >= 1 and descriptors of width shape.raw_dim.
PairForward forward_pair(Tape& tape, const BoundParams& params, const PipelineConfig& config, const FrameView& prev,
                         const FrameView& curr);

struct PairLoss {
  Var total;
  Var cls;
  std::optional<Var> dot;
  CandidateSet candidates;
};

// Persistence of each pedestrian across the pair comes from identities when
// both frames carry them, otherwise from the labels.
PairLoss pair_loss(const PairForward& forward, const PipelineConfig& config, const FrameView& prev,
                   const FrameView& curr);

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_losses;  // mean pair loss per epoch
};

// Called with the 1-based epoch and its mean pair loss.
using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Deterministic in config.seed. Throws non_finite_loss with the offending pair.
TrainResult train(const std::vector<Video>& videos, const PipelineConfig& config, const EpochCallback& on_epoch = {});
TrainResult train(const std::vector<Video>& videos, const PipelineConfig& config, ModelParams initial,
                  const EpochCallback& on_epoch = {});

PairScorer model_scorer(const ModelParams& params, const PipelineConfig& config);
PairScorer oracle_scorer();

// Worker count from VIC_THREADS, else the hardware concurrency.
std::size_t thread_count();

// Runs every video in parallel; results keep input order.
std::vector<SequenceRun> infer(const std::vector<Video>& videos, const PairScorer& scorer,
                               const PipelineConfig& config);

std::vector<VideoRecord> evaluation_records(const std::vector<Video>& videos, const std::vector<SequenceRun>& runs,
                                            std::size_t interval);

}  // namespace vic
