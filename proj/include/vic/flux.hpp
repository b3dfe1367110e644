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
#include <map>
#include <string>
#include <vector>

#include "vic/core.hpp"
#include "vic/ompm.hpp"

namespace vic {

SequenceResult accumulate(std::int64_t first_count, const std::vector<std::int64_t>& inflows,
                          std::size_t interval = 1);

struct VideoRecord {
  std::string name;
  std::size_t length = 0;  // frames
  double truth = 0.0;
  double predicted = 0.0;
  std::string tag;
};

struct VideoEval {
  std::vector<VideoRecord> per_video;
  double mae = 0.0;
  double mse = 0.0;
  double wrae = 0.0;  // percent
};

VideoEval metrics(const std::vector<VideoRecord>& videos);
std::map<std::string, VideoEval> metrics_by_tag(const std::vector<VideoRecord>& videos);

// Counted (unmasked) points of one frame, in file order.
struct FrameView {
  Tensor positions;    // k x 2
  Tensor descriptors;  // k x raw_dim, empty when the video has none
  std::vector<Label> labels;
  std::vector<std::int64_t> identity;

  std::size_t size() const noexcept { return positions.rows(); }
};

FrameView counted_view(const Video& video, std::size_t frame);

// Produces the n x m match probabilities for one (previous, current) pair.
using PairScorer = std::function<Tensor(const FrameView& prev, const FrameView& curr)>;

struct FlowOptions {
  std::size_t eta = 5;
  FlowCounting counting = FlowCounting::coverage;
  bool one_to_one = false;
};

struct SequenceRun {
  SequenceResult result;
  std::vector<MatchResult> pairs;
  std::vector<std::pair<std::size_t, std::size_t>> frame_pairs;  // frame indices
};

SequenceRun run_sequence(const Video& video, std::size_t interval, const PairScorer& scorer,
                         const FlowOptions& options);

// Identity-based probabilities: 1 where identities agree.
Tensor oracle_probabilities(const FrameView& prev, const FrameView& curr);

// Ground-truth unique count. With interval 1 it follows the inflow labels;
// other intervals need identities.
std::size_t truth_total(const Video& video, std::size_t interval = 1);

}  // namespace vic
