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
#include <utility>
#include <vector>

#include "vic/core.hpp"
#include "vic/flux.hpp"

namespace vic {

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(const Point& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t frames = 20;
  std::size_t initial_groups = 4;
  double groups_per_frame_rate = 0.5;  // Poisson mean of arriving groups per frame
  std::size_t group_size_min = 1;
  std::size_t group_size_max = 4;
  double max_step = 0.2;
  double speed_min = 0.03;
  double speed_max = 0.1;
  double group_jitter = 0.01;   // radius of the per-member step perturbation
  double group_spread = 0.04;   // radius of member offsets around a group centre
  double heading_noise = 0.1;   // radians, shared by a group each frame
  std::size_t descriptor_dim = 16;
  double descriptor_noise = 0.05;
  double group_share = 0.3;     // group component weight relative to latent norm
  double occlusion_rate = 0.0;
  // Arriving members keep at least this distance from every pedestrian of
  // the previous frame; 0 disables the check.
  double spawn_clearance = 0.0;
  std::size_t max_visible = 20;
  std::vector<Rect> mask_regions;

  void validate() const;
};

struct SimSequence {
  Video video;
  std::vector<std::pair<std::size_t, std::size_t>> truth_flows;  // (inflow, outflow) per adjacent pair
  std::vector<std::int64_t> group_of;                            // group id indexed by identity
  std::vector<Rect> mask_regions;

  std::size_t distinct_identities() const;
};

// Deterministic in config.seed.
SimSequence generate(const SimConfig& config);

Tensor oracle_probabilities(const SimSequence& seq, std::size_t pair_index);

// Rectangles as four-vertex polygons, one list per frame.
std::vector<std::vector<std::vector<Point>>> mask_polygons(const SimSequence& seq);

}  // namespace vic
