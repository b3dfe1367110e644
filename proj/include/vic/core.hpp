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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vic/error.hpp"
#include "vic/tensor.hpp"

namespace vic {

enum class Label { pedestrian, inflow, outflow, both };

const char* to_string(Label label);
std::optional<Label> parse_label(std::string_view text);
inline bool is_inflow(Label l) { return l == Label::inflow || l == Label::both; }
inline bool is_outflow(Label l) { return l == Label::outflow || l == Label::both; }

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Located pedestrians of one frame. Coordinates are normalized to [0,1] by
// frame width and height.
struct FramePoints {
  std::int64_t frame_id = 0;
  std::vector<Point> points;
  std::vector<Label> labels;
  std::vector<bool> masked;
  // Empty unless the frame came from the simulator or an annotated id track.
  std::vector<std::int64_t> identity;

  std::size_t size() const noexcept { return points.size(); }
  bool has_identity() const noexcept { return !identity.empty(); }
  // Indices of points that take part in counting.
  std::vector<std::size_t> counted() const;

  friend bool operator==(const FramePoints&, const FramePoints&) = default;
};

struct ValidationError {
  ErrorCode code;
  std::string message;
};

// First violated invariant, or nullopt.
std::optional<ValidationError> validate(const FramePoints& frame);

// A located sequence: frames plus raw per-point descriptors (rows aligned
// with FramePoints::points, including masked points).
struct Video {
  std::string name;
  std::vector<FramePoints> frames;
  std::vector<Tensor> descriptors;
  // Per-frame mask polygons; empty when the source carried none.
  std::vector<std::vector<std::vector<Point>>> masks;

  bool has_descriptors() const noexcept { return !descriptors.empty(); }
};

struct PatchShape {
  std::size_t h = 4;
  std::size_t w = 4;
  std::size_t area() const noexcept { return h * w; }
  friend bool operator==(const PatchShape&, const PatchShape&) = default;
};

// Per-pedestrian features with attached positions.
class DescriptorSet {
 public:
  DescriptorSet(Tensor features, Tensor positions, PatchShape patch);

  const Tensor& features() const noexcept { return features_; }
  const Tensor& positions() const noexcept { return positions_; }
  PatchShape patch() const noexcept { return patch_; }
  std::size_t count() const noexcept { return features_.rows(); }
  std::size_t d() const noexcept { return d_; }

 private:
  Tensor features_;
  Tensor positions_;
  PatchShape patch_;
  std::size_t d_;
};

// Sub-blocks of an (m+n)x(m+n) cross-frame attention map laid out as
// [[prev, cls], [match, curr]].
struct AttentionQuadrants {
  Tensor prev;   // m x m
  Tensor cls;    // m x n
  Tensor match;  // n x m
  Tensor curr;   // n x n

  std::size_t m() const noexcept { return prev.rows(); }
  std::size_t n() const noexcept { return curr.rows(); }
  Tensor assemble() const;
};

AttentionQuadrants split_quadrants(const Tensor& map, std::size_t m, std::size_t n);

struct PriorField {
  Tensor displacement;  // n x m x 2, current minus previous
  Tensor embedding;     // n x m x c
  Tensor prior_cost;    // n x m
  Tensor full_cost;     // (m+n) x (m+n) over all token pairs
};

struct MatchResult {
  Tensor probabilities;  // n x m
  Tensor match_matrix;   // n x m, entries 0 or 1
  std::size_t inflow = 0;
  std::size_t outflow = 0;
  std::size_t group_cap = 1;
};

struct SequenceResult {
  std::size_t first_frame_count = 0;
  std::vector<std::size_t> per_pair_inflows;
  std::size_t total = 0;
  std::size_t interval = 1;

  std::size_t recomputed_total() const;
};

}  // namespace vic
