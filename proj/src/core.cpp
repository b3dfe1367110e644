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

#include "vic/core.hpp"

#include <numeric>

namespace vic {

const char* to_string(Label label) {
  switch (label) {
    case Label::pedestrian: return "pedestrian";
    case Label::inflow: return "inflow";
    case Label::outflow: return "outflow";
    case Label::both: return "both";
  }
  return "pedestrian";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "pedestrian") return Label::pedestrian;
  if (text == "inflow") return Label::inflow;
  if (text == "outflow") return Label::outflow;
  if (text == "both") return Label::both;
  return std::nullopt;
}

std::vector<std::size_t> FramePoints::counted() const {
  std::vector<std::size_t> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    if (i >= masked.size() || !masked[i]) out.push_back(i);
  return out;
}

std::optional<ValidationError> validate(const FramePoints& frame) {
  const std::size_t n = frame.points.size();
  if (frame.labels.size() != n) {
    return ValidationError{ErrorCode::length_mismatch, "labels has " + std::to_string(frame.labels.size()) +
                                                           " entries for " + std::to_string(n) + " points"};
  }
  if (frame.masked.size() != n) {
    return ValidationError{ErrorCode::length_mismatch, "masked has " + std::to_string(frame.masked.size()) +
                                                           " entries for " + std::to_string(n) + " points"};
  }
  if (!frame.identity.empty() && frame.identity.size() != n) {
    return ValidationError{ErrorCode::length_mismatch, "identity length differs from points"};
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = frame.points[i];
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
      return ValidationError{ErrorCode::coordinate_out_of_range,
                             "point " + std::to_string(i) + " = (" + std::to_string(p.x) + ", " +
                                 std::to_string(p.y) + ") outside [0,1]^2"};
    }
  }
  return std::nullopt;
}

DescriptorSet::DescriptorSet(Tensor features, Tensor positions, PatchShape patch)
    : features_(std::move(features)), positions_(std::move(positions)), patch_(patch), d_(features_.cols()) {
  if (features_.rank() != 2 || positions_.rank() != 2) {
    throw Error(ErrorCode::shape_mismatch, "descriptor features and positions must be matrices");
  }
  if (features_.rows() != positions_.rows()) {
    throw Error(ErrorCode::length_mismatch, "features have " + std::to_string(features_.rows()) +
                                                " rows, positions " + std::to_string(positions_.rows()));
  }
  if (positions_.rows() > 0 && positions_.cols() != 2) {
    throw Error(ErrorCode::shape_mismatch, "positions must have two columns");
  }
  if (patch_.area() == 0 || d_ % patch_.area() != 0) {
    throw Error(ErrorCode::dimension_indivisible, "feature width " + std::to_string(d_) +
                                                      " is not divisible by patch area " +
                                                      std::to_string(patch_.area()));
  }
  if (!features_.all_finite()) throw Error(ErrorCode::non_finite, "descriptor features contain non-finite values");
}

Tensor AttentionQuadrants::assemble() const {
  const std::size_t mm = m(), nn = n(), size = mm + nn;
  Tensor out(size, size);
  for (std::size_t r = 0; r < mm; ++r) {
    for (std::size_t c = 0; c < mm; ++c) out(r, c) = prev(r, c);
    for (std::size_t c = 0; c < nn; ++c) out(r, mm + c) = cls(r, c);
  }
  for (std::size_t r = 0; r < nn; ++r) {
    for (std::size_t c = 0; c < mm; ++c) out(mm + r, c) = match(r, c);
    for (std::size_t c = 0; c < nn; ++c) out(mm + r, mm + c) = curr(r, c);
  }
  return out;
}

AttentionQuadrants split_quadrants(const Tensor& map, std::size_t m, std::size_t n) {
  const std::size_t size = m + n;
  if (map.rank() != 2 || map.rows() != size || map.cols() != size) {
    throw Error(ErrorCode::size_mismatch, "attention map " + map.shape_string() + " does not match m+n = " +
                                              std::to_string(size));
  }
  AttentionQuadrants q{Tensor(m, m), Tensor(m, n), Tensor(n, m), Tensor(n, n)};
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) q.prev(r, c) = map(r, c);
    for (std::size_t c = 0; c < n; ++c) q.cls(r, c) = map(r, m + c);
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) q.match(r, c) = map(m + r, c);
    for (std::size_t c = 0; c < n; ++c) q.curr(r, c) = map(m + r, m + c);
  }
  return q;
}

std::size_t SequenceResult::recomputed_total() const {
  return std::accumulate(per_pair_inflows.begin(), per_pair_inflows.end(), first_frame_count);
}

}  // namespace vic
