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

#include "vic/flux.hpp"

#include <cmath>
#include <set>

namespace vic {

SequenceResult accumulate(std::int64_t first_count, const std::vector<std::int64_t>& inflows, std::size_t interval) {
  if (first_count < 0) throw Error(ErrorCode::negative_input, "first-frame count is negative");
  SequenceResult r;
  r.first_frame_count = static_cast<std::size_t>(first_count);
  r.interval = interval;
  r.total = r.first_frame_count;
  for (std::int64_t v : inflows) {
    if (v < 0) throw Error(ErrorCode::negative_input, "inflow count is negative");
    r.per_pair_inflows.push_back(static_cast<std::size_t>(v));
    r.total += static_cast<std::size_t>(v);
  }
  return r;
}

VideoEval metrics(const std::vector<VideoRecord>& videos) {
  VideoEval e;
  e.per_video = videos;
  if (videos.empty()) return e;
  double length_sum = 0.0;
  for (const VideoRecord& v : videos) {
    if (!(v.truth > 0.0)) throw Error(ErrorCode::zero_truth_count, "video '" + v.name + "' has no ground-truth pedestrians");
    length_sum += static_cast<double>(v.length);
  }
  if (!(length_sum > 0.0)) throw Error(ErrorCode::invalid_config, "total video length is zero");
  const double k = static_cast<double>(videos.size());
  for (const VideoRecord& v : videos) {
    const double err = v.truth - v.predicted;
    e.mae += std::abs(err) / k;
    e.mse += err * err / k;
    e.wrae += static_cast<double>(v.length) / length_sum * std::abs(err) / v.truth;
  }
  e.wrae *= 100.0;
  return e;
}

std::map<std::string, VideoEval> metrics_by_tag(const std::vector<VideoRecord>& videos) {
  std::map<std::string, std::vector<VideoRecord>> groups;
  for (const VideoRecord& v : videos) groups[v.tag].push_back(v);
  std::map<std::string, VideoEval> out;
  for (const auto& [tag, group] : groups) out.emplace(tag, metrics(group));
  return out;
}

FrameView counted_view(const Video& video, std::size_t frame) {
  const FramePoints& f = video.frames.at(frame);
  const std::vector<std::size_t> keep = f.counted();
  FrameView v;
  v.positions = Tensor(keep.size(), 2);
  const bool with_desc = video.has_descriptors();
  const std::size_t raw = with_desc ? video.descriptors.at(frame).cols() : 0;
  if (with_desc) {
    if (video.descriptors[frame].rows() != f.size()) {
      throw Error(ErrorCode::length_mismatch, "descriptor rows differ from point count in frame " +
                                                  std::to_string(f.frame_id));
    }
    v.descriptors = Tensor(keep.size(), raw);
  }
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t k = keep[r];
    v.positions(r, 0) = f.points[k].x;
    v.positions(r, 1) = f.points[k].y;
    v.labels.push_back(f.labels[k]);
    if (f.has_identity()) v.identity.push_back(f.identity[k]);
    if (with_desc)
      for (std::size_t c = 0; c < raw; ++c) v.descriptors(r, c) = video.descriptors[frame](k, c);
  }
  return v;
}

SequenceRun run_sequence(const Video& video, std::size_t interval, const PairScorer& scorer,
                         const FlowOptions& options) {
  if (video.frames.empty()) throw Error(ErrorCode::empty_sequence, "video '" + video.name + "' has no frames");
  if (interval == 0) throw Error(ErrorCode::invalid_config, "interval must be positive");
  SequenceRun run;
  std::vector<std::int64_t> inflows;
  FrameView prev = counted_view(video, 0);
  const auto first = static_cast<std::int64_t>(prev.size());
  for (std::size_t t = interval; t < video.frames.size(); t += interval) {
    FrameView curr = counted_view(video, t);
    const Tensor p = scorer(prev, curr);
    MatchResult r = options.one_to_one ? derive_flows_one_to_one(p) : derive_flows(p, options.eta, options.counting);
    inflows.push_back(static_cast<std::int64_t>(r.inflow));
    run.pairs.push_back(std::move(r));
    run.frame_pairs.emplace_back(t - interval, t);
    prev = std::move(curr);
  }
  run.result = accumulate(first, inflows, interval);
  return run;
}

Tensor oracle_probabilities(const FrameView& prev, const FrameView& curr) {
  if (prev.identity.size() != prev.size() || curr.identity.size() != curr.size()) {
    throw Error(ErrorCode::missing_data, "oracle probabilities need identities");
  }
  Tensor p(curr.size(), prev.size());
  for (std::size_t j = 0; j < curr.size(); ++j)
    for (std::size_t i = 0; i < prev.size(); ++i) p(j, i) = curr.identity[j] == prev.identity[i] ? 1.0 : 0.0;
  return p;
}

std::size_t truth_total(const Video& video, std::size_t interval) {
  if (video.frames.empty()) throw Error(ErrorCode::empty_sequence, "video '" + video.name + "' has no frames");
  std::size_t total = video.frames[0].counted().size();
  if (interval == 1) {
    for (std::size_t t = 1; t < video.frames.size(); ++t) {
      const FramePoints& f = video.frames[t];
      for (std::size_t k : f.counted())
        if (is_inflow(f.labels[k])) ++total;
    }
    return total;
  }
  std::set<std::int64_t> prev;
  auto ids = [&](std::size_t t) {
    const FramePoints& f = video.frames[t];
    if (f.identity.size() != f.size()) {
      throw Error(ErrorCode::missing_data, "interval > 1 needs identities for ground truth");
    }
    std::set<std::int64_t> s;
    for (std::size_t k : f.counted()) s.insert(f.identity[k]);
    return s;
  };
  prev = ids(0);
  for (std::size_t t = interval; t < video.frames.size(); t += interval) {
    std::set<std::int64_t> curr = ids(t);
    for (std::int64_t id : curr)
      if (!prev.count(id)) ++total;
    prev = std::move(curr);
  }
  return total;
}

}  // namespace vic
