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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "vic/error.hpp"
#include "vic/flux.hpp"
#include "vic/simulator.hpp"

namespace vic {
namespace {

TEST(Accumulate, Examples) {
  const SequenceResult r = accumulate(5, {2, 0, 3});
  EXPECT_EQ(r.total, 10u);
  EXPECT_EQ(r.first_frame_count, 5u);
  EXPECT_EQ(r.per_pair_inflows, (std::vector<std::size_t>{2, 0, 3}));
  EXPECT_EQ(r.recomputed_total(), r.total);
  EXPECT_EQ(accumulate(7, {}).total, 7u);
  EXPECT_EQ(accumulate(1, {1}, 3).interval, 3u);
  try {
    accumulate(5, {1, -1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::negative_input);
  }
  EXPECT_THROW(accumulate(-1, {}), Error);
}

TEST(Accumulate, AssociativeOverClipSplits) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> count(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::int64_t> inflows(1 + trial % 12);
    for (auto& v : inflows) v = count(rng);
    const std::int64_t first = count(rng);
    const std::size_t full = accumulate(first, inflows).total;
    for (std::size_t cut = 0; cut <= inflows.size(); ++cut) {
      const std::vector<std::int64_t> head(inflows.begin(), inflows.begin() + static_cast<std::ptrdiff_t>(cut));
      const std::vector<std::int64_t> tail(inflows.begin() + static_cast<std::ptrdiff_t>(cut), inflows.end());
      EXPECT_EQ(accumulate(first, head).total + accumulate(0, tail).total, full);
    }
  }
}

TEST(Metrics, Examples) {
  const VideoEval one = metrics({{"a", 10, 100, 90, ""}});
  EXPECT_NEAR(one.mae, 10.0, 1e-12);
  EXPECT_NEAR(one.mse, 100.0, 1e-12);
  EXPECT_NEAR(one.wrae, 10.0, 1e-12);
  const VideoEval two = metrics({{"a", 10, 100, 90, ""}, {"b", 30, 200, 220, ""}});
  EXPECT_NEAR(two.wrae, 10.0, 1e-12);
  EXPECT_NEAR(two.mae, 15.0, 1e-12);
  EXPECT_NEAR(two.mse, 250.0, 1e-12);
  const VideoEval perfect = metrics({{"a", 10, 100, 100, ""}, {"b", 5, 3, 3, ""}});
  EXPECT_EQ(perfect.mae, 0.0);
  EXPECT_EQ(perfect.mse, 0.0);
  EXPECT_EQ(perfect.wrae, 0.0);
  EXPECT_EQ(perfect.per_video.size(), 2u);
}

TEST(Metrics, Errors) {
  try {
    metrics({{"a", 10, 0, 3, ""}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::zero_truth_count);
  }
}

TEST(Metrics, RandomizedProperties) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> length(1, 500), videos(1, 8);
  std::uniform_real_distribution<double> truth(1.0, 300.0), error(-50.0, 50.0), scale(0.1, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<VideoRecord> v(videos(rng));
    for (VideoRecord& r : v) {
      r.length = length(rng);
      r.truth = std::round(truth(rng));
      r.predicted = std::max(0.0, std::round(r.truth + error(rng)));
    }
    const VideoEval e = metrics(v);
    EXPECT_LE(e.mae, std::sqrt(e.mse) + 1e-12);
    // Direct weighted sum with weights T_i / sum T.
    double total = 0.0, wrae = 0.0, weights = 0.0;
    for (const VideoRecord& r : v) total += static_cast<double>(r.length);
    for (const VideoRecord& r : v) {
      const double w = static_cast<double>(r.length) / total;
      weights += w;
      wrae += w * std::abs(r.truth - r.predicted) / r.truth;
    }
    EXPECT_NEAR(weights, 1.0, 1e-12);
    EXPECT_NEAR(e.wrae, 100.0 * wrae, 1e-9);
    // Uniform scaling of every T_i leaves WRAE unchanged.
    const std::size_t k = 1 + trial % 7;
    std::vector<VideoRecord> scaled = v;
    for (VideoRecord& r : scaled) r.length *= k;
    EXPECT_NEAR(metrics(scaled).wrae, e.wrae, 1e-9);
  }
}

TEST(Metrics, ByTag) {
  const auto groups = metrics_by_tag({{"a", 10, 100, 90, "sparse"}, {"b", 30, 200, 220, "dense"}, {"c", 30, 10, 10, "dense"}});
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_NEAR(groups.at("sparse").wrae, 10.0, 1e-12);
  EXPECT_EQ(groups.at("dense").per_video.size(), 2u);
  EXPECT_NEAR(groups.at("dense").mae, 10.0, 1e-12);
}

Video two_frame_video(bool identical) {
  Video v;
  v.name = "pair";
  FramePoints a;
  a.frame_id = 0;
  a.points = {{0.2, 0.2}, {0.6, 0.6}};
  a.labels = {Label::pedestrian, Label::pedestrian};
  a.masked = {false, false};
  a.identity = {1, 2};
  FramePoints b = a;
  b.frame_id = 1;
  if (!identical) {
    b.points.push_back({0.9, 0.1});
    b.labels.push_back(Label::inflow);
    b.masked.push_back(false);
    b.identity.push_back(3);
  }
  v.frames = {a, b};
  return v;
}

const PairScorer kOracle = [](const FrameView& p, const FrameView& c) { return oracle_probabilities(p, c); };

TEST(RunSequence, Examples) {
  Video single = two_frame_video(true);
  single.frames.resize(1);
  const SequenceRun one = run_sequence(single, 1, kOracle, {});
  EXPECT_EQ(one.result.total, 2u);
  EXPECT_TRUE(one.pairs.empty());

  const SequenceRun same = run_sequence(two_frame_video(true), 1, kOracle, {});
  EXPECT_EQ(same.pairs.at(0).inflow, 0u);
  EXPECT_EQ(same.result.total, 2u);

  const SequenceRun grow = run_sequence(two_frame_video(false), 1, kOracle, {});
  EXPECT_EQ(grow.result.total, 3u);
  EXPECT_EQ(grow.frame_pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}}));
  EXPECT_EQ(truth_total(two_frame_video(false)), 3u);

  Video empty;
  try {
    run_sequence(empty, 1, kOracle, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_sequence);
  }
  EXPECT_THROW(run_sequence(single, 0, kOracle, {}), Error);
}

TEST(RunSequence, MaskedPointsAreExcluded) {
  Video v = two_frame_video(false);
  v.frames[1].masked[2] = true;
  const SequenceRun r = run_sequence(v, 1, kOracle, {});
  EXPECT_EQ(r.pairs.at(0).probabilities.rows(), 2u);
  EXPECT_EQ(r.result.total, 2u);
  EXPECT_EQ(counted_view(v, 1).size(), 2u);
}

std::size_t enumerate_identities(const Video& v, std::size_t interval) {
  std::set<std::int64_t> ids;
  for (std::size_t t = 0; t < v.frames.size(); t += interval)
    for (std::size_t k : v.frames[t].counted()) ids.insert(v.frames[t].identity[k]);
  return ids.size();
}

TEST(RunSequence, OracleTotalsMatchIdentityEnumeration) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.frames = 15;
    cfg.occlusion_rate = 0.2;
    const SimSequence seq = generate(cfg);
    for (std::size_t interval : {1u, 2u, 3u}) {
      const SequenceRun r = run_sequence(seq.video, interval, kOracle, {});
      EXPECT_EQ(r.result.total, enumerate_identities(seq.video, interval)) << seed;
      EXPECT_EQ(r.result.total, truth_total(seq.video, interval)) << seed;
    }
    EXPECT_EQ(run_sequence(seq.video, 1, kOracle, {}).result.total, seq.distinct_identities());
  }
}

}  // namespace
}  // namespace vic
