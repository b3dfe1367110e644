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
#include <cstdlib>

#include "vic/error.hpp"
#include "vic/pipeline.hpp"
#include "vic/simulator.hpp"

namespace vic {
namespace {

std::vector<Video> sim_videos(std::uint64_t base, std::size_t count, std::size_t frames, double occlusion = 0.0) {
  std::vector<Video> out;
  for (std::size_t i = 0; i < count; ++i) {
    SimConfig c;
    c.seed = base + i;
    c.frames = frames;
    c.descriptor_dim = 16;
    c.occlusion_rate = occlusion;
    c.max_visible = 12;
    c.initial_groups = 3;
    c.spawn_clearance = 0.3;
    out.push_back(generate(c).video);
  }
  return out;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.shape.raw_dim = 16;
  c.shape.d = 16;
  c.shape.patch = {2, 2};
  c.learning_rate = 0.2;
  c.epochs = 3;
  return c;
}

TEST(PipelineConfig, Validation) {
  PipelineConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<void (*)(PipelineConfig&)>{
           [](PipelineConfig& p) { p.interval = 0; }, [](PipelineConfig& p) { p.lambda = 1.5; },
           [](PipelineConfig& p) { p.eta = 0; }, [](PipelineConfig& p) { p.sinkhorn.epsilon = 0.0; },
           [](PipelineConfig& p) { p.batch_size = 0; }, [](PipelineConfig& p) { p.shape.d = 18; }}) {
    PipelineConfig bad = small_config();
    mutate(bad);
    EXPECT_THROW(bad.validate(), Error);
  }
  EXPECT_EQ(c.model_shape().head_input, HeadInput::modulated);
  c.fusion = Fusion::concat;
  EXPECT_EQ(c.model_shape().head_input, HeadInput::concat);
  c.modulator = false;
  EXPECT_EQ(c.model_shape().head_input, HeadInput::similarity);
  EXPECT_EQ(parse_fusion(to_string(Fusion::concat)), Fusion::concat);
  EXPECT_THROW(parse_fusion("sum"), Error);
}

TEST(Train, LossDecreasesAndIsDeterministic) {
  const std::vector<Video> videos = sim_videos(100, 4, 10);
  PipelineConfig c = small_config();
  c.epochs = 8;
  std::vector<std::size_t> epochs;
  const TrainResult a = train(videos, c, [&](std::size_t e, double) { epochs.push_back(e); });
  ASSERT_EQ(a.epoch_losses.size(), 8u);
  EXPECT_EQ(epochs, (std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_LT(a.epoch_losses.back(), a.epoch_losses.front());
  EXPECT_TRUE(a.params.all_finite());
  const TrainResult b = train(videos, c);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  std::vector<Tensor> pa, pb;
  a.params.for_each([&](const std::string&, const Tensor& t) { pa.push_back(t); });
  b.params.for_each([&](const std::string&, const Tensor& t) { pb.push_back(t); });
  EXPECT_EQ(pa, pb);
  c.seed = 2;
  EXPECT_NE(train(videos, c).epoch_losses, a.epoch_losses);
}

TEST(Train, ZeroEpochsReturnsInitialParameters) {
  PipelineConfig c = small_config();
  c.epochs = 0;
  const TrainResult r = train(sim_videos(1, 1, 4), c);
  EXPECT_TRUE(r.epoch_losses.empty());
  const ModelParams init = ModelParams::init(c.model_shape(), c.seed);
  std::vector<Tensor> a, b;
  r.params.for_each([&](const std::string&, const Tensor& t) { a.push_back(t); });
  init.for_each([&](const std::string&, const Tensor& t) { b.push_back(t); });
  EXPECT_EQ(a, b);
}

TEST(Train, RejectsDescriptorlessVideos) {
  Video v = sim_videos(1, 1, 4)[0];
  v.descriptors.clear();
  EXPECT_THROW(train({v}, small_config()), Error);
}

TEST(Pipeline, EveryFlagCombinationRuns) {
  const std::vector<Video> videos = sim_videos(200, 2, 5, 0.2);
  for (int mask = 0; mask < 64; ++mask) {
    PipelineConfig c = small_config();
    c.epochs = 1;
    c.icg = mask & 1;
    c.dasa = mask & 2;
    c.modulator = mask & 4;
    c.dot_loss = mask & 8;
    c.fusion = mask & 16 ? Fusion::concat : Fusion::modulate;
    c.prior = mask & 32 ? PriorSource::raw_displacement : PriorSource::cost;
    c.loss_sign = mask % 3 == 0 ? LossSign::literal : LossSign::cost_minimizing;
    c.counting = mask % 5 == 0 ? FlowCounting::pair_sum : FlowCounting::coverage;
    c.ompm = mask % 7 != 0;
    c.interval = 1 + mask % 2;
    const TrainResult r = train(videos, c);
    ASSERT_EQ(r.epoch_losses.size(), 1u) << mask;
    EXPECT_TRUE(std::isfinite(r.epoch_losses[0])) << mask;
    const std::vector<SequenceRun> runs = infer(videos, model_scorer(r.params, c), c);
    ASSERT_EQ(runs.size(), 2u);
    for (std::size_t v = 0; v < 2; ++v) EXPECT_EQ(runs[v].result.recomputed_total(), runs[v].result.total);
  }
}

TEST(Infer, OracleReproducesTruthAndThreadsAgree) {
  const std::vector<Video> videos = sim_videos(300, 6, 12, 0.2);
  PipelineConfig c = small_config();
  ::setenv("VIC_THREADS", "1", 1);
  EXPECT_EQ(thread_count(), 1u);
  const std::vector<SequenceRun> one = infer(videos, oracle_scorer(), c);
  ::setenv("VIC_THREADS", "3", 1);
  EXPECT_EQ(thread_count(), 3u);
  const std::vector<SequenceRun> three = infer(videos, oracle_scorer(), c);
  const std::vector<VideoRecord> records = evaluation_records(videos, one, 1);
  for (std::size_t v = 0; v < videos.size(); ++v) {
    EXPECT_EQ(one[v].result.per_pair_inflows, three[v].result.per_pair_inflows);
    EXPECT_EQ(records[v].predicted, records[v].truth);
    EXPECT_EQ(records[v].length, 12u);
  }
  ::setenv("VIC_THREADS", "zero", 1);
  EXPECT_THROW(thread_count(), Error);
  ::unsetenv("VIC_THREADS");
  EXPECT_GE(thread_count(), 1u);
}

// A briefly trained toy model separates co-existent pairs from distant
// non-pairs on held-out sequences.
TEST(Train, ToyModelSeparatesHeldOutPairs) {
  PipelineConfig c = small_config();
  c.epochs = 40;
  const TrainResult r = train(sim_videos(1000, 12, 20, 0.2), c);
  const PairScorer score = model_scorer(r.params, c);
  std::size_t correct = 0, total = 0;
  for (const Video& v : sim_videos(5000, 4, 20, 0.2)) {
    for (std::size_t t = 1; t < v.frames.size(); ++t) {
      const FrameView prev = counted_view(v, t - 1), curr = counted_view(v, t);
      if (prev.size() == 0 || curr.size() == 0) continue;
      const Tensor p = score(prev, curr);
      for (std::size_t j = 0; j < curr.size(); ++j)
        for (std::size_t i = 0; i < prev.size(); ++i) {
          const bool same = curr.identity[j] == prev.identity[i];
          const double dist = std::hypot(curr.positions(j, 0) - prev.positions(i, 0),
                                         curr.positions(j, 1) - prev.positions(i, 1));
          if (!same && dist <= 2.0 * c.radius) continue;
          ++total;
          correct += (same ? p(j, i) > 0.5 : p(j, i) < 0.5) ? 1 : 0;
        }
    }
  }
  ASSERT_GT(total, 200u);
  EXPECT_GE(static_cast<double>(correct), 0.9 * static_cast<double>(total)) << correct << "/" << total;
}

}  // namespace
}  // namespace vic
