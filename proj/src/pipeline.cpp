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

#include "vic/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "vic/error.hpp"
#include "vic/ops.hpp"

namespace vic {

const char* to_string(Fusion fusion) { return fusion == Fusion::modulate ? "modulate" : "concat"; }

Fusion parse_fusion(const std::string& text) {
  if (text == "modulate") return Fusion::modulate;
  if (text == "concat") return Fusion::concat;
  throw Error(ErrorCode::invalid_config, "unknown fusion '" + text + "'");
}

ModelShape PipelineConfig::model_shape() const {
  ModelShape s = shape;
  if (!modulator) {
    s.head_input = HeadInput::similarity;
  } else {
    s.head_input = fusion == Fusion::modulate ? HeadInput::modulated : HeadInput::concat;
  }
  return s;
}

FlowOptions PipelineConfig::flow_options() const { return FlowOptions{eta, counting, !ompm}; }

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_config, what); };
  if (interval == 0) fail("interval must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0,1]");
  if (eta == 0) fail("eta must be positive");
  if (!(radius >= 0.0) || !std::isfinite(radius)) fail("radius must be non-negative");
  if (!(sinkhorn.epsilon > 0.0) || sinkhorn.max_iter == 0 || !(sinkhorn.tol > 0.0)) fail("invalid sinkhorn settings");
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) fail("learning rate and weight decay must be non-negative");
  if (batch_size == 0) fail("batch size must be positive");
  model_shape().validate();
}

PairForward forward_pair(Tape& tape, const BoundParams& params, const PipelineConfig& config, const FrameView& prev,
                         const FrameView& curr) {
  const ModelShape shape = config.model_shape();
  PairForward out;
  out.m = prev.size();
  out.n = curr.size();
  if (out.m == 0 || out.n == 0) throw Error(ErrorCode::size_mismatch, "forward_pair needs points in both frames");
  if (prev.descriptors.cols() != shape.raw_dim || curr.descriptors.cols() != shape.raw_dim ||
      prev.descriptors.rows() != out.m || curr.descriptors.rows() != out.n) {
    throw Error(ErrorCode::dimension_mismatch, "descriptor width differs from the model's raw_dim");
  }

  Tensor raw(out.m + out.n, shape.raw_dim);
  Tensor pos(out.m + out.n, 2);
  for (std::size_t r = 0; r < out.m + out.n; ++r) {
    const bool p = r < out.m;
    const std::size_t k = p ? r : r - out.m;
    const auto src = (p ? prev : curr).descriptors.row(k);
    std::copy(src.begin(), src.end(), raw.row(r).begin());
    pos(r, 0) = (p ? prev : curr).positions(k, 0);
    pos(r, 1) = (p ? prev : curr).positions(k, 1);
  }
  const Var embedded = ops::add(params.embed(tape.constant(std::move(raw))), tape.constant(position_embed(pos, shape.d)));
  out.tokens = embedded;

  const bool need_prior = (config.icg && config.dasa) || shape.head_input != HeadInput::similarity || config.dot_loss;
  if (need_prior) out.prior = build_prior(tape, params, shape, prev.positions, curr.positions, config.prior);

  Var enriched = embedded;
  if (config.icg) {
    IcgOptions opts;
    opts.dasa = config.dasa;
    out.icg = icg_forward(embedded, out.m, out.n, params, shape,
                          out.prior ? std::optional<Var>(out.prior->full_cost) : std::nullopt, opts);
    enriched = out.icg->enriched;
  }
  out.f_prev = ops::slice_rows(enriched, 0, out.m);
  out.f_curr = ops::slice_rows(enriched, out.m, out.m + out.n);
  out.pairwise = ompm_forward(out.f_prev, out.f_curr,
                              out.prior ? std::optional<Var>(out.prior->embedding) : std::nullopt, params, shape);
  return out;
}

namespace {

void persistence(const FrameView& prev, const FrameView& curr, std::size_t interval, std::vector<bool>& prev_persists,
                 std::vector<bool>& curr_persists) {
  prev_persists.assign(prev.size(), false);
  curr_persists.assign(curr.size(), false);
  if (prev.identity.size() == prev.size() && curr.identity.size() == curr.size()) {
    const std::set<std::int64_t> p(prev.identity.begin(), prev.identity.end());
    const std::set<std::int64_t> c(curr.identity.begin(), curr.identity.end());
    for (std::size_t i = 0; i < prev.size(); ++i) prev_persists[i] = c.count(prev.identity[i]) > 0;
    for (std::size_t j = 0; j < curr.size(); ++j) curr_persists[j] = p.count(curr.identity[j]) > 0;
    return;
  }
  if (interval != 1) throw Error(ErrorCode::missing_data, "training at interval > 1 needs identities");
  for (std::size_t i = 0; i < prev.size(); ++i) prev_persists[i] = !is_outflow(prev.labels[i]);
  for (std::size_t j = 0; j < curr.size(); ++j) curr_persists[j] = !is_inflow(curr.labels[j]);
}

}  // namespace

PairLoss pair_loss(const PairForward& forward, const PipelineConfig& config, const FrameView& prev,
                   const FrameView& curr) {
  std::vector<bool> prev_persists, curr_persists;
  persistence(prev, curr, config.interval, prev_persists, curr_persists);
  PairLoss out;
  const Var p = forward.pairwise.probabilities;
  out.candidates = select_candidates(prev.positions, curr.positions, p.value(), config.radius, &prev_persists,
                                     &curr_persists, config.propose_matches);
  out.cls = cls_loss(p, out.candidates);
  out.total = out.cls;
  if (config.dot_loss) {
    DotOptions opts;
    opts.lambda = config.lambda;
    opts.sinkhorn = config.sinkhorn;
    opts.sign = config.loss_sign;
    const Var c_disp = displacement_cost(forward.prior->prior_cost);
    const Var c_appear = appearance_cost(forward.f_prev, forward.f_curr);
    out.dot = dot_loss(c_disp, c_appear, opts).loss;
    out.total = total_loss(*out.dot, out.cls);
  }
  return out;
}

namespace {

struct TrainPair {
  std::size_t video;
  std::size_t prev, curr;
};

void axpy(ModelParams& acc, const ModelParams& g, double factor) {
  std::vector<Tensor*> dst;
  acc.for_each([&](const std::string&, Tensor& t) { dst.push_back(&t); });
  std::size_t k = 0;
  g.for_each([&](const std::string&, const Tensor& t) {
    auto& d = dst[k++]->values();
    const auto& s = t.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * s[i];
  });
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  z.for_each([](const std::string&, Tensor& t) { std::fill(t.values().begin(), t.values().end(), 0.0); });
  return z;
}

}  // namespace

TrainResult train(const std::vector<Video>& videos, const PipelineConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  return train(videos, config, ModelParams::init(config.model_shape(), config.seed), on_epoch);
}

TrainResult train(const std::vector<Video>& videos, const PipelineConfig& config, ModelParams initial,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (!(initial.shape == config.model_shape())) throw Error(ErrorCode::invalid_config, "model shape differs from config");

  // Views are built once; pairs without points on either side carry no signal.
  std::vector<std::vector<FrameView>> views(videos.size());
  std::vector<TrainPair> pairs;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    if (!videos[v].has_descriptors()) throw Error(ErrorCode::missing_data, "video '" + videos[v].name + "' has no descriptors");
    for (std::size_t t = 0; t < videos[v].frames.size(); ++t) views[v].push_back(counted_view(videos[v], t));
    for (std::size_t t = config.interval; t < videos[v].frames.size(); t += config.interval)
      if (views[v][t - config.interval].size() > 0 && views[v][t].size() > 0) pairs.push_back({v, t - config.interval, t});
  }

  TrainResult result{std::move(initial), {}};
  ModelParams& params = result.params;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      ModelParams grad = zeros_like(params);
      for (std::size_t b = start; b < end; ++b) {
        const TrainPair& tp = pairs[order[b]];
        const FrameView& prev = views[tp.video][tp.prev];
        const FrameView& curr = views[tp.video][tp.curr];
        Tape tape;
        const BoundParams bound = bind(tape, params);
        const PairForward fwd = forward_pair(tape, bound, config, prev, curr);
        const PairLoss loss = pair_loss(fwd, config, prev, curr);
        const double value = loss.total.value()[0];
        if (!std::isfinite(value)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch + 1 << ", video '" << videos[tp.video].name << "', frames "
              << tp.prev << "->" << tp.curr << " (cls " << loss.cls.value()[0];
          if (loss.dot) msg << ", dot " << loss.dot->value()[0];
          msg << ")";
          throw Error(ErrorCode::non_finite_loss, msg.str());
        }
        epoch_sum += value;
        tape.backward(loss.total);
        axpy(grad, gradients(tape, bound, params), 1.0 / static_cast<double>(end - start));
      }
      // Decoupled weight decay, then the gradient step.
      const double decay = 1.0 - config.learning_rate * config.weight_decay;
      params.for_each([&](const std::string&, Tensor& t) {
        for (double& x : t.values()) x *= decay;
      });
      axpy(params, grad, -config.learning_rate);
      if (!params.all_finite()) {
        throw Error(ErrorCode::non_finite_loss, "parameters became non-finite at epoch " + std::to_string(epoch + 1));
      }
    }
    const double mean = pairs.empty() ? 0.0 : epoch_sum / static_cast<double>(pairs.size());
    result.epoch_losses.push_back(mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  return result;
}

PairScorer model_scorer(const ModelParams& params, const PipelineConfig& config) {
  config.validate();
  if (!(params.shape == config.model_shape())) throw Error(ErrorCode::invalid_config, "model shape differs from config");
  return [params, config](const FrameView& prev, const FrameView& curr) {
    if (prev.size() == 0 || curr.size() == 0) return Tensor(curr.size(), prev.size());
    Tape tape;
    const BoundParams bound = bind(tape, params);
    return forward_pair(tape, bound, config, prev, curr).pairwise.probabilities.value();
  };
}

PairScorer oracle_scorer() {
  return [](const FrameView& prev, const FrameView& curr) { return oracle_probabilities(prev, curr); };
}

std::size_t thread_count() {
  if (const char* env = std::getenv("VIC_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    throw Error(ErrorCode::invalid_config, std::string("VIC_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SequenceRun> infer(const std::vector<Video>& videos, const PairScorer& scorer,
                               const PipelineConfig& config) {
  std::vector<SequenceRun> runs(videos.size());
  std::vector<std::exception_ptr> errors(videos.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t v = next++; v < videos.size(); v = next++) {
      try {
        runs[v] = run_sequence(videos[v], config.interval, scorer, config.flow_options());
      } catch (...) {
        errors[v] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(1, videos.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return runs;
}

std::vector<VideoRecord> evaluation_records(const std::vector<Video>& videos, const std::vector<SequenceRun>& runs,
                                            std::size_t interval) {
  if (videos.size() != runs.size()) throw Error(ErrorCode::size_mismatch, "one run per video expected");
  std::vector<VideoRecord> records;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    records.push_back({videos[v].name, videos[v].frames.size(), static_cast<double>(truth_total(videos[v], interval)),
                       static_cast<double>(runs[v].result.total), ""});
  }
  return records;
}

}  // namespace vic
