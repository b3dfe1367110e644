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

// Acceptance run: one PASS/FAIL line per criterion. Optional arguments pick
// criteria by number, e.g. `vic_acceptance 1 4`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vic/assignment.hpp"
#include "vic/flux.hpp"
#include "vic/gradsuite.hpp"
#include "vic/icg.hpp"
#include "vic/losses.hpp"
#include "vic/ompm.hpp"
#include "vic/ops.hpp"
#include "vic/pipeline.hpp"
#include "vic/simulator.hpp"

namespace vic {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Tensor uniform(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Minimum over all injections of the smaller side into the larger one.
double brute_force_assignment(const Tensor& cost) {
  const std::size_t rows = cost.rows(), cols = cost.cols();
  const bool rows_small = rows <= cols;
  const std::size_t k = std::min(rows, cols), big = std::max(rows, cols);
  std::vector<std::size_t> perm(big);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += rows_small ? cost(i, perm[i]) : cost(perm[i], i);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

ModelShape small_shape() {
  ModelShape s;
  s.raw_dim = 16;
  s.d = 16;
  s.patch = {2, 2};
  return s;
}

Outcome assignment_oracle() {
  const auto t0 = Clock::now();
  Outcome o;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> size(1, 7);
  std::uniform_int_distribution<int> value(0, 99);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    Tensor cost(size(rng), size(rng));
    for (double& v : cost.values()) v = value(rng);
    const Assignment a = hungarian(cost);
    double sum = 0.0;
    for (const auto& [r, c] : a.pairs) sum += cost(r, c);
    const double best = brute_force_assignment(cost);
    o.require(a.total_cost == best && sum == best && a.pairs.size() == std::min(cost.rows(), cost.cols()),
              "instance " + std::to_string(trial) + " differs from brute force");
  }
  const double s = seconds_since(t0);
  o.require(s < 10.0, "runtime over 10 s");
  if (o.pass) o.detail = fmt("1000 instances exact, %.2f s", s);
  return o;
}

Outcome sinkhorn_contracts() {
  const auto t0 = Clock::now();
  Outcome o;
  std::mt19937_64 rng(2);
  double worst_residual = 0.0, worst_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor cost = uniform({10, 10}, rng);
    const auto [r, c] = uniform_marginals(10, 10);
    const TransportPlan p = sinkhorn(cost, r, c);
    worst_residual = std::max({worst_residual, p.row_residual, p.col_residual});
    o.require(p.converged && p.iterations_used <= 500, "10x10 did not converge within 500 iterations");
    o.require(p.row_residual <= 1e-6 && p.col_residual <= 1e-6, "10x10 marginal residual above 1e-6");
    o.require(p.plan.all_finite(), "non-finite plan");
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor cost = uniform({5, 5}, rng);
    const std::vector<double> ones(5, 1.0);
    SinkhornOptions opt;
    opt.epsilon = 0.01;
    opt.max_iter = 5000;
    const TransportPlan p = sinkhorn(cost, ones, ones, opt);
    // Unit marginals: the LP optimum is the best permutation.
    const double optimum = brute_force_assignment(cost);
    const double gap = std::abs(p.cost(cost) - optimum) / optimum;
    worst_gap = std::max(worst_gap, gap);
    o.require(gap <= 0.05, "5x5 plan cost more than 5% from the LP optimum");
    o.require(p.plan.all_finite(), "non-finite plan");
  }
  const double s = seconds_since(t0);
  o.require(s < 10.0, "runtime over 10 s");
  if (o.pass) o.detail = fmt("max residual %.2e, max LP gap %.2f%%, %.2f s", worst_residual, 100.0 * worst_gap, s);
  return o;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  Outcome o;
  const GradSuiteReport report = run_gradient_suite({});
  double kernels = 0.0, models = 0.0;
  for (const GradSuiteCase& c : report.cases) {
    o.require(c.passed() && c.instances == 100, c.name + " failed, worst " + fmt("%.2e", c.worst_error));
    double& worst = c.name.rfind("kernel.", 0) == 0 ? kernels : models;
    worst = std::max(worst, c.worst_error);
  }
  std::set<std::string> names;
  for (const GradSuiteCase& c : report.cases) names.insert(c.name);
  for (const char* needed : {"dot_loss", "cls_loss", "modulator.modulated", "icg_forward"})
    o.require(names.count(needed) == 1, std::string("missing case ") + needed);
  const double s = seconds_since(t0);
  o.require(s < 60.0, "runtime over 60 s");
  if (o.pass) {
    o.detail = std::to_string(report.cases.size()) + " cases x 100, worst kernel " + fmt("%.1e", kernels) +
               ", worst model path " + fmt("%.1e, %.1f s", models, s);
  }
  return o;
}

// phi copies (dx, dy) into two channels, so gamma is the Euclidean distance.
ModelParams copy_phi_params() {
  ModelShape shape = small_shape();
  shape.phi_linear = true;
  ModelParams p = ModelParams::init(shape, 1);
  p.phi_in = Tensor(2, shape.phi_hidden);
  p.phi_in(0, 0) = p.phi_in(1, 1) = 1.0;
  p.phi_out = Tensor(shape.phi_hidden, shape.channels());
  p.phi_out(0, 0) = p.phi_out(1, 1) = 1.0;
  return p;
}

Outcome structural_invariants() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> count(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = count(rng) - 1, n = count(rng);
    const Tensor map = uniform({m + n, m + n}, rng);
    o.require(split_quadrants(map, m, n).assemble() == map, "quadrant round trip not exact");
    Tape tape;
    const Tensor soft = ops::softmax_rows(tape.leaf(uniform({m + n, 7}, rng, -30.0, 30.0))).value();
    for (std::size_t r = 0; r < soft.rows(); ++r) {
      const auto row = soft.row(r);
      o.require(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9, "softmax row sum off");
    }
  }
  IcgOptions dasa;
  dasa.dasa = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = count(rng), n = count(rng);
    const ModelParams params = ModelParams::init(small_shape(), rng());
    const Tensor fp = uniform({m, 16}, rng, -1.0, 1.0), fc = uniform({n, 16}, rng, -1.0, 1.0);
    const Tensor pp = uniform({m, 2}, rng), pc = uniform({n, 2}, rng);
    const DescriptorSet prev(fp, pp, {2, 2}), curr(fc, pc, {2, 2});
    const IcgOutput plain = icg_forward(prev, curr, nullptr, params, {});
    for (std::size_t r = 0; r < plain.attention.rows(); ++r) {
      const auto row = plain.attention.row(r);
      o.require(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9, "attention row sum off");
    }
    const PriorField prior = build_prior_field(pp, pc, params);
    IcgOptions one = dasa;
    one.theta_override = 1.0;
    const IcgOutput unit = icg_forward(prev, curr, &prior, params, one);
    o.require(unit.enriched == plain.enriched && unit.modulated == plain.attention, "theta = 1 identity not exact");
    const Tensor still_prev(m, 2, 0.5), still_curr(n, 2, 0.5);
    const PriorField zero = build_prior_field(still_prev, still_curr, params);
    const DescriptorSet zp(fp, still_prev, {2, 2}), zc(fc, still_curr, {2, 2});
    o.require(icg_forward(zp, zc, &zero, params, dasa).enriched == icg_forward(zp, zc, nullptr, params, {}).enriched,
              "gamma = 0 identity not exact");
  }
  const ModelParams params = copy_phi_params();
  std::uniform_real_distribution<double> grow(1.05, 2.0);
  for (int probe = 0; probe < 1000; ++probe) {
    const std::size_t m = count(rng), n = count(rng);
    const Tensor fp = uniform({m, 16}, rng, -1.0, 1.0), fc = uniform({n, 16}, rng, -1.0, 1.0);
    const Tensor pp = uniform({m, 2}, rng);
    Tensor pc = uniform({n, 2}, rng);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
    auto weight = [&](const Tensor& cpos) {
      const PriorField f = build_prior_field(pp, cpos, params);
      return icg_forward(DescriptorSet(fp, pp, {2, 2}), DescriptorSet(fc, cpos, {2, 2}), &f, params, dasa)
          .modulated(m + j, i);
    };
    const double before = weight(pc);
    const double k = grow(rng);
    pc(j, 0) = pp(i, 0) + k * (pc(j, 0) - pp(i, 0));
    pc(j, 1) = pp(i, 1) + k * (pc(j, 1) - pp(i, 1));
    o.require(weight(pc) < before, "distance monotonicity violated on probe " + std::to_string(probe));
  }
  if (o.pass) o.detail = "round trip, row sums, reduction identities, 1000 monotonicity probes";
  return o;
}

Outcome counting_exactness() {
  Outcome o;
  std::size_t pairs = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SimConfig c;
    c.seed = 500 + seed;
    c.frames = 10 + seed % 15;
    c.occlusion_rate = 0.2 * static_cast<double>(seed % 3);
    c.groups_per_frame_rate = 0.3 + 0.02 * static_cast<double>(seed);
    c.max_visible = 8 + seed % 16;
    const SimSequence s = generate(c);
    std::vector<std::int64_t> inflows;
    for (std::size_t t = 0; t + 1 < s.video.frames.size(); ++t, ++pairs) {
      const MatchResult r = derive_flows(oracle_probabilities(s, t), 5);
      o.require(r.inflow == s.truth_flows[t].first && r.outflow == s.truth_flows[t].second,
                "flows differ on sequence " + std::to_string(seed));
      inflows.push_back(static_cast<std::int64_t>(r.inflow));
    }
    const auto first = static_cast<std::int64_t>(s.video.frames[0].counted().size());
    o.require(accumulate(first, inflows).total == s.distinct_identities(),
              "total differs on sequence " + std::to_string(seed));
  }
  if (o.pass) o.detail = "50 sequences, " + std::to_string(pairs) + " pairs exact";
  return o;
}

Outcome metric_arithmetic() {
  Outcome o;
  const VideoEval two = metrics({{"a", 10, 100, 90, ""}, {"b", 30, 200, 220, ""}});
  o.require(std::abs(two.wrae - 10.0) <= 1e-12, "two-video WRAE is not 10%");
  const VideoEval one = metrics({{"a", 10, 100, 90, ""}});
  o.require(std::abs(one.mae - 10.0) <= 1e-12 && std::abs(one.mse - 100.0) <= 1e-12 &&
                std::abs(one.wrae - 10.0) <= 1e-12,
            "single-video case wrong");
  const VideoEval perfect = metrics({{"a", 10, 100, 100, ""}, {"b", 7, 12, 12, ""}});
  o.require(perfect.mae == 0.0 && perfect.mse == 0.0 && perfect.wrae == 0.0, "perfect prediction not zero");
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> len(1, 400), vids(1, 10);
  std::uniform_real_distribution<double> truth(1.0, 300.0), err(-60.0, 60.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<VideoRecord> v(vids(rng));
    for (VideoRecord& r : v) {
      r.length = len(rng);
      r.truth = std::round(truth(rng));
      r.predicted = std::max(0.0, std::round(r.truth + err(rng)));
    }
    const VideoEval e = metrics(v);
    o.require(e.mae <= std::sqrt(e.mse) + 1e-12, "MAE exceeds sqrt(MSE)");
  }
  if (o.pass) o.detail = "unit cases exact, 1000 randomized MAE <= sqrt(MSE)";
  return o;
}

Outcome cost_matrix_properties() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> count(1, 6);
  std::uniform_real_distribution<double> scale(0.5, 2.0), shift(-3.0, 3.0), unit(0.0, 1.0), jitter(-0.03, 0.03);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor gamma = uniform({count(rng), count(rng)}, rng);
    const Tensor c = displacement_cost(gamma);
    for (double v : c.values()) o.require(v >= 0.0 && v < 1.0, "C_disp entry outside [0,1)");
    const double a = scale(rng), b = shift(rng);
    Tensor moved = gamma;
    for (double& v : moved.values()) v = a * v + b;
    const Tensor c2 = displacement_cost(moved);
    for (std::size_t k = 0; k < c.size(); ++k) worst = std::max(worst, std::abs(c[k] - c2[k]));
  }
  o.require(worst <= 1e-6, "affine invariance above 1e-6");
  // Separable configurations: previous points at least 0.25 apart, each
  // current point a jittered copy of a distinct previous point.
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 5;
    Tensor prev(n, 2);
    for (std::size_t i = 0; i < n; ++i)
      for (bool ok = false; !ok;) {
        prev(i, 0) = unit(rng);
        prev(i, 1) = unit(rng);
        ok = true;
        for (std::size_t k = 0; k < i; ++k)
          ok = ok && std::hypot(prev(i, 0) - prev(k, 0), prev(i, 1) - prev(k, 1)) > 0.25;
      }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor gamma(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double x = prev(perm[j], 0) + jitter(rng), y = prev(perm[j], 1) + jitter(rng);
      for (std::size_t i = 0; i < n; ++i) gamma(j, i) = std::hypot(x - prev(i, 0), y - prev(i, 1));
    }
    const Tensor c = displacement_cost(gamma);
    for (std::size_t j = 0; j < n; ++j) {
      const auto row = c.row(j);
      o.require(static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin()) == perm[j],
                "argmin misses the nearest pair on trial " + std::to_string(trial));
    }
  }
  if (o.pass) o.detail = fmt("entries in [0,1), affine drift %.1e, 100 separable argmin trials", worst);
  return o;
}

struct SeedResult {
  double full = 0.0, appearance = 0.0, o2o = 0.0;
};

double held_out_wrae(const TrainResult& model, PipelineConfig config, const std::vector<Video>& held_out) {
  const std::vector<SequenceRun> runs = infer(held_out, model_scorer(model.params, config), config);
  return metrics(evaluation_records(held_out, runs, config.interval)).wrae;
}

SeedResult directional_seed(std::uint64_t seed) {
  SimConfig sim;
  sim.descriptor_dim = 16;
  sim.occlusion_rate = 0.2;
  sim.max_visible = 12;
  sim.initial_groups = 3;
  sim.groups_per_frame_rate = 0.5;
  sim.spawn_clearance = 0.3;
  std::vector<Video> train_set, held_out;
  for (std::uint64_t i = 0; i < 25; ++i) {
    sim.seed = seed * 1000 + i;
    (i < 20 ? train_set : held_out).push_back(generate(sim).video);
  }
  PipelineConfig full;
  full.shape = small_shape();
  full.shape.head_layers = 3;
  full.lambda = 0.1;
  full.learning_rate = 0.2;
  full.epochs = 40;
  full.batch_size = 4;
  full.seed = seed;
  PipelineConfig appearance = full;
  appearance.dasa = false;
  appearance.modulator = false;
  appearance.dot_loss = false;

  SeedResult r;
  const TrainResult model = train(train_set, full);
  r.full = held_out_wrae(model, full, held_out);
  PipelineConfig o2o = full;
  o2o.ompm = false;
  r.o2o = held_out_wrae(model, o2o, held_out);
  r.appearance = held_out_wrae(train(train_set, appearance), appearance, held_out);
  return r;
}

Outcome end_to_end_direction() {
  const auto t0 = Clock::now();
  Outcome o;
  std::size_t holds = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SeedResult r = directional_seed(seed);
    const bool ok = r.full <= 15.0 && r.full < r.appearance && r.full <= r.o2o;
    holds += ok ? 1 : 0;
    std::printf("    seed %llu: full %.2f%%  appearance-only %.2f%%  one-to-one %.2f%%  %s\n",
                static_cast<unsigned long long>(seed), r.full, r.appearance, r.o2o, ok ? "holds" : "violated");
    std::fflush(stdout);
  }
  const double s = seconds_since(t0);
  o.require(holds >= 4, std::to_string(holds) + "/5 seeds hold the trends");
  o.require(s < 600.0, fmt("runtime %.0f s over 10 min", s));
  if (o.pass) o.detail = std::to_string(holds) + "/5 seeds hold all trends, " + fmt("%.0f s", s);
  return o;
}

Outcome determinism() {
  Outcome o;
  SimConfig sim;
  sim.seed = 77;
  sim.occlusion_rate = 0.2;
  sim.mask_regions = {{0.0, 0.0, 0.2, 0.3}};
  const SimSequence a = generate(sim), b = generate(sim);
  bool same = a.video.frames == b.video.frames && a.truth_flows == b.truth_flows;
  for (std::size_t t = 0; same && t < a.video.descriptors.size(); ++t)
    same = a.video.descriptors[t] == b.video.descriptors[t];
  o.require(same, "simulator output differs");

  std::vector<Video> videos;
  for (std::uint64_t i = 0; i < 4; ++i) {
    sim.seed = 900 + i;
    sim.frames = 10;
    videos.push_back(generate(sim).video);
  }
  PipelineConfig config;
  config.shape = small_shape();
  config.learning_rate = 0.2;
  config.epochs = 5;
  config.seed = 3;
  const TrainResult m1 = train(videos, config), m2 = train(videos, config);
  o.require(m1.epoch_losses == m2.epoch_losses, "training curves differ");
  std::vector<Tensor> p1, p2;
  m1.params.for_each([&](const std::string&, const Tensor& t) { p1.push_back(t); });
  m2.params.for_each([&](const std::string&, const Tensor& t) { p2.push_back(t); });
  o.require(p1 == p2, "trained parameters differ");

  const std::vector<SequenceRun> r1 = infer(videos, model_scorer(m1.params, config), config);
  const std::vector<SequenceRun> r2 = infer(videos, model_scorer(m2.params, config), config);
  for (std::size_t v = 0; v < videos.size(); ++v) {
    o.require(r1[v].result.per_pair_inflows == r2[v].result.per_pair_inflows, "inference totals differ");
    for (std::size_t k = 0; k < r1[v].pairs.size(); ++k)
      o.require(r1[v].pairs[k].probabilities == r2[v].pairs[k].probabilities, "inference probabilities differ");
  }
  if (o.pass) o.detail = "simulator, training curve, parameters and inference bit-identical";
  return o;
}

}  // namespace
}  // namespace vic

int main(int argc, char** argv) {
  using namespace vic;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "assignment oracle equivalence", assignment_oracle},
      {2, "sinkhorn contracts", sinkhorn_contracts},
      {3, "gradient suite", gradient_suite},
      {4, "structural invariants", structural_invariants},
      {5, "counting exactness", counting_exactness},
      {6, "metric arithmetic", metric_arithmetic},
      {7, "cost-matrix properties", cost_matrix_properties},
      {8, "end-to-end directional check", end_to_end_direction},
      {9, "determinism", determinism},
  };
  std::set<int> chosen;
  for (int i = 1; i < argc; ++i) chosen.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!chosen.empty() && !chosen.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
