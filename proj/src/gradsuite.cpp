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

#include "vic/gradsuite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <utility>

#include "vic/gradcheck.hpp"
#include "vic/icg.hpp"
#include "vic/losses.hpp"
#include "vic/ompm.hpp"
#include "vic/ops.hpp"
#include "vic/params.hpp"

namespace vic {

bool GradSuiteReport::passed() const noexcept {
  return !cases.empty() && std::all_of(cases.begin(), cases.end(), [](const GradSuiteCase& c) { return c.passed(); });
}

namespace {

using Rng = std::mt19937_64;
using Clock = std::chrono::steady_clock;

// Kink margin for rejection; a 1e-5 step moves any relu or clamp input by far less.
constexpr double kKinkMargin = 1e-3;
constexpr std::size_t kMaxRedraws = 200;

std::size_t draw_count(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor gaussian(std::vector<std::size_t> shape, Rng& rng, double stddev = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Tensor uniform(std::vector<std::size_t> shape, Rng& rng, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

// Magnitude in [lo, hi] with a random sign.
Tensor signed_uniform(std::vector<std::size_t> shape, Rng& rng, double lo, double hi) {
  Tensor t = uniform(std::move(shape), rng, lo, hi);
  std::bernoulli_distribution flip(0.5);
  for (double& v : t.values())
    if (flip(rng)) v = -v;
  return t;
}

// sum(out (.) R) with a fixed random R, so no output direction is privileged.
// R is scaled by 1/sqrt(size) to keep the scalar O(1) and its rounding noise
// below the comparison floor.
Var readout(Var out, std::uint64_t seed) {
  Rng rng(seed);
  const double size = static_cast<double>(out.value().size());
  const Var weights = out.tape()->constant(gaussian(out.value().shape(), rng, 1.0 / std::sqrt(size)));
  return ops::sum_all(ops::hadamard(out, weights));
}

struct Instance {
  std::vector<Tensor> inputs;
  GraphBuilder build;
};

using InstanceFactory = std::function<Instance(Rng&)>;

struct CaseDef {
  std::string name;
  double tolerance;
  InstanceFactory factory;
};

// Draws instances until one stays clear of every kink, then checks it.
GradSuiteCase run_case(const CaseDef& def, std::size_t instances, std::uint64_t seed) {
  const auto start = Clock::now();
  GradSuiteCase result;
  result.name = def.name;
  result.tolerance = def.tolerance;
  Rng rng(seed);
  GradCheckOptions options;
  options.tolerance = def.tolerance;
  for (std::size_t k = 0; k < instances; ++k) {
    Instance inst;
    for (std::size_t attempt = 0;; ++attempt) {
      inst = def.factory(rng);
      ops::KinkMonitor monitor;
      Tape probe;
      std::vector<Var> leaves;
      for (const Tensor& t : inst.inputs) leaves.push_back(probe.leaf(t));
      inst.build(probe, leaves);
      if (monitor.margin() >= kKinkMargin || attempt + 1 >= kMaxRedraws) break;
      ++result.rejected;
    }
    const GradCheckReport report = check_graph_gradient(inst.build, inst.inputs, options);
    ++result.instances;
    if (k == 0 || report.max_relative_error > result.worst_error) {
      result.worst_error = report.max_relative_error;
      result.worst_instance = k;
      result.worst_input = report.worst_input;
      result.worst_index = report.worst_index;
      result.worst_absolute = report.max_absolute_error;
    }
    if (!report.passed) ++result.failures;
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

// Elementary kernels. Each factory draws small random operands and wraps the
// kernel output in a random linear readout.
using KernelBody = std::function<Var(Tape&, const std::vector<Var>&)>;

CaseDef kernel(std::string name, double tol, std::function<std::vector<Tensor>(Rng&)> draw, KernelBody body) {
  InstanceFactory factory = [draw = std::move(draw), body = std::move(body)](Rng& rng) {
    Instance inst;
    inst.inputs = draw(rng);
    const std::uint64_t rseed = rng();
    inst.build = [body, rseed](Tape& tape, const std::vector<Var>& x) { return readout(body(tape, x), rseed); };
    return inst;
  };
  return CaseDef{"kernel." + std::move(name), tol, std::move(factory)};
}

std::vector<CaseDef> kernel_cases(double tol) {
  auto dims = [](Rng& rng) { return std::pair{draw_count(rng, 1, 5), draw_count(rng, 1, 5)}; };
  auto one = [dims](std::function<Tensor(std::vector<std::size_t>, Rng&)> gen) {
    return [dims, gen](Rng& rng) {
      const auto [r, c] = dims(rng);
      return std::vector<Tensor>{gen({r, c}, rng)};
    };
  };
  auto normal = [](std::vector<std::size_t> s, Rng& rng) { return gaussian(std::move(s), rng); };
  auto positive = [](std::vector<std::size_t> s, Rng& rng) { return uniform(std::move(s), rng, 0.2, 3.0); };
  // Second operand is full, one row, or one column.
  auto binary_draw = [dims](double lo, double hi, bool away_from_zero) {
    return [=](Rng& rng) {
      const auto [r, c] = dims(rng);
      const std::size_t mode = draw_count(rng, 0, 2);
      const std::size_t br = mode == 1 ? 1 : r, bc = mode == 2 ? 1 : c;
      Tensor b = away_from_zero ? signed_uniform({br, bc}, rng, lo, hi) : gaussian({br, bc}, rng);
      return std::vector<Tensor>{gaussian({r, c}, rng), std::move(b)};
    };
  };
  std::vector<CaseDef> out;
  out.push_back(kernel(
      "matmul", tol,
      [](Rng& rng) {
        const std::size_t r = draw_count(rng, 1, 5), k = draw_count(rng, 1, 5), c = draw_count(rng, 1, 5);
        return std::vector<Tensor>{gaussian({r, k}, rng), gaussian({k, c}, rng)};
      },
      [](Tape&, const std::vector<Var>& x) { return ops::matmul(x[0], x[1]); }));
  out.push_back(kernel("transpose", tol, one(normal),
                       [](Tape&, const std::vector<Var>& x) { return ops::transpose(x[0]); }));
  out.push_back(kernel("add", tol, binary_draw(0, 0, false),
                       [](Tape&, const std::vector<Var>& x) { return ops::add(x[0], x[1]); }));
  out.push_back(kernel("sub", tol, binary_draw(0, 0, false),
                       [](Tape&, const std::vector<Var>& x) { return ops::sub(x[0], x[1]); }));
  out.push_back(kernel("hadamard", tol, binary_draw(0, 0, false),
                       [](Tape&, const std::vector<Var>& x) { return ops::hadamard(x[0], x[1]); }));
  out.push_back(kernel("divide", tol, binary_draw(0.5, 2.0, true),
                       [](Tape&, const std::vector<Var>& x) { return ops::divide(x[0], x[1]); }));
  out.push_back(kernel("scale", tol, one(normal),
                       [](Tape&, const std::vector<Var>& x) { return ops::scale(x[0], -1.7); }));
  out.push_back(kernel("add_scalar", tol, one(normal),
                       [](Tape&, const std::vector<Var>& x) { return ops::add_scalar(x[0], 0.3); }));
  out.push_back(kernel("relu", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::relu(x[0]); }));
  out.push_back(
      kernel("sigmoid", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::sigmoid(x[0]); }));
  out.push_back(kernel("tanh", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::tanh(x[0]); }));
  out.push_back(kernel("exp", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::exp(x[0]); }));
  out.push_back(kernel("log", tol, one(positive), [](Tape&, const std::vector<Var>& x) { return ops::log(x[0]); }));
  out.push_back(kernel("sqrt", tol, one(positive), [](Tape&, const std::vector<Var>& x) { return ops::sqrt(x[0]); }));
  out.push_back(
      kernel("square", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::square(x[0]); }));
  out.push_back(kernel("clamp", tol, one(normal),
                       [](Tape&, const std::vector<Var>& x) { return ops::clamp(x[0], -0.5, 0.5); }));
  out.push_back(kernel(
      "pow_base", tol,
      [dims](Rng& rng) {
        const auto [r, c] = dims(rng);
        return std::vector<Tensor>{uniform({1, 1}, rng, 0.2, 0.95), uniform({r, c}, rng, 0.0, 3.0)};
      },
      [](Tape&, const std::vector<Var>& x) { return ops::pow_base(x[0], x[1]); }));
  out.push_back(kernel("softmax_rows", tol, one(normal),
                       [](Tape&, const std::vector<Var>& x) { return ops::softmax_rows(x[0]); }));
  out.push_back(kernel(
      "layer_norm_rows", tol,
      [](Rng& rng) {
        // Rows with a tiny spread sit near the normalization's singularity; redraw them.
        const std::size_t r = draw_count(rng, 1, 5), c = draw_count(rng, 2, 6);
        Tensor x = gaussian({r, c}, rng);
        for (std::size_t i = 0; i < r; ++i) {
          const auto row = x.row(i);
          while (*std::max_element(row.begin(), row.end()) - *std::min_element(row.begin(), row.end()) < 0.5) {
            for (double& v : row) v = std::normal_distribution<double>(0.0, 1.0)(rng);
          }
        }
        return std::vector<Tensor>{std::move(x)};
      },
      [](Tape&, const std::vector<Var>& x) { return ops::layer_norm_rows(x[0]); }));
  out.push_back(kernel(
      "row_norm", tol, one([](std::vector<std::size_t> s, Rng& rng) { return signed_uniform(std::move(s), rng, 0.3, 2.0); }),
      [](Tape&, const std::vector<Var>& x) { return ops::row_norm(x[0]); }));
  out.push_back(
      kernel("sum_rows", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::sum_rows(x[0]); }));
  out.push_back(
      kernel("sum_cols", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::sum_cols(x[0]); }));
  out.push_back(
      kernel("sum_all", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::sum_all(x[0]); }));
  out.push_back(
      kernel("mean_all", tol, one(normal), [](Tape&, const std::vector<Var>& x) { return ops::mean_all(x[0]); }));
  out.push_back(kernel(
      "global_avg_pool", tol,
      [](Rng& rng) {
        const std::size_t count = draw_count(rng, 1, 3), group = draw_count(rng, 1, 4);
        return std::vector<Tensor>{gaussian({count * group, draw_count(rng, 1, 4)}, rng),
                                   Tensor::scalar(static_cast<double>(group))};
      },
      [](Tape&, const std::vector<Var>& x) {
        const auto group = static_cast<std::size_t>(x[1].value()[0]);
        return ops::global_avg_pool(x[0], group);
      }));
  out.push_back(kernel("repeat_rows", tol, one(normal),
                       [](Tape&, const std::vector<Var>& x) { return ops::repeat_rows(x[0], 3); }));
  out.push_back(kernel(
      "concat_rows", tol,
      [](Rng& rng) {
        const std::size_t c = draw_count(rng, 1, 5);
        return std::vector<Tensor>{gaussian({draw_count(rng, 1, 4), c}, rng), gaussian({draw_count(rng, 1, 4), c}, rng)};
      },
      [](Tape&, const std::vector<Var>& x) { return ops::concat_rows({x[0], x[1]}); }));
  out.push_back(kernel(
      "concat_cols", tol,
      [](Rng& rng) {
        const std::size_t r = draw_count(rng, 1, 5);
        return std::vector<Tensor>{gaussian({r, draw_count(rng, 1, 4)}, rng), gaussian({r, draw_count(rng, 1, 4)}, rng)};
      },
      [](Tape&, const std::vector<Var>& x) { return ops::concat_cols({x[0], x[1]}); }));
  out.push_back(kernel(
      "slice_rows", tol, [](Rng& rng) { return std::vector<Tensor>{gaussian({draw_count(rng, 2, 6), 3}, rng)}; },
      [](Tape&, const std::vector<Var>& x) { return ops::slice_rows(x[0], 1, x[0].rows()); }));
  out.push_back(kernel(
      "slice_cols", tol, [](Rng& rng) { return std::vector<Tensor>{gaussian({3, draw_count(rng, 2, 6)}, rng)}; },
      [](Tape&, const std::vector<Var>& x) { return ops::slice_cols(x[0], 0, x[0].cols() - 1); }));
  out.push_back(kernel(
      "gather_rows", tol, [](Rng& rng) { return std::vector<Tensor>{gaussian({draw_count(rng, 1, 5), 3}, rng)}; },
      [](Tape&, const std::vector<Var>& x) {
        // Repeats exercise gradient accumulation.
        std::vector<std::size_t> index;
        for (std::size_t r = x[0].rows(); r-- > 0;) index.insert(index.end(), {r, r});
        return ops::gather_rows(x[0], std::move(index));
      }));
  out.push_back(kernel(
      "reshape", tol, [](Rng& rng) { return std::vector<Tensor>{gaussian({draw_count(rng, 1, 4), 6}, rng)}; },
      [](Tape&, const std::vector<Var>& x) { return ops::reshape(x[0], {x[0].rows() * 3, 2}); }));
  out.push_back(kernel(
      "linear", tol,
      [](Rng& rng) {
        const std::size_t r = draw_count(rng, 1, 5), k = draw_count(rng, 1, 5), c = draw_count(rng, 1, 5);
        return std::vector<Tensor>{gaussian({r, k}, rng), gaussian({k, c}, rng), gaussian({1, c}, rng)};
      },
      [](Tape&, const std::vector<Var>& x) { return ops::linear(x[0], x[1], x[2]); }));
  return out;
}

ModelShape suite_shape(std::size_t d) {
  ModelShape shape;
  shape.raw_dim = d;
  shape.d = d;
  shape.patch = PatchShape{2, 2};
  return shape;
}

// Model parameters split into perturbed leaves (names with one of the given
// prefixes) and constants, so a check only pays for what the graph uses.
struct ParamSplit {
  std::vector<std::string> names;
  std::vector<Tensor> values;
  std::vector<bool> free;
  std::size_t head_layers = 0;

  ParamSplit(const ModelParams& params, const std::vector<std::string>& prefixes) : head_layers(params.head.size()) {
    params.for_each([&](const std::string& name, const Tensor& t) {
      names.push_back(name);
      values.push_back(t);
      free.push_back(std::any_of(prefixes.begin(), prefixes.end(),
                                 [&](const std::string& p) { return name.rfind(p, 0) == 0; }));
    });
  }

  void append_free(std::vector<Tensor>& inputs) const {
    for (std::size_t k = 0; k < values.size(); ++k)
      if (free[k]) inputs.push_back(values[k]);
  }

  // Binds free params from `leaves` starting at `offset`, the rest as constants.
  BoundParams bind_from(Tape& tape, const std::vector<Var>& leaves, std::size_t offset) const {
    std::vector<Var> all;
    for (std::size_t k = 0; k < values.size(); ++k) all.push_back(free[k] ? leaves[offset++] : tape.constant(values[k]));
    return vic::bind(all, head_layers);
  }
};

ModelParams random_params(const ModelShape& shape, Rng& rng) {
  ModelParams params = ModelParams::init(shape, rng());
  // Non-trivial modulator and head biases; init leaves them at zero.
  std::normal_distribution<double> dist(0.0, 0.3);
  params.for_each([&](const std::string& name, Tensor& t) {
    if (name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0)
      for (double& v : t.values()) v = dist(rng);
  });
  params.theta_raw[0] = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  return params;
}

// Unit-norm-ish rows keep cosine similarity away from its zero-norm guard.
Tensor features(std::size_t rows, std::size_t d, Rng& rng) { return gaussian({rows, d}, rng, 0.5); }

CaseDef dot_case(const GradSuiteOptions& o) {
  return CaseDef{"dot_loss", o.model_tolerance, [o](Rng& rng) {
                    const std::size_t m = draw_count(rng, 1, o.max_count), n = draw_count(rng, 1, o.max_count);
                    Instance inst;
                    inst.inputs = {features(m, o.d, rng), features(n, o.d, rng), uniform({n, m}, rng, 0.0, 1.5)};
                    DotOptions dot;
                    inst.build = [dot](Tape&, const std::vector<Var>& x) {
                      return dot_loss(displacement_cost(x[2]), appearance_cost(x[0], x[1]), dot).loss;
                    };
                    return inst;
                  }};
}

std::vector<bool> random_flags(std::size_t count, Rng& rng) {
  std::bernoulli_distribution keep(0.8);
  std::vector<bool> flags(count);
  for (std::size_t i = 0; i < count; ++i) flags[i] = keep(rng);
  return flags;
}

CaseDef cls_case(const GradSuiteOptions& o) {
  return CaseDef{"cls_loss", o.cls_tolerance, [o](Rng& rng) {
                    const std::size_t m = draw_count(rng, 1, o.max_count), n = draw_count(rng, 1, o.max_count);
                    const Tensor prev = uniform({m, 2}, rng, 0.0, 1.0), curr = uniform({n, 2}, rng, 0.0, 1.0);
                    // Probabilities stay clear of the clamp and of the 0.5 threshold.
                    Tensor p = uniform({n, m}, rng, 0.02, 0.98);
                    for (double& v : p.values())
                      if (std::abs(v - 0.5) < 0.01) v += 0.02;
                    const std::vector<bool> pp = random_flags(m, rng), cp = random_flags(n, rng);
                    const CandidateSet candidates = select_candidates(prev, curr, p, 0.3, &pp, &cp, true);
                    Instance inst;
                    inst.inputs = {p};
                    inst.build = [candidates](Tape&, const std::vector<Var>& x) { return cls_loss(x[0], candidates); };
                    return inst;
                  }};
}

CaseDef modulator_case(const GradSuiteOptions& o, HeadInput head) {
  const std::string name = std::string("modulator.") + to_string(head);
  return CaseDef{name, o.model_tolerance, [o, head](Rng& rng) {
                    ModelShape shape = suite_shape(o.d);
                    shape.head_input = head;
                    const ParamSplit split(random_params(shape, rng),
                                           {"delta.", "conv.", "alpha.", "beta.", "head."});
                    const std::size_t m = draw_count(rng, 1, o.max_count), n = draw_count(rng, 1, o.max_count);
                    Instance inst;
                    inst.inputs = {features(m, o.d, rng), features(n, o.d, rng),
                                   gaussian({n * m, shape.channels()}, rng)};
                    split.append_free(inst.inputs);
                    const std::uint64_t rseed = rng();
                    inst.build = [split, shape, rseed](Tape& tape, const std::vector<Var>& x) {
                      const BoundParams bound = split.bind_from(tape, x, 3);
                      const PairwiseVars pw = ompm_forward(x[0], x[1], x[2], bound, shape);
                      return readout(pw.probabilities, rseed);
                    };
                    return inst;
                  }};
}

Tensor stacked(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows() + b.rows(), a.cols());
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

CaseDef icg_case(const GradSuiteOptions& o) {
  return CaseDef{"icg_forward", o.model_tolerance, [o](Rng& rng) {
                    const ModelShape shape = suite_shape(o.d);
                    const ParamSplit split(random_params(shape, rng),
                                           {"embed.", "attn.", "phi.", "ffn."});
                    const std::size_t m = draw_count(rng, 1, o.max_count), n = draw_count(rng, 1, o.max_count);
                    const Tensor prev = uniform({m, 2}, rng, 0.0, 1.0), curr = uniform({n, 2}, rng, 0.0, 1.0);
                    const Tensor pos = position_embed(stacked(prev, curr), shape.d);
                    Instance inst;
                    inst.inputs = {gaussian({m + n, shape.raw_dim}, rng)};
                    split.append_free(inst.inputs);
                    const std::uint64_t rseed = rng();
                    inst.build = [=](Tape& tape, const std::vector<Var>& x) {
                      const BoundParams bound = split.bind_from(tape, x, 1);
                      const Var tokens = ops::add(bound.embed(x[0]), tape.constant(pos));
                      const PriorVars prior = build_prior(tape, bound, shape, prev, curr);
                      IcgOptions icg;
                      icg.dasa = true;
                      const IcgVars v = icg_forward(tokens, m, n, bound, shape, prior.full_cost, icg);
                      return readout(ops::concat_cols({v.enriched, v.context}), rseed);
                    };
                    return inst;
                  }};
}

bool selected(const std::string& name, const std::vector<std::string>& only) {
  return only.empty() ||
         std::any_of(only.begin(), only.end(), [&](const std::string& p) { return name.rfind(p, 0) == 0; });
}

}  // namespace

GradSuiteReport run_gradient_suite(const GradSuiteOptions& options) {
  const auto start = Clock::now();
  std::vector<CaseDef> defs = kernel_cases(options.kernel_tolerance);
  defs.push_back(dot_case(options));
  defs.push_back(cls_case(options));
  defs.push_back(modulator_case(options, HeadInput::modulated));
  defs.push_back(modulator_case(options, HeadInput::concat));
  defs.push_back(icg_case(options));

  GradSuiteReport report;
  std::uint64_t seed = options.seed;
  for (const CaseDef& def : defs) {
    // Per-case streams keep each case reproducible under filtering.
    seed = seed * 6364136223846793005ULL + 1442695040888963407ULL;
    if (!selected(def.name, options.only)) continue;
    report.cases.push_back(run_case(def, options.instances, seed));
  }
  report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace vic
