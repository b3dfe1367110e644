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

#include "vic/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vic/error.hpp"

namespace vic {

namespace {

void compare(double analytic, double numeric, std::size_t input, std::size_t index,
             const GradCheckOptions& options, GradCheckReport& report) {
  const double abs_err = std::abs(analytic - numeric);
  const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
  const double rel = abs_err / denom;
  report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
  if (rel > report.max_relative_error) {
    report.max_relative_error = rel;
    report.worst_input = input;
    report.worst_index = index;
  }
}

double checked(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "function evaluated to a non-finite value");
  return v;
}

}  // namespace

GradCheckReport check_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               const Tensor& analytic, const GradCheckOptions& options) {
  if (!x.same_shape(analytic) && x.size() != analytic.size()) {
    throw Error(ErrorCode::shape_mismatch, "analytic gradient shape");
  }
  GradCheckReport report;
  checked(f(x));
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + options.step;
    const double up = checked(f(probe));
    probe[i] = orig - options.step;
    const double down = checked(f(probe));
    probe[i] = orig;
    report.evaluations += 2;
    compare(analytic[i], (up - down) / (2.0 * options.step), 0, i, options, report);
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

GradCheckReport check_graph_gradient(const GraphBuilder& build, const std::vector<Tensor>& inputs,
                                     const GradCheckOptions& options) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
  const Var out = build(tape, leaves);
  checked(out.value()[0]);
  tape.backward(out);

  GradCheckReport report;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const Tensor analytic = tape.grad(leaves[k]);
    Tensor probe = inputs[k];
    for (std::size_t i = 0; i < probe.size(); ++i) {
      const double orig = probe[i];
      probe[i] = orig + options.step;
      tape.set_value(leaves[k], probe);
      tape.replay();
      const double up = checked(out.value()[0]);
      probe[i] = orig - options.step;
      tape.set_value(leaves[k], probe);
      tape.replay();
      const double down = checked(out.value()[0]);
      probe[i] = orig;
      report.evaluations += 2;
      compare(analytic[i], (up - down) / (2.0 * options.step), k, i, options, report);
    }
    tape.set_value(leaves[k], inputs[k]);
  }
  tape.replay();
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace vic
