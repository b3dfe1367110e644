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
#include <string>
#include <vector>

namespace vic {

// One family of randomized gradient checks.
struct GradSuiteCase {
  std::string name;
  double tolerance = 0.0;
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::size_t rejected = 0;  // resampled because an input sat near a kink
  double worst_error = 0.0;
  // Where worst_error occurred.
  std::size_t worst_instance = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_absolute = 0.0;
  double seconds = 0.0;
  bool passed() const noexcept { return instances > 0 && failures == 0; }
};

struct GradSuiteReport {
  std::vector<GradSuiteCase> cases;
  double seconds = 0.0;
  bool passed() const noexcept;
};

struct GradSuiteOptions {
  std::uint64_t seed = 1;
  std::size_t instances = 100;  // per case
  std::size_t max_count = 6;    // m, n drawn from [1, max_count]
  std::size_t d = 16;
  double kernel_tolerance = 1e-6;
  double model_tolerance = 1e-5;
  double cls_tolerance = 1e-6;
  // Case-name prefixes to run; empty runs everything.
  std::vector<std::string> only;
};

// Every elementary kernel, then the D-OT loss with a frozen plan, the
// classification loss, the modulator and match head, and icg_forward with
// DASA and the prior projection.
GradSuiteReport run_gradient_suite(const GradSuiteOptions& options = {});

}  // namespace vic
