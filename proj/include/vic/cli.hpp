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

#include <iosfwd>

#include "json.hpp"
#include "vic/pipeline.hpp"

namespace vic {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitCheck = 3;

// Run settings as stored in a model file's metadata.
nlohmann::json to_json(const PipelineConfig& config);
// Starts from `base` and overrides every key present in `j`.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base = {});

// Subcommands: generate, validate, train, infer, evaluate, checkgrad, dump, ablate.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vic
