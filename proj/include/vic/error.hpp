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

#include <stdexcept>
#include <string>

namespace vic {

enum class ErrorCode {
  coordinate_out_of_range,
  length_mismatch,
  shape_mismatch,
  dimension_indivisible,
  dimension_mismatch,
  size_mismatch,
  non_finite,
  probability_out_of_range,
  marginal_mass_mismatch,
  zero_norm_feature,
  negative_input,
  zero_truth_count,
  empty_sequence,
  index_out_of_range,
  invalid_config,
  parse_error,
  unknown_label,
  malformed_polygon,
  missing_model,
  missing_data,
  non_finite_loss,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vic
