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

#include "vic/error.hpp"

namespace vic {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::coordinate_out_of_range: return "coordinate-out-of-range";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::dimension_indivisible: return "dimension-indivisible";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::size_mismatch: return "size-mismatch";
    case ErrorCode::non_finite: return "non-finite";
    case ErrorCode::probability_out_of_range: return "probability-out-of-range";
    case ErrorCode::marginal_mass_mismatch: return "marginal-mass-mismatch";
    case ErrorCode::zero_norm_feature: return "zero-norm-feature";
    case ErrorCode::negative_input: return "negative-input";
    case ErrorCode::zero_truth_count: return "zero-truth-count";
    case ErrorCode::empty_sequence: return "empty-sequence";
    case ErrorCode::index_out_of_range: return "index-out-of-range";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::unknown_label: return "unknown-label";
    case ErrorCode::malformed_polygon: return "malformed-polygon";
    case ErrorCode::missing_model: return "missing-model";
    case ErrorCode::missing_data: return "missing-data";
    case ErrorCode::non_finite_loss: return "non-finite-loss";
  }
  return "unknown";
}

}  // namespace vic
