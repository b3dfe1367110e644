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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "vic/core.hpp"
#include "vic/flux.hpp"
#include "vic/params.hpp"

namespace vic {

// Inclusive of the boundary. Throws malformed_polygon below three vertices.
bool point_in_polygon(const Point& p, const std::vector<Point>& polygon);

// One JSON object per line per frame:
//   {"frame_id":0,"points":[{"x":..,"y":..,"label":"inflow","id":3,"desc":[..]}],"masks":[[{"x":..,"y":..},..]]}
// Points inside any mask polygon are flagged masked. `id` and `desc` are
// optional but must be present on every point when present on any.
Video read_annotations(std::istream& in, const std::string& name = "");
Video read_annotations(const std::filesystem::path& path);
void write_annotations(std::ostream& out, const Video& video);
void write_annotations(const std::filesystem::path& path, const Video& video);

// All *.jsonl files under `path` (sorted), or the single file itself.
std::vector<Video> read_dataset(const std::filesystem::path& path);

// Resolves relative paths against VIC_DATA_ROOT when it is set.
std::filesystem::path resolve_data_path(const std::filesystem::path& path);

inline constexpr char kModelMagic[8] = {'V', 'I', 'C', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

// Layout: magic, u32 version, u64 header length, JSON header (shapes, names,
// caller metadata), then every tensor as little-endian float64 in for_each order.
void save_model(const std::filesystem::path& path, const ModelParams& params, const nlohmann::json& metadata);
ModelParams load_model(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

nlohmann::json to_json(const ModelShape& shape);
ModelShape model_shape_from_json(const nlohmann::json& j);

// Fixed-header CSV writers.
// Each writer emits its header row when `header` is set.
void write_prior_csv(std::ostream& out, const std::string& video, std::size_t pair, const PriorField& prior,
                     bool header);  // video,pair,curr,prev,dx,dy,gamma
void write_attention_csv(std::ostream& out, const std::string& video, std::size_t pair, const Tensor& attention,
                         const Tensor& modulated, const Tensor& gamma,
                         bool header);  // video,pair,row_idx,col_idx,attn,modulated_attn,gamma
void write_flows_csv(std::ostream& out, const std::string& video, const SequenceRun& run,
                     bool header);  // video,pair,prev_frame,curr_frame,inflow,outflow
void write_totals_csv(std::ostream& out, const std::string& video, const SequenceRun& run, std::size_t frames,
                      bool header);  // video,frames,first_count,total
void write_loss_csv(std::ostream& out, const std::vector<double>& losses);  // epoch,loss

// video,tag rows; a "video,tag" header row is optional.
std::map<std::string, std::string> read_tags(const std::filesystem::path& path);

}  // namespace vic
