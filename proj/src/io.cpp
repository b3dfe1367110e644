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

#include "vic/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vic/error.hpp"

namespace vic {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

bool point_in_polygon(const Point& p, const std::vector<Point>& polygon) {
  if (polygon.size() < 3) throw Error(ErrorCode::malformed_polygon, "polygon needs at least three vertices");
  const std::size_t k = polygon.size();
  // Boundary first so edges count as inside.
  for (std::size_t i = 0; i < k; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % k];
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross == 0.0 && p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
        p.y <= std::max(a.y, b.y)) {
      return true;
    }
  }
  bool inside = false;
  for (std::size_t i = 0, j = k - 1; i < k; j = i++) {
    const Point& a = polygon[i];
    const Point& b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what, ErrorCode code = ErrorCode::parse_error) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

double number_field(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) parse_fail(line, std::string("missing numeric field '") + key + "'");
  const double v = it->get<double>();
  if (!std::isfinite(v)) parse_fail(line, std::string("non-finite field '") + key + "'");
  return v;
}

std::vector<Point> parse_polygon(const json& j, std::size_t line) {
  if (!j.is_array()) parse_fail(line, "mask must be a vertex list", ErrorCode::malformed_polygon);
  std::vector<Point> poly;
  for (const json& v : j) {
    if (!v.is_object()) parse_fail(line, "mask vertex must be an object", ErrorCode::malformed_polygon);
    poly.push_back({number_field(v, "x", line), number_field(v, "y", line)});
  }
  if (poly.size() < 3) parse_fail(line, "mask polygon needs at least three vertices", ErrorCode::malformed_polygon);
  return poly;
}

}  // namespace

Video read_annotations(std::istream& in, const std::string& name) {
  Video video;
  video.name = name;
  std::string text;
  std::size_t line = 0;
  std::optional<bool> with_desc;
  std::size_t desc_width = 0;
  bool any_masks = false;
  std::vector<std::vector<std::vector<double>>> all_descs;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      parse_fail(line, e.what());
    }
    if (!record.is_object()) parse_fail(line, "frame record must be an object");
    const auto fid = record.find("frame_id");
    if (fid == record.end() || !fid->is_number_integer()) parse_fail(line, "missing integer 'frame_id'");
    const auto pts = record.find("points");
    if (pts == record.end() || !pts->is_array()) parse_fail(line, "missing 'points' array");

    FramePoints frame;
    frame.frame_id = fid->get<std::int64_t>();
    std::vector<std::vector<Point>> masks;
    if (const auto m = record.find("masks"); m != record.end()) {
      if (!m->is_array()) parse_fail(line, "'masks' must be an array", ErrorCode::malformed_polygon);
      for (const json& poly : *m) masks.push_back(parse_polygon(poly, line));
    }
    any_masks = any_masks || !masks.empty();

    std::vector<std::vector<double>> descs;
    std::optional<bool> with_id;
    for (const json& p : *pts) {
      if (!p.is_object()) parse_fail(line, "point must be an object");
      const Point pt{number_field(p, "x", line), number_field(p, "y", line)};
      const auto lab = p.find("label");
      if (lab == p.end() || !lab->is_string()) parse_fail(line, "point needs a string 'label'");
      const auto label = parse_label(lab->get<std::string>());
      if (!label) parse_fail(line, "unknown label '" + lab->get<std::string>() + "'", ErrorCode::unknown_label);

      const auto id = p.find("id");
      const bool has_id = id != p.end();
      if (with_id && *with_id != has_id) parse_fail(line, "'id' must be given for all points of a frame or none");
      with_id = has_id;
      if (has_id) {
        if (!id->is_number_integer()) parse_fail(line, "'id' must be an integer");
        frame.identity.push_back(id->get<std::int64_t>());
      }

      const auto desc = p.find("desc");
      const bool has_desc = desc != p.end();
      if (with_desc && *with_desc != has_desc) parse_fail(line, "'desc' must be given for all points or none");
      with_desc = has_desc;
      if (has_desc) {
        if (!desc->is_array()) parse_fail(line, "'desc' must be an array");
        std::vector<double> row;
        for (const json& v : *desc) {
          if (!v.is_number()) parse_fail(line, "'desc' entries must be numbers");
          row.push_back(v.get<double>());
        }
        if (desc_width == 0) desc_width = row.size();
        if (row.empty() || row.size() != desc_width) parse_fail(line, "inconsistent 'desc' width");
        descs.push_back(std::move(row));
      }

      bool masked = false;
      for (const auto& poly : masks) masked = masked || point_in_polygon(pt, poly);
      frame.points.push_back(pt);
      frame.labels.push_back(*label);
      frame.masked.push_back(masked);
    }
    if (const auto err = validate(frame)) parse_fail(line, err->message, err->code);
    all_descs.push_back(std::move(descs));
    video.frames.push_back(std::move(frame));
    video.masks.push_back(std::move(masks));
  }
  if (!any_masks) video.masks.clear();
  if (desc_width > 0) {
    for (const auto& descs : all_descs) {
      Tensor t(descs.size(), desc_width);
      for (std::size_t r = 0; r < descs.size(); ++r) std::copy(descs[r].begin(), descs[r].end(), t.row(r).begin());
      video.descriptors.push_back(std::move(t));
    }
  }
  return video;
}

Video read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_data, "cannot open " + path.string());
  return read_annotations(in, path.stem().string());
}

void write_annotations(std::ostream& out, const Video& video) {
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    const FramePoints& f = video.frames[t];
    json points = json::array();
    for (std::size_t k = 0; k < f.size(); ++k) {
      json p = {{"x", f.points[k].x}, {"y", f.points[k].y}, {"label", to_string(f.labels[k])}};
      if (f.has_identity()) p["id"] = f.identity[k];
      if (video.has_descriptors()) {
        const auto row = video.descriptors[t].row(k);
        p["desc"] = std::vector<double>(row.begin(), row.end());
      }
      points.push_back(std::move(p));
    }
    json masks = json::array();
    if (t < video.masks.size()) {
      for (const auto& poly : video.masks[t]) {
        json vs = json::array();
        for (const Point& v : poly) vs.push_back({{"x", v.x}, {"y", v.y}});
        masks.push_back(std::move(vs));
      }
    }
    out << json{{"frame_id", f.frame_id}, {"points", std::move(points)}, {"masks", std::move(masks)}}.dump() << '\n';
  }
}

void write_annotations(const std::filesystem::path& path, const Video& video) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::missing_data, "cannot write " + path.string());
  write_annotations(out, video);
}

std::filesystem::path resolve_data_path(const std::filesystem::path& path) {
  if (path.is_absolute()) return path;
  if (const char* root = std::getenv("VIC_DATA_ROOT"); root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / path;
  }
  return path;
}

std::vector<Video> read_dataset(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw Error(ErrorCode::missing_data, "no such data path: " + path.string());
  if (!fs::is_directory(path)) return {read_annotations(path)};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::missing_data, "no .jsonl files in " + path.string());
  std::vector<Video> videos;
  for (const fs::path& f : files) videos.push_back(read_annotations(f));
  return videos;
}

json to_json(const ModelShape& s) {
  return {{"raw_dim", s.raw_dim},         {"d", s.d},
          {"patch_h", s.patch.h},         {"patch_w", s.patch.w},
          {"heads", s.heads},             {"head_layers", s.head_layers},
          {"head_hidden", s.head_hidden}, {"phi_hidden", s.phi_hidden},
          {"head_input", to_string(s.head_input)}, {"phi_linear", s.phi_linear}};
}

ModelShape model_shape_from_json(const json& j) {
  try {
    ModelShape s;
    s.raw_dim = j.at("raw_dim").get<std::size_t>();
    s.d = j.at("d").get<std::size_t>();
    s.patch = {j.at("patch_h").get<std::size_t>(), j.at("patch_w").get<std::size_t>()};
    s.heads = j.at("heads").get<std::size_t>();
    s.head_layers = j.at("head_layers").get<std::size_t>();
    s.head_hidden = j.at("head_hidden").get<std::size_t>();
    s.phi_hidden = j.at("phi_hidden").get<std::size_t>();
    s.head_input = parse_head_input(j.at("head_input").get<std::string>());
    s.phi_linear = j.value("phi_linear", false);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("model header: ") + e.what());
  }
}

namespace {

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error(ErrorCode::parse_error, "truncated model file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelParams& params, const json& metadata) {
  json tensors = json::array();
  params.for_each([&](const std::string& name, const Tensor& t) { tensors.push_back({{"name", name}, {"shape", t.shape()}}); });
  const std::string header =
      json{{"shape", to_json(params.shape)}, {"tensors", tensors}, {"metadata", metadata}}.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::missing_data, "cannot write " + path.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  put_le<std::uint32_t>(out, kModelVersion);
  put_le<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  params.for_each([&](const std::string&, const Tensor& t) {
    for (double v : t.values()) put_le<double>(out, v);
  });
  if (!out) throw Error(ErrorCode::missing_data, "short write to " + path.string());
}

ModelParams load_model(const std::filesystem::path& path, json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_model, "cannot open model " + path.string());
  char magic[sizeof(kModelMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::parse_error, "not a model file: " + path.string());
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kModelVersion) throw Error(ErrorCode::parse_error, "unsupported model version " + std::to_string(version));
  const auto length = get_le<std::uint64_t>(in);
  if (length > (1ull << 30)) throw Error(ErrorCode::parse_error, "model header too large");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw Error(ErrorCode::parse_error, "truncated model header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("model header: ") + e.what());
  }
  ModelParams params = ModelParams::init(model_shape_from_json(header.at("shape")), 0);
  const json& tensors = header.at("tensors");
  std::size_t index = 0;
  params.for_each([&](const std::string& name, Tensor& t) {
    if (index >= tensors.size() || tensors[index].at("name").get<std::string>() != name ||
        tensors[index].at("shape").get<std::vector<std::size_t>>() != t.shape()) {
      throw Error(ErrorCode::shape_mismatch, "model tensor layout differs at " + name);
    }
    ++index;
    for (double& v : t.values()) v = get_le<double>(in);
  });
  if (index != tensors.size()) throw Error(ErrorCode::shape_mismatch, "model file lists extra tensors");
  if (!params.all_finite()) throw Error(ErrorCode::non_finite, "model contains non-finite values");
  if (metadata != nullptr) *metadata = header.value("metadata", json::object());
  return params;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void write_prior_csv(std::ostream& out, const std::string& video, std::size_t pair, const PriorField& prior,
                     bool header) {
  if (header) out << "video,pair,curr,prev,dx,dy,gamma\n";
  const std::size_t n = prior.prior_cost.rows(), m = prior.prior_cost.cols();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i)
      out << video << ',' << pair << ',' << j << ',' << i << ',' << fmt(prior.displacement.at(j, i, 0)) << ','
          << fmt(prior.displacement.at(j, i, 1)) << ',' << fmt(prior.prior_cost(j, i)) << '\n';
}

void write_attention_csv(std::ostream& out, const std::string& video, std::size_t pair, const Tensor& attention,
                         const Tensor& modulated, const Tensor& gamma, bool header) {
  if (header) out << "video,pair,row_idx,col_idx,attn,modulated_attn,gamma\n";
  for (std::size_t r = 0; r < attention.rows(); ++r)
    for (std::size_t c = 0; c < attention.cols(); ++c)
      out << video << ',' << pair << ',' << r << ',' << c << ',' << fmt(attention(r, c)) << ','
          << fmt(modulated(r, c)) << ',' << fmt(gamma(r, c)) << '\n';
}

void write_flows_csv(std::ostream& out, const std::string& video, const SequenceRun& run, bool header) {
  if (header) out << "video,pair,prev_frame,curr_frame,inflow,outflow\n";
  for (std::size_t k = 0; k < run.pairs.size(); ++k)
    out << video << ',' << k << ',' << run.frame_pairs[k].first << ',' << run.frame_pairs[k].second << ','
        << run.pairs[k].inflow << ',' << run.pairs[k].outflow << '\n';
}

void write_totals_csv(std::ostream& out, const std::string& video, const SequenceRun& run, std::size_t frames,
                      bool header) {
  if (header) out << "video,frames,first_count,total\n";
  out << video << ',' << frames << ',' << run.result.first_frame_count << ',' << run.result.total << '\n';
}

void write_loss_csv(std::ostream& out, const std::vector<double>& losses) {
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) out << e + 1 << ',' << fmt(losses[e]) << '\n';
}

std::map<std::string, std::string> read_tags(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_data, "cannot open tag file " + path.string());
  std::map<std::string, std::string> tags;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto comma = text.find(',');
    if (comma == std::string::npos) parse_fail(line, "expected name,tag");
    const std::string name = text.substr(0, comma), tag = text.substr(comma + 1);
    if (line == 1 && name == "video") continue;
    tags[name] = tag;
  }
  return tags;
}

}  // namespace vic
