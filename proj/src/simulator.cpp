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

#include "vic/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace vic {

void SimConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_config, what); };
  if (!(max_step > 0.0 && max_step < 1.0)) fail("max_step must lie in (0,1)");
  if (group_size_min < 1 || group_size_max < group_size_min) fail("invalid group size range");
  if (groups_per_frame_rate < 0.0 || occlusion_rate < 0.0 || occlusion_rate > 1.0 || descriptor_noise < 0.0 ||
      group_jitter < 0.0 || group_spread < 0.0 || group_share < 0.0 || heading_noise < 0.0 ||
      spawn_clearance < 0.0) {
    fail("rates and scales must be non-negative (occlusion_rate at most 1)");
  }
  if (speed_min < 0.0 || speed_max < speed_min) fail("invalid speed range");
  if (speed_max + group_jitter > max_step) fail("speed_max + group_jitter must not exceed max_step");
  if (descriptor_dim == 0) fail("descriptor_dim must be positive");
  if (frames == 0) fail("frames must be positive");
  if (max_visible == 0) fail("max_visible must be positive");
}

std::size_t SimSequence::distinct_identities() const {
  std::set<std::int64_t> ids;
  for (const FramePoints& f : video.frames)
    for (std::size_t k : f.counted()) ids.insert(f.identity[k]);
  return ids.size();
}

namespace {

struct Agent {
  std::int64_t id;
  std::size_t group;
  Point pos;
  bool inside = true;
  std::vector<double> latent;
};

struct Group {
  double vx = 0.0, vy = 0.0;
  std::vector<double> component;  // unit vector
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& c) : cfg_(c), rng_(c.seed) {}

  SimSequence run() {
    SimSequence seq;
    seq.mask_regions = cfg_.mask_regions;
    seq.video.name = "sim_" + std::to_string(cfg_.seed);
    std::vector<std::vector<std::size_t>> visible_per_frame;
    std::vector<std::vector<bool>> occluded_per_frame;
    std::vector<std::vector<Point>> pos_per_frame;

    for (std::size_t g = 0; g < cfg_.initial_groups; ++g) spawn_interior();
    for (std::size_t t = 0; t < cfg_.frames; ++t) {
      if (t > 0) {
        previous_.clear();
        for (const Agent& a : agents_)
          if (a.inside) previous_.push_back(a.pos);
        step();
        std::poisson_distribution<int> arrivals(cfg_.groups_per_frame_rate);
        const int k = cfg_.groups_per_frame_rate > 0.0 ? arrivals(rng_) : 0;
        for (int a = 0; a < k; ++a) spawn_boundary();
      }
      std::vector<std::size_t> visible;
      for (std::size_t a = 0; a < agents_.size(); ++a)
        if (agents_[a].inside) visible.push_back(a);
      std::shuffle(visible.begin(), visible.end(), rng_);
      std::vector<bool> occluded;
      std::vector<Point> positions;
      std::bernoulli_distribution occlude(cfg_.occlusion_rate);
      for (std::size_t a : visible) {
        occluded.push_back(cfg_.occlusion_rate > 0.0 && occlude(rng_));
        positions.push_back(agents_[a].pos);
      }
      visible_per_frame.push_back(std::move(visible));
      occluded_per_frame.push_back(std::move(occluded));
      pos_per_frame.push_back(std::move(positions));
    }

    // Counted identity sets drive labels and truth flows.
    std::vector<std::set<std::int64_t>> counted(cfg_.frames);
    for (std::size_t t = 0; t < cfg_.frames; ++t)
      for (std::size_t k = 0; k < visible_per_frame[t].size(); ++k)
        if (!masked(pos_per_frame[t][k])) counted[t].insert(agents_[visible_per_frame[t][k]].id);

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t t = 0; t < cfg_.frames; ++t) {
      FramePoints f;
      f.frame_id = static_cast<std::int64_t>(t);
      const auto& visible = visible_per_frame[t];
      Tensor desc(visible.size(), cfg_.descriptor_dim);
      for (std::size_t k = 0; k < visible.size(); ++k) {
        const Agent& agent = agents_[visible[k]];
        const Point p = pos_per_frame[t][k];
        f.points.push_back(p);
        f.identity.push_back(agent.id);
        f.masked.push_back(masked(p));
        const bool in = t > 0 && !counted[t - 1].count(agent.id);
        const bool out = t + 1 < cfg_.frames && !counted[t + 1].count(agent.id);
        f.labels.push_back(in && out ? Label::both : in ? Label::inflow : out ? Label::outflow : Label::pedestrian);

        auto row = desc.row(k);
        if (occluded_per_frame[t][k]) {
          for (double& v : row) v = gauss(rng_);
        } else {
          const Group& g = groups_[agent.group];
          double norm = 0.0;
          for (double v : agent.latent) norm += v * v;
          norm = std::sqrt(norm);
          for (std::size_t c = 0; c < row.size(); ++c)
            row[c] = agent.latent[c] + cfg_.group_share * norm * g.component[c] + cfg_.descriptor_noise * gauss(rng_);
        }
      }
      seq.video.frames.push_back(std::move(f));
      seq.video.descriptors.push_back(std::move(desc));
    }

    for (std::size_t t = 1; t < cfg_.frames; ++t) {
      std::size_t in = 0, out = 0;
      for (std::int64_t id : counted[t]) in += counted[t - 1].count(id) ? 0 : 1;
      for (std::int64_t id : counted[t - 1]) out += counted[t].count(id) ? 0 : 1;
      seq.truth_flows.emplace_back(in, out);
    }
    for (const Agent& a : agents_) seq.group_of.push_back(static_cast<std::int64_t>(a.group));
    return seq;
  }

 private:
  bool masked(const Point& p) const {
    return std::any_of(cfg_.mask_regions.begin(), cfg_.mask_regions.end(), [&](const Rect& r) { return r.contains(p); });
  }

  std::size_t visible_count() const {
    return static_cast<std::size_t>(std::count_if(agents_.begin(), agents_.end(), [](const Agent& a) { return a.inside; }));
  }

  std::vector<double> unit_vector() {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(cfg_.descriptor_dim);
    double norm = 0.0;
    for (double& x : v) {
      x = gauss(rng_);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
  }

  Point disc_sample(double radius) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = radius * std::sqrt(u(rng_));
    const double a = 2.0 * std::numbers::pi * u(rng_);
    return {r * std::cos(a), r * std::sin(a)};
  }

  std::size_t draw_group_size() {
    std::uniform_int_distribution<std::size_t> size(cfg_.group_size_min, cfg_.group_size_max);
    return size(rng_);
  }

  std::vector<Point> member_positions(Point centre, std::size_t size) {
    std::vector<Point> out;
    for (std::size_t k = 0; k < size; ++k) {
      const Point off = disc_sample(cfg_.group_spread);
      out.push_back({std::clamp(centre.x + off.x, 0.0, 1.0), std::clamp(centre.y + off.y, 0.0, 1.0)});
    }
    return out;
  }

  bool clear_of_previous(const std::vector<Point>& members) const {
    if (cfg_.spawn_clearance <= 0.0) return true;
    const double r2 = cfg_.spawn_clearance * cfg_.spawn_clearance;
    for (const Point& m : members)
      for (const Point& p : previous_)
        if ((m.x - p.x) * (m.x - p.x) + (m.y - p.y) * (m.y - p.y) <= r2) return false;
    return true;
  }

  void add_group(const std::vector<Point>& members, double heading) {
    std::uniform_real_distribution<double> speed(cfg_.speed_min, cfg_.speed_max);
    Group g;
    const double s = speed(rng_);
    g.vx = s * std::cos(heading);
    g.vy = s * std::sin(heading);
    g.component = unit_vector();
    groups_.push_back(std::move(g));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const Point& pos : members) {
      Agent a;
      a.id = next_id_++;
      a.group = groups_.size() - 1;
      a.pos = pos;
      a.latent.resize(cfg_.descriptor_dim);
      for (double& v : a.latent) v = gauss(rng_);
      agents_.push_back(std::move(a));
    }
  }

  void spawn_interior() {
    const std::size_t size = draw_group_size();
    if (visible_count() + size > cfg_.max_visible) return;
    std::uniform_real_distribution<double> u(0.15, 0.85);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const Point centre{u(rng_), u(rng_)};
    const double heading = angle(rng_);
    add_group(member_positions(centre, size), heading);
  }

  void spawn_boundary() {
    const std::size_t size = draw_group_size();
    if (visible_count() + size > cfg_.max_visible) return;
    std::uniform_int_distribution<int> side(0, 3);
    std::uniform_real_distribution<double> along(0.1, 0.9);
    std::uniform_real_distribution<double> spread(-std::numbers::pi / 4.0, std::numbers::pi / 4.0);
    const double margin = cfg_.group_spread;
    for (int attempt = 0; attempt < kSpawnAttempts; ++attempt) {
      const double s = along(rng_);
      Point c;
      double inward = 0.0;
      switch (side(rng_)) {
        case 0: c = {margin, s}; inward = 0.0; break;
        case 1: c = {1.0 - margin, s}; inward = std::numbers::pi; break;
        case 2: c = {s, margin}; inward = std::numbers::pi / 2.0; break;
        default: c = {s, 1.0 - margin}; inward = -std::numbers::pi / 2.0; break;
      }
      const double heading = inward + spread(rng_);
      std::vector<Point> members = member_positions(c, size);
      if (!clear_of_previous(members)) continue;
      add_group(members, heading);
      return;
    }
  }

  void step() {
    std::normal_distribution<double> turn(0.0, cfg_.heading_noise);
    for (Group& g : groups_) {
      const double a = cfg_.heading_noise > 0.0 ? turn(rng_) : 0.0;
      const double vx = g.vx * std::cos(a) - g.vy * std::sin(a);
      const double vy = g.vx * std::sin(a) + g.vy * std::cos(a);
      g.vx = vx;
      g.vy = vy;
    }
    for (Agent& a : agents_) {
      if (!a.inside) continue;
      const Group& g = groups_[a.group];
      const Point jitter = disc_sample(cfg_.group_jitter);
      double dx = g.vx + jitter.x, dy = g.vy + jitter.y;
      const double len = std::sqrt(dx * dx + dy * dy);
      if (len > cfg_.max_step) {
        dx *= cfg_.max_step / len;
        dy *= cfg_.max_step / len;
      }
      a.pos.x += dx;
      a.pos.y += dy;
      if (a.pos.x < 0.0 || a.pos.x > 1.0 || a.pos.y < 0.0 || a.pos.y > 1.0) a.inside = false;
    }
  }

  const SimConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<Agent> agents_;
  std::vector<Group> groups_;
  std::vector<Point> previous_;
  std::int64_t next_id_ = 0;
  static constexpr int kSpawnAttempts = 16;
};

}  // namespace

SimSequence generate(const SimConfig& config) {
  config.validate();
  SimSequence seq = Simulation(config).run();
  if (!seq.mask_regions.empty()) seq.video.masks = mask_polygons(seq);
  return seq;
}

Tensor oracle_probabilities(const SimSequence& seq, std::size_t pair_index) {
  if (pair_index + 1 >= seq.video.frames.size()) {
    throw Error(ErrorCode::index_out_of_range, "pair index " + std::to_string(pair_index) + " out of range");
  }
  return oracle_probabilities(counted_view(seq.video, pair_index), counted_view(seq.video, pair_index + 1));
}

std::vector<std::vector<std::vector<Point>>> mask_polygons(const SimSequence& seq) {
  std::vector<std::vector<Point>> polys;
  for (const Rect& r : seq.mask_regions) polys.push_back({{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}});
  return std::vector<std::vector<std::vector<Point>>>(seq.video.frames.size(), polys);
}

}  // namespace vic
