// Copyright 2026 The placeprog Authors
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

// Brute-force reference semantics for programs, written from the constraint definitions
// without touching the executor's geometry helpers. Every placement is evaluated on its
// own, so this is O(W * H * 4 * nodes) and only meant for small grids.
#pragma once

#include "placeprog/executor.hpp"
#include "placeprog/mask.hpp"
#include "placeprog/program.hpp"
#include "placeprog/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace placeprog::oracle {

struct Rect {
  double x0, y0, x1, y1;
};

// Direction indices follow N, E, S, W.
inline constexpr int kDx[4] = {0, 1, 0, -1};
inline constexpr int kDy[4] = {1, 0, -1, 0};

inline Rect centered(double cx, double cy, double w, double d, int facing) {
  const bool ns = facing % 2 == 0;
  const double ex = ns ? w : d;
  const double ey = ns ? d : w;
  return {cx - ex / 2, cy - ey / 2, cx + ex / 2, cy + ey / 2};
}

struct Body {
  Rect box;
  int facing = 0;
  bool holds_humans = false;
  bool wall = false;
};

/// Walls rebuilt from the polygon: one slab per edge, outside the room, facing inward.
inline std::vector<Body> walls_of(const std::vector<Vec2>& room, double thickness) {
  double twice_area = 0;
  for (std::size_t i = 0; i < room.size(); ++i) {
    const Vec2& a = room[i];
    const Vec2& b = room[(i + 1) % room.size()];
    twice_area += a.x() * b.y() - b.x() * a.y();
  }
  std::vector<Body> out;
  for (std::size_t i = 0; i < room.size(); ++i) {
    const Vec2& a = room[i];
    const Vec2& b = room[(i + 1) % room.size()];
    double nx = -(b.y() - a.y());
    double ny = b.x() - a.x();
    if (twice_area < 0) nx = -nx, ny = -ny;
    int facing = 0;
    if (std::abs(nx) > std::abs(ny)) facing = nx > 0 ? 1 : 3;
    else facing = ny > 0 ? 0 : 2;
    Rect r{std::min(a.x(), b.x()), std::min(a.y(), b.y()), std::max(a.x(), b.x()), std::max(a.y(), b.y())};
    switch (facing) {
      case 0: r.y0 -= thickness; break;  // room is above the edge, slab below
      case 2: r.y1 += thickness; break;
      case 1: r.x0 -= thickness; break;
      case 3: r.x1 += thickness; break;
    }
    out.push_back({r, facing, false, true});
  }
  return out;
}

inline bool inside_polygon(const std::vector<Vec2>& poly, double px, double py) {
  const double e = 1e-9;
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if (px >= std::min(a.x(), b.x()) - e && px <= std::max(a.x(), b.x()) + e && py >= std::min(a.y(), b.y()) - e &&
        py <= std::max(a.y(), b.y()) + e) {
      return true;  // on an axis-aligned edge
    }
    if ((a.y() > py) != (b.y() > py) && px < (b.x() - a.x()) * (py - a.y()) / (b.y() - a.y()) + a.x()) in = !in;
  }
  return in;
}

class Evaluator {
 public:
  Evaluator(const Scene& scene, const Query& query, const ExecutorConfig& cfg, double wall_thickness = 0.10)
      : scene_(scene), query_(query), cfg_(cfg) {
    tol_ = cfg.contact_tolerance >= 0 ? cfg.contact_tolerance : scene.grid.cell / 2;
    const auto walls = walls_of(scene.room, wall_thickness);
    for (std::size_t k = 0; k < walls.size(); ++k) bodies_.emplace_back("wall_" + std::to_string(k), walls[k]);
    for (const auto& o : scene.furniture()) {
      bodies_.emplace_back(o.id, Body{centered(o.position.x(), o.position.y(), o.size.x(), o.size.y(), index(o.orientation)),
                                      index(o.orientation), o.holds_humans, false});
    }
  }

  double cx(int x) const { return scene_.origin.x() + (x + 0.5) * scene_.grid.cell; }
  double cy(int y) const { return scene_.origin.y() + (y + 0.5) * scene_.grid.cell; }

  Rect query_box(int x, int y, int o) const { return centered(cx(x), cy(y), query_.size.x(), query_.size.y(), o); }

  bool leaf(const Constraint& c, int x, int y, int o) const {
    const Body& ref = body(c.reference);
    const Rect q = query_box(x, y, o);
    const Rect& r = ref.box;
    const double e = 1e-9;
    auto lateral = [&](int dir) {
      return dir % 2 == 0 ? std::min(r.x1, q.x1) - std::max(r.x0, q.x0) : std::min(r.y1, q.y1) - std::max(r.y0, q.y0);
    };
    switch (c.type) {
      case ConstraintType::Align:
        return o == ref.facing;
      case ConstraintType::Face: {
        // Corridor: the query's width swept forward from its front face.
        Rect corridor = q;
        const double far = 1e6;
        switch (o) {
          case 0: corridor.y0 = q.y1, corridor.y1 = far; break;
          case 2: corridor.y1 = q.y0, corridor.y0 = -far; break;
          case 1: corridor.x0 = q.x1, corridor.x1 = far; break;
          case 3: corridor.x1 = q.x0, corridor.x0 = -far; break;
        }
        const double ox = std::min(r.x1, corridor.x1) - std::max(r.x0, corridor.x0);
        const double oy = std::min(r.y1, corridor.y1) - std::max(r.y0, corridor.y0);
        return ox > tol_ && oy > tol_;
      }
      case ConstraintType::Attach:
      case ConstraintType::ReachableByArm: {
        int local = 0;
        switch (c.direction) {
          case Direction::Up: local = 0; break;
          case Direction::Right: local = 1; break;
          case Direction::Down: local = 2; break;
          case Direction::Left: local = 3; break;
          case Direction::Null: return false;
        }
        const int dir = (ref.facing + local) % 4;
        double gap = 0;
        switch (dir) {
          case 0: gap = q.y0 - r.y1; break;
          case 2: gap = r.y0 - q.y1; break;
          case 1: gap = q.x0 - r.x1; break;
          case 3: gap = r.x0 - q.x1; break;
        }
        const bool band = c.type == ConstraintType::Attach
                              ? gap >= -tol_ - e && gap <= cfg_.attach_band + e
                              : gap >= cfg_.reach_low - e && gap <= cfg_.reach_high + e;
        return band && lateral(dir) > tol_;
      }
    }
    return false;
  }

  bool node(const NodePtr& n, int x, int y, int o) const {
    switch (n->kind) {
      case ProgramNode::Kind::Leaf: return leaf(n->constraint, x, y, o);
      case ProgramNode::Kind::And: return node(n->left, x, y, o) && node(n->right, x, y, o);
      case ProgramNode::Kind::Or: return node(n->left, x, y, o) || node(n->right, x, y, o);
    }
    return false;
  }

  /// Cells (possibly off-grid) whose centers fall in the half-open box [min, max).
  std::vector<std::pair<int, int>> cells_in(const Rect& r) const {
    const double c = scene_.grid.cell;
    auto first = [&](double v, double o) { return static_cast<int>(std::floor((v - o) / c)) - 1; };
    std::vector<std::pair<int, int>> out;
    for (int j = first(r.y0, scene_.origin.y()); j <= first(r.y1, scene_.origin.y()) + 2; ++j) {
      for (int i = first(r.x0, scene_.origin.x()); i <= first(r.x1, scene_.origin.x()) + 2; ++i) {
        const double px = cx(i), py = cy(j);
        if ((px - r.x0) / c >= -1e-9 && (px - r.x1) / c < -1e-9 && (py - r.y0) / c >= -1e-9 && (py - r.y1) / c < -1e-9) {
          out.emplace_back(i, j);
        }
      }
    }
    return out;
  }

  bool free(int x, int y, int o) const {
    const auto cells = cells_in(query_box(x, y, o));
    const GridSpec& g = scene_.grid;
    for (auto [i, j] : cells) {
      if (i < 0 || j < 0 || i >= g.w || j >= g.h) return false;
      if (!inside_polygon(scene_.room, cx(i), cy(j))) return false;
    }
    const double limit = cfg_.collision_threshold * static_cast<double>(cells.size());
    for (const auto& [id, b] : bodies_) {
      if (b.wall) continue;
      long shared = 0;
      for (auto [i, j] : cells_in(b.box)) {
        if (i < 0 || j < 0 || i >= g.w || j >= g.h) continue;
        shared += std::count(cells.begin(), cells.end(), std::make_pair(i, j));
      }
      if (static_cast<double>(shared) > limit) return false;
    }
    return true;
  }

  PlacementMask run(const PlacementProgram& p, bool filter = true) const {
    PlacementMask m(scene_.grid);
    for (int o = 0; o < 4; ++o) {
      for (int y = 0; y < scene_.grid.h; ++y) {
        for (int x = 0; x < scene_.grid.w; ++x) {
          if (node(p.root(), x, y, o) && (!filter || free(x, y, o))) m.set({{x, y}, orientation_from_index(o)});
        }
      }
    }
    return m;
  }

 private:
  const Body& body(const std::string& id) const {
    for (const auto& [k, b] : bodies_) {
      if (k == id) return b;
    }
    throw std::runtime_error("oracle: unknown reference " + id);
  }

  const Scene& scene_;
  Query query_;
  ExecutorConfig cfg_;
  double tol_ = 0;
  std::vector<std::pair<std::string, Body>> bodies_;
};

/// Random rectangular or L-shaped room with a few furniture objects, on a grid of at most 32 x 32.
inline Scene random_scene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneOptions opts;
  const int w = 16 + static_cast<int>(u(rng) * 17);
  const int h = 16 + static_cast<int>(u(rng) * 17);
  const double cell = u(rng) < 0.5 ? 0.075 : 0.1;
  opts.grid = GridSpec{std::min(w, 32), std::min(h, 32), cell};
  const double rw = opts.grid.w * cell * (0.7 + 0.29 * u(rng));
  const double rh = opts.grid.h * cell * (0.7 + 0.29 * u(rng));
  std::vector<Vec2> room;
  const bool l_shape = u(rng) < 0.3;
  const double nx = rw * (0.4 + 0.3 * u(rng));
  const double ny = rh * (0.4 + 0.3 * u(rng));
  if (l_shape) room = {{0, 0}, {rw, 0}, {rw, ny}, {nx, ny}, {nx, rh}, {0, rh}};
  else room = {{0, 0}, {rw, 0}, {rw, rh}, {0, rh}};

  nlohmann::json j = {{"scene_type", "bedroom"}, {"room", nlohmann::json::array()}, {"objects", nlohmann::json::array()}};
  for (const auto& p : room) j["room"].push_back({p.x(), p.y()});
  const int n = static_cast<int>(u(rng) * 5);
  static const char* kCats[] = {"bed", "desk", "chair", "nightstand"};
  for (int k = 0; k < n; ++k) {
    double px = 0, py = 0;
    do {
      px = u(rng) * rw;
      py = u(rng) * rh;
    } while (!inside_polygon(room, px, py));
    const char* cat = kCats[k % 4];
    j["objects"].push_back({{"id", std::string(cat) + "_" + std::to_string(k)},
                            {"category", cat},
                            {"size", {0.2 + 0.8 * u(rng), 0.2 + 0.8 * u(rng)}},
                            {"position", {px, py}},
                            {"orientation", std::string(1, "NESW"[static_cast<int>(u(rng) * 4) % 4])},
                            {"holds_humans", u(rng) < 0.5}});
  }
  return scene_from_json(j, opts);
}

inline Constraint random_leaf(const Scene& scene, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, scene.objects.size() - 1);
  std::uniform_int_distribution<int> type(0, 3), dir(0, 3);
  const ObjectInstance& ref = scene.objects[pick(rng)];
  Constraint c;
  c.reference = ref.id;
  c.type = static_cast<ConstraintType>(type(rng));
  if (c.type == ConstraintType::ReachableByArm && !ref.holds_humans) c.type = ConstraintType::Attach;
  if (c.type == ConstraintType::Attach || c.type == ConstraintType::ReachableByArm) {
    c.direction = static_cast<Direction>(dir(rng));
  }
  return c;
}

inline NodePtr random_tree(const Scene& scene, std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, 2);
  const int k = depth <= 1 ? 0 : kind(rng);
  if (k == 0) return ProgramNode::leaf(random_leaf(scene, rng));
  auto l = random_tree(scene, rng, depth - 1);
  auto r = random_tree(scene, rng, depth - 1);
  return k == 1 ? ProgramNode::conj(l, r) : ProgramNode::disj(l, r);
}

inline Query random_query(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.25, 1.1);
  return Query{"chair", Vec2(u(rng), u(rng)), false};
}

}  // namespace placeprog::oracle
