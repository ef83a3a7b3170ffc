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

#include "placeprog/executor.hpp"

#include "placeprog/error.hpp"

#include <cmath>

namespace placeprog {
namespace {

constexpr double kEps = 1e-9;

double ahead_distance(const Box& ref, const Box& query, Orientation facing) {
  switch (facing) {
    case Orientation::N: return ref.max().y() - query.max().y();
    case Orientation::S: return query.min().y() - ref.min().y();
    case Orientation::E: return ref.max().x() - query.max().x();
    case Orientation::W: return query.min().x() - ref.min().x();
  }
  return 0.0;
}

const ObjectInstance& resolve(const Constraint& c, const ExecutionContext& ctx) {
  const ObjectInstance* ref = ctx.scene().find(c.reference);
  if (!ref) throw Error(ErrorKind::Execution, "unresolved reference '" + c.reference + "'");
  if (c.type == ConstraintType::ReachableByArm && !ref->holds_humans) {
    throw Error(ErrorKind::Execution, "reachable_by_arm reference '" + c.reference + "' does not hold humans");
  }
  return *ref;
}

// Fills slice `o` with cells where `along(query_box)` holds on the axis of `dir` and
// `across(query_box)` holds on the perpendicular axis. Both predicates only read the
// box extent on their own axis, so rows and columns can be evaluated independently.
template <typename Along, typename Across>
void fill_separable(BitGrid& slice, const ExecutionContext& ctx, Orientation o, Orientation dir, Along along,
                    Across across) {
  const GridSpec& g = ctx.grid();
  std::vector<char> cols(g.w, 0);
  std::vector<char> rows(g.h, 0);
  if (is_north_south(dir)) {
    for (int y = 0; y < g.h; ++y) rows[y] = along(ctx.query_box({0, y}, o));
    for (int x = 0; x < g.w; ++x) cols[x] = across(ctx.query_box({x, 0}, o));
  } else {
    for (int x = 0; x < g.w; ++x) cols[x] = along(ctx.query_box({x, 0}, o));
    for (int y = 0; y < g.h; ++y) rows[y] = across(ctx.query_box({0, y}, o));
  }
  slice.fill_outer(cols, rows);
}

}  // namespace

void validate_executor_config(const ExecutorConfig& cfg) {
  if (!(cfg.attach_band > 0.0)) throw Error(ErrorKind::Config, "attach_band must be positive");
  if (!(cfg.reach_high > cfg.reach_low)) throw Error(ErrorKind::Config, "reach band must be ordered");
  if (std::abs(cfg.reach_low - cfg.attach_band) > 1e-12) {
    throw Error(ErrorKind::Config, "reach band must start where the attach band ends");
  }
  if (cfg.collision_threshold < 0.0 || cfg.collision_threshold > 1.0) {
    throw Error(ErrorKind::Config, "collision_threshold must lie in [0, 1]");
  }
}

bool attach_holds(const Box& ref, const Box& query, Orientation world_dir, double band, double tolerance) {
  const double gap = directional_gap(ref, query, world_dir);
  return gap >= -tolerance - kEps && gap <= band + kEps && lateral_overlap(ref, query, world_dir) > tolerance;
}

bool reach_holds(const Box& ref, const Box& query, Orientation world_dir, double low, double high, double tolerance) {
  const double gap = directional_gap(ref, query, world_dir);
  return gap >= low - kEps && gap <= high + kEps && lateral_overlap(ref, query, world_dir) > tolerance;
}

bool faces(const Box& ref, const Box& query, Orientation facing, double tolerance) {
  return lateral_overlap(ref, query, facing) > tolerance && ahead_distance(ref, query, facing) > tolerance;
}

ExecutionContext::ExecutionContext(std::shared_ptr<const Scene> scene, Query query, ExecutorConfig cfg)
    : scene_(std::move(scene)), query_(std::move(query)), cfg_(cfg) {
  if (!scene_) throw Error(ErrorKind::Precondition, "execution context needs a scene");
  if (!(query_.size.x() > 0.0 && query_.size.y() > 0.0)) throw Error(ErrorKind::Precondition, "query size must be positive");
  validate_executor_config(cfg_);
  tolerance_ = cfg_.contact_tolerance >= 0.0 ? cfg_.contact_tolerance : 0.5 * scene_->grid.cell;
  for (auto o : kOrientations) offsets_[index(o)] = footprint_offsets(query_.size, o, grid().cell);
  build_free_mask();
}

ExecutionContext::ExecutionContext(const Scene& scene, Query query, ExecutorConfig cfg)
    : ExecutionContext(std::make_shared<const Scene>(scene), std::move(query), cfg) {}

Box ExecutionContext::query_box(CellIndex cell, Orientation o) const {
  return oriented_box(scene_->cell_center(cell), query_.size, o);
}

void ExecutionContext::build_free_mask() {
  const GridSpec& g = grid();
  room_cells_ = BitGrid(g.w, g.h);
  for (int y = 0; y < g.h; ++y) {
    for (int x = 0; x < g.w; ++x) {
      if (scene_->contains_point(scene_->cell_center(x, y))) room_cells_.set(x, y);
    }
  }
  // Prefix sums of out-of-room cells.
  std::vector<long> outside(static_cast<std::size_t>(g.w + 1) * (g.h + 1), 0);
  auto at = [&](int x, int y) -> long& { return outside[static_cast<std::size_t>(y) * (g.w + 1) + x]; };
  for (int y = 0; y < g.h; ++y) {
    for (int x = 0; x < g.w; ++x) {
      at(x + 1, y + 1) = at(x, y + 1) + at(x + 1, y) - at(x, y) + (room_cells_.test(x, y) ? 0 : 1);
    }
  }
  std::vector<CellRect> obstacles;
  for (const auto& obj : scene_->furniture()) {
    const CellRect r = rasterize_box(footprint_box(obj), scene_->origin, g).clipped(g);
    if (!r.empty()) obstacles.push_back(r);
  }
  free_ = PlacementMask(g);
  for (auto o : kOrientations) {
    BitGrid& slice = free_.slice(o);
    const CellRect off = offsets_[index(o)];
    const double limit = cfg_.collision_threshold * static_cast<double>(off.area());
    for (int y = 0; y < g.h; ++y) {
      for (int x = 0; x < g.w; ++x) {
        const CellRect r = off.translated(x, y);
        if (!r.inside(g)) continue;
        const long out = at(r.x1, r.y1) - at(r.x0, r.y1) - at(r.x1, r.y0) + at(r.x0, r.y0);
        if (out > 0) continue;
        bool blocked = false;
        for (const auto& ob : obstacles) {
          if (static_cast<double>(r.intersect(ob).area()) > limit) {
            blocked = true;
            break;
          }
        }
        if (!blocked) slice.set(x, y);
      }
    }
  }
}

PlacementMask eval_constraint(const Constraint& c, const ExecutionContext& ctx) {
  if (!is_well_formed(c)) throw Error(ErrorKind::Validation, "malformed constraint");
  const ObjectInstance& ref = resolve(c, ctx);
  const Box ref_box = footprint_box(ref);
  const double tol = ctx.tolerance();
  const ExecutorConfig& cfg = ctx.config();
  PlacementMask m(ctx.grid());
  switch (c.type) {
    case ConstraintType::Align:
      m.slice(ref.orientation).fill(true);
      break;
    case ConstraintType::Attach:
    case ConstraintType::ReachableByArm: {
      const Orientation dir = to_world(c.direction, ref.orientation);
      const bool attach = c.type == ConstraintType::Attach;
      for (auto o : kOrientations) {
        fill_separable(
            m.slice(o), ctx, o, dir,
            [&](const Box& q) {
              const double gap = directional_gap(ref_box, q, dir);
              return attach ? (gap >= -tol - kEps && gap <= cfg.attach_band + kEps)
                            : (gap >= cfg.reach_low - kEps && gap <= cfg.reach_high + kEps);
            },
            [&](const Box& q) { return lateral_overlap(ref_box, q, dir) > tol; });
      }
      break;
    }
    case ConstraintType::Face:
      for (auto o : kOrientations) {
        fill_separable(
            m.slice(o), ctx, o, o, [&](const Box& q) { return ahead_distance(ref_box, q, o) > tol; },
            [&](const Box& q) { return lateral_overlap(ref_box, q, o) > tol; });
      }
      break;
  }
  return m;
}

PlacementMask execute_raw(const PlacementProgram& p, const ExecutionContext& ctx) {
  if (!p.valid()) throw Error(ErrorKind::Validation, "empty program");
  const auto eval = [&](const auto& self, const NodePtr& n) -> PlacementMask {
    switch (n->kind) {
      case ProgramNode::Kind::Leaf: return eval_constraint(n->constraint, ctx);
      case ProgramNode::Kind::And: return mask_and(self(self, n->left), self(self, n->right));
      case ProgramNode::Kind::Or: return mask_or(self(self, n->left), self(self, n->right));
    }
    throw Error(ErrorKind::Validation, "unknown node kind");
  };
  return eval(eval, p.root());
}

PlacementMask execute_program(const PlacementProgram& p, const ExecutionContext& ctx) {
  validate_against_scene(p, ctx.scene());
  return collision_filter(execute_raw(p, ctx), ctx);
}

PlacementMask collision_filter(const PlacementMask& m, const ExecutionContext& ctx) {
  return mask_and(m, ctx.free_mask());
}

}  // namespace placeprog
