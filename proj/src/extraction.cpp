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

#include "placeprog/extraction.hpp"

#include "placeprog/error.hpp"

#include <algorithm>

namespace placeprog {
namespace {

constexpr std::array<Direction, 4> kSides = {Direction::Up, Direction::Down, Direction::Left, Direction::Right};

void push_unique(std::vector<Constraint>& leaves, Constraint c) {
  if (std::find(leaves.begin(), leaves.end(), c) == leaves.end()) leaves.push_back(std::move(c));
}

}  // namespace

ObservedPlacement observe(const Scene& scene, std::string_view object_id) {
  const ObjectInstance* obj = scene.find(object_id);
  if (!obj || obj->is_wall) throw Error(ErrorKind::NotFound, "no furniture object '" + std::string(object_id) + "'");
  const auto cell = scene.cell_of(obj->position);
  if (!cell) throw Error(ErrorKind::Geometry, "object '" + obj->id + "' lies outside the grid");
  return {{obj->category, obj->size, obj->holds_humans}, {*cell, obj->orientation}};
}

Scene placement_context(const Scene& scene, std::string_view object_id) {
  const auto furn = scene.furniture();
  for (std::size_t i = 0; i < furn.size(); ++i) {
    if (furn[i].id == object_id) return scene.prefix(i);
  }
  throw Error(ErrorKind::NotFound, "no furniture object '" + std::string(object_id) + "'");
}

PlacementProgram extract_constraints(const ExecutionContext& ctx, const ObjectInstance& query_object,
                                     const Placement& placement, const ExtractionConfig& cfg) {
  const Box q = ctx.query_box(placement.cell, placement.orientation);
  const Orientation facing = placement.orientation;
  const double tol = ctx.tolerance();
  std::vector<Constraint> leaves;

  auto relate_orientation = [&](const ObjectInstance& ref, const Box& ref_box) {
    if (ref.orientation == facing) {
      push_unique(leaves, {ConstraintType::Align, ref.id, Direction::Null});
    } else if (ref.orientation == opposite(facing) && faces(ref_box, q, facing, tol) &&
               faces(q, ref_box, ref.orientation, tol)) {
      push_unique(leaves, {ConstraintType::Face, ref.id, Direction::Null});
    }
  };

  for (const auto& ref : ctx.scene().objects) {
    if (ref.id == query_object.id) continue;
    const Box ref_box = footprint_box(ref);
    bool attached = false;
    for (auto side : kSides) {
      if (attach_holds(ref_box, q, to_world(side, ref.orientation), cfg.attach_dist, tol)) {
        push_unique(leaves, {ConstraintType::Attach, ref.id, side});
        attached = true;
      }
    }
    if (attached) relate_orientation(ref, ref_box);
    if (!query_object.holds_humans || !ref.holds_humans) continue;
    bool reached = false;
    for (auto side : kSides) {
      if (reach_holds(ref_box, q, to_world(side, ref.orientation), cfg.reach_low, cfg.reach_high, tol)) {
        push_unique(leaves, {ConstraintType::ReachableByArm, ref.id, side});
        reached = true;
      }
    }
    if (reached && !attached) relate_orientation(ref, ref_box);
  }
  if (leaves.empty()) {
    throw Error(ErrorKind::Unconstrained, "unconstrained object '" + query_object.id + "': no constraint applies");
  }
  std::vector<PlacementProgram> parts;
  for (auto& c : leaves) parts.emplace_back(ProgramNode::leaf(std::move(c)));
  return and_join(parts);
}

PlacementProgram repair_null_program(const PlacementProgram& p, const ExecutionContext& ctx, const Placement& placement) {
  auto subtrees = enumerate_subtrees(p);
  std::stable_sort(subtrees.begin(), subtrees.end(),
                   [](const PlacementProgram& a, const PlacementProgram& b) { return a.leaf_count() > b.leaf_count(); });
  for (const auto& s : subtrees) {
    const PlacementMask m = execute_program(s, ctx);
    if (!m.empty() && m.test(placement)) return s;
  }
  throw Error(ErrorKind::Execution, "no subtree recovers the observed placement");
}

PlacementProgram remove_extraneous_constraints(const PlacementProgram& p, const ExecutionContext& ctx) {
  const PlacementMask target = execute_program(p, ctx);
  PlacementProgram current = p;
  bool changed = true;
  while (changed) {
    changed = false;
    const int n = current.leaf_count();
    for (int i = 0; i < n && n > 1; ++i) {
      PlacementProgram candidate = delete_constraint(current, i);
      if (execute_program(candidate, ctx) == target) {
        current = std::move(candidate);
        changed = true;
        break;
      }
    }
  }
  return current;
}

PlacementProgram extract_initial_program(const Scene& scene, std::string_view object_id, const ExtractionConfig& cfg,
                                         const ExecutorConfig& exec) {
  if (max_pairwise_overlap(scene) > cfg.max_scene_overlap) {
    throw Error(ErrorKind::Precondition, "scene has major inter-object collisions");
  }
  const ObservedPlacement obs = observe(scene, object_id);
  const ObjectInstance& obj = *scene.find(object_id);
  const ExecutionContext ctx(placement_context(scene, object_id), obs.query, exec);
  PlacementProgram p = extract_constraints(ctx, obj, obs.placement, cfg);
  const PlacementMask m = execute_program(p, ctx);
  if (!m.test(obs.placement)) p = repair_null_program(p, ctx, obs.placement);
  return remove_extraneous_constraints(p, ctx);
}

}  // namespace placeprog
