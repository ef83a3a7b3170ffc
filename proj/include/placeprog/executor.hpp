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

#pragma once

#include "placeprog/mask.hpp"
#include "placeprog/program.hpp"
#include "placeprog/scene.hpp"

#include <memory>
#include <vector>

namespace placeprog {

struct ExecutorConfig {
  double attach_band = 0.15;
  double reach_low = 0.15;
  double reach_high = 0.60;
  /// Fraction of the query footprint another object may cover before a placement is rejected.
  double collision_threshold = 0.10;
  /// Contact tolerance in meters; negative selects half a cell.
  double contact_tolerance = -1.0;
};

void validate_executor_config(const ExecutorConfig& cfg);

/// Everything a program needs to evaluate: the partial scene, the query, and the
/// program-independent collision-free mask, computed once on construction.
class ExecutionContext {
 public:
  ExecutionContext(std::shared_ptr<const Scene> scene, Query query, ExecutorConfig cfg = {});
  ExecutionContext(const Scene& scene, Query query, ExecutorConfig cfg = {});

  const Scene& scene() const { return *scene_; }
  std::shared_ptr<const Scene> scene_ptr() const { return scene_; }
  const Query& query() const { return query_; }
  const GridSpec& grid() const { return scene_->grid; }
  const ExecutorConfig& config() const { return cfg_; }
  double tolerance() const { return tolerance_; }

  /// Query box with its centroid on the center of `cell`, facing `o`.
  Box query_box(CellIndex cell, Orientation o) const;
  CellRect query_cells(CellIndex cell, Orientation o) const {
    return offsets_[index(o)].translated(cell.x, cell.y);
  }

  /// Placements whose footprint stays in the room and collides with no object beyond the threshold.
  const PlacementMask& free_mask() const { return free_; }
  /// Cells whose center lies inside the room polygon.
  const BitGrid& room_cells() const { return room_cells_; }

 private:
  void build_free_mask();

  std::shared_ptr<const Scene> scene_;
  Query query_;
  ExecutorConfig cfg_;
  double tolerance_ = 0.0;
  std::array<CellRect, 4> offsets_;
  BitGrid room_cells_;
  PlacementMask free_;
};

/// Location predicates shared by the evaluator and the extraction heuristics.
bool attach_holds(const Box& ref, const Box& query, Orientation world_dir, double band, double tolerance);
bool reach_holds(const Box& ref, const Box& query, Orientation world_dir, double low, double high, double tolerance);
/// True when the corridor ahead of `query` (its lateral extent, extruded along `facing`) meets `ref`.
bool faces(const Box& ref, const Box& query, Orientation facing, double tolerance);

PlacementMask eval_constraint(const Constraint& c, const ExecutionContext& ctx);
/// Bottom-up evaluation without the collision filter.
PlacementMask execute_raw(const PlacementProgram& p, const ExecutionContext& ctx);
PlacementMask execute_program(const PlacementProgram& p, const ExecutionContext& ctx);
PlacementMask collision_filter(const PlacementMask& m, const ExecutionContext& ctx);

}  // namespace placeprog
