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

#include "placeprog/executor.hpp"
#include "placeprog/program.hpp"
#include "placeprog/scene.hpp"

#include <string_view>

namespace placeprog {

struct ExtractionConfig {
  double attach_dist = 0.15;
  double reach_low = 0.15;
  double reach_high = 0.60;
  /// Scenes whose furniture overlaps more than this fraction of the smaller footprint are rejected.
  double max_scene_overlap = 0.20;
};

/// The query object's observed placement snapped to the grid.
struct ObservedPlacement {
  Query query;
  Placement placement;
};

ObservedPlacement observe(const Scene& scene, std::string_view object_id);

/// Context for placing `object_id`: walls plus the furniture placed before it, in file order.
Scene placement_context(const Scene& scene, std::string_view object_id);

/// Most restrictive And-program over every constraint the observed placement satisfies,
/// repaired if it loses the placement and pruned of extraneous constraints.
/// Throws Error(Unconstrained) when no constraint applies.
PlacementProgram extract_initial_program(const Scene& scene, std::string_view object_id,
                                         const ExtractionConfig& cfg = {}, const ExecutorConfig& exec = {});

/// The raw And-program before repair and pruning.
PlacementProgram extract_constraints(const ExecutionContext& ctx, const ObjectInstance& query_object,
                                     const Placement& placement, const ExtractionConfig& cfg = {});

/// First subtree (by decreasing leaf count) whose mask contains `placement`.
/// Throws Error(Execution) when no subtree recovers it.
PlacementProgram repair_null_program(const PlacementProgram& p, const ExecutionContext& ctx, const Placement& placement);

/// Greedily deletes leaves whose removal leaves the executed mask unchanged, to a fixpoint.
PlacementProgram remove_extraneous_constraints(const PlacementProgram& p, const ExecutionContext& ctx);

}  // namespace placeprog
