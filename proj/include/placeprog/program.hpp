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

#include "placeprog/scene.hpp"

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace placeprog {

enum class ConstraintType { Attach, ReachableByArm, Align, Face };

/// Directions in the reference object's local frame: Up is its facing direction.
enum class Direction { Up, Down, Left, Right, Null };

const char* to_string(ConstraintType t);
const char* to_string(Direction d);
std::optional<ConstraintType> constraint_type_from_string(std::string_view s);
std::optional<Direction> direction_from_string(std::string_view s);

/// World direction of local `d` for a reference facing `facing`. `d` must not be Null.
Orientation to_world(Direction d, Orientation facing);

struct Constraint {
  ConstraintType type = ConstraintType::Attach;
  std::string reference;
  Direction direction = Direction::Null;

  bool operator==(const Constraint&) const = default;
};

/// Location constraints take a direction; orientation constraints take Null.
bool is_well_formed(const Constraint& c);

struct ProgramNode;
using NodePtr = std::shared_ptr<const ProgramNode>;

struct ProgramNode {
  enum class Kind { Leaf, And, Or };

  Kind kind = Kind::Leaf;
  Constraint constraint;  // Leaf only
  NodePtr left;
  NodePtr right;

  static NodePtr leaf(Constraint c);
  static NodePtr conj(NodePtr l, NodePtr r);
  static NodePtr disj(NodePtr l, NodePtr r);
};

/// The query the program places.
struct Query {
  std::string category;
  Vec2 size = Vec2::Zero();
  bool holds_humans = false;
};

/// Immutable CSG tree of constraints. Copies share structure.
class PlacementProgram {
 public:
  PlacementProgram() = default;
  explicit PlacementProgram(NodePtr root) : root_(std::move(root)) {}

  const NodePtr& root() const { return root_; }
  bool valid() const { return root_ != nullptr; }

  int leaf_count() const;
  int node_count() const;
  int depth() const;
  /// Leaves in left-to-right order.
  std::vector<Constraint> leaves() const;
  std::vector<std::string> references() const;

  bool operator==(const PlacementProgram& o) const;

 private:
  NodePtr root_;
};

PlacementProgram parse_program(std::string_view text);
std::string serialize_program(const PlacementProgram& p);

/// Structural checks: leaf well-formedness and depth. Throws Error(Validation).
void validate_program(const PlacementProgram& p, int max_depth = 12);
/// Reference resolution against a scene, including the holds-humans requirement.
void validate_against_scene(const PlacementProgram& p, const Scene& scene);

/// Removes leaf `leaf_index` (left-to-right) and splices its sibling into the parent's place.
PlacementProgram delete_constraint(const PlacementProgram& p, int leaf_index);
PlacementProgram delete_random_constraint(const PlacementProgram& p, std::mt19937_64& rng);
/// Deletes between one and all-but-one random leaves.
PlacementProgram relax_randomly(const PlacementProgram& p, std::mt19937_64& rng);

/// Every rooted subtree in pre-order, starting with `p` itself.
std::vector<PlacementProgram> enumerate_subtrees(const PlacementProgram& p);

/// Left-deep chain of Or nodes over `programs`, in order.
PlacementProgram or_join(const std::vector<PlacementProgram>& programs);
/// Left-deep chain of And nodes over `programs`, in order.
PlacementProgram and_join(const std::vector<PlacementProgram>& programs);

/// Replaces every reference id via `mapping`; ids without a mapping are kept.
PlacementProgram rename_references(const PlacementProgram& p,
                                   const std::vector<std::pair<std::string, std::string>>& mapping);

}  // namespace placeprog
