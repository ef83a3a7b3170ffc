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

#include "placeprog/geometry.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace placeprog {

/// Discretization of the room canvas. The mask has `w * h` cells per orientation.
struct GridSpec {
  static constexpr int kOrientations = 4;

  int w = 128;
  int h = 128;
  double cell = 6.2 / 128.0;

  int cells() const { return w * h; }
  bool operator==(const GridSpec&) const = default;
};

struct CellIndex {
  int x = 0;
  int y = 0;
  bool operator==(const CellIndex&) const = default;
  auto operator<=>(const CellIndex&) const = default;
};

/// Half-open rectangle of cells [x0, x1) x [y0, y1).
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool empty() const { return x1 <= x0 || y1 <= y0; }
  long area() const { return empty() ? 0 : static_cast<long>(x1 - x0) * (y1 - y0); }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  CellRect translated(int dx, int dy) const { return {x0 + dx, y0 + dy, x1 + dx, y1 + dy}; }
  CellRect clipped(const GridSpec& g) const;
  CellRect intersect(const CellRect& o) const;
  bool inside(const GridSpec& g) const { return x0 >= 0 && y0 >= 0 && x1 <= g.w && y1 <= g.h; }
  bool operator==(const CellRect&) const = default;
};

struct ObjectInstance {
  std::string id;
  std::string category;
  Vec2 size = Vec2::Zero();      // (width, depth) in the canonical frame
  Vec2 position = Vec2::Zero();  // centroid in room coordinates
  Orientation orientation = Orientation::N;
  bool holds_humans = false;
  bool is_wall = false;
};

/// World-space box occupied by `obj`. Walls occupy the slab behind their edge,
/// so the wall's front face coincides with the room boundary.
Box footprint_box(const ObjectInstance& obj);

struct SceneOptions {
  GridSpec grid;
  double max_side = 6.2;
  double wall_thickness = 0.10;
  /// Allowed furniture categories; empty disables the check.
  std::vector<std::string> vocabulary;
};

class Scene {
 public:
  std::string scene_type;
  std::vector<Vec2> room;
  /// Walls first (ids `wall_<k>`), then furniture in placement order.
  std::vector<ObjectInstance> objects;
  GridSpec grid;
  Vec2 origin = Vec2::Zero();

  const ObjectInstance* find(std::string_view id) const;
  std::size_t wall_count() const;
  std::span<const ObjectInstance> walls() const;
  std::span<const ObjectInstance> furniture() const;

  /// Walls plus the first `k` furniture objects.
  Scene prefix(std::size_t k) const;
  Scene without(std::string_view id) const;
  Scene with_object(ObjectInstance obj) const;

  Box bounds() const;
  Vec2 cell_center(int x, int y) const;
  Vec2 cell_center(CellIndex c) const { return cell_center(c.x, c.y); }
  std::optional<CellIndex> cell_of(const Vec2& p) const;
  bool contains_point(const Vec2& p) const;
};

bool point_in_polygon(std::span<const Vec2> polygon, const Vec2& p);

/// One wall per polygon edge, oriented along the inward normal.
std::vector<ObjectInstance> derive_walls(std::span<const Vec2> polygon, double thickness = 0.10);

/// Validates the room polygon; throws Error(Geometry) on failure.
void validate_room(std::span<const Vec2> polygon, double max_side);

Scene scene_from_json(const nlohmann::json& doc, const SceneOptions& opts = {});
Scene load_scene(std::string_view bytes, const SceneOptions& opts = {});
Scene load_scene_file(const std::string& path, const SceneOptions& opts = {});
nlohmann::json scene_to_json(const Scene& scene);
std::string serialize_scene(const Scene& scene);

/// Footprint of an object of `size` whose centroid sits on a cell center,
/// as offsets relative to that cell. A cell is covered when its center lies in
/// the half-open box [c - e/2, c + e/2).
CellRect footprint_offsets(const Vec2& size, Orientation o, double cell);

/// Cells covered by `obj` with its centroid on `centroid` facing `o`, clipped to the grid.
CellRect rasterize_footprint(const ObjectInstance& obj, CellIndex centroid, Orientation o, const GridSpec& grid);

/// Cells whose centers lie in the half-open box, not clipped.
CellRect rasterize_box(const Box& box, const Vec2& origin, const GridSpec& grid);

/// Largest pairwise furniture overlap as a fraction of the smaller footprint.
double max_pairwise_overlap(const Scene& scene);

}  // namespace placeprog
