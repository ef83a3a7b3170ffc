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

#include "placeprog/scene.hpp"

#include "placeprog/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace placeprog {
namespace {

constexpr double kEps = 1e-9;

double signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

Orientation orientation_of(const Vec2& v) {
  if (std::abs(v.x()) >= std::abs(v.y())) return v.x() > 0 ? Orientation::E : Orientation::W;
  return v.y() > 0 ? Orientation::N : Orientation::S;
}

bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
  // Axis-aligned segments only.
  const Box ba(a0.cwiseMin(a1), a0.cwiseMax(a1));
  const Box bb(b0.cwiseMin(b1), b0.cwiseMax(b1));
  return ba.min().x() <= bb.max().x() + kEps && bb.min().x() <= ba.max().x() + kEps &&
         ba.min().y() <= bb.max().y() + kEps && bb.min().y() <= ba.max().y() + kEps;
}

std::vector<Vec2> normalized_polygon(std::vector<Vec2> poly) {
  if (poly.size() >= 2 && (poly.front() - poly.back()).norm() < kEps) poly.pop_back();
  return poly;
}

Vec2 read_vec2(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorKind::Schema, std::string(what) + " must be a [number, number] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }) == allowed.end()) {
      throw Error(ErrorKind::Schema, std::string("unknown key '") + key + "' in " + what);
    }
  }
}

}  // namespace

CellRect CellRect::clipped(const GridSpec& g) const {
  return {std::max(x0, 0), std::max(y0, 0), std::min(x1, g.w), std::min(y1, g.h)};
}

CellRect CellRect::intersect(const CellRect& o) const {
  return {std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
}

Box footprint_box(const ObjectInstance& obj) {
  if (!obj.is_wall) return oriented_box(obj.position, obj.size, obj.orientation);
  const Vec2 center = obj.position - 0.5 * obj.size.y() * unit_vector(obj.orientation);
  return oriented_box(center, obj.size, obj.orientation);
}

const ObjectInstance* Scene::find(std::string_view id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

std::size_t Scene::wall_count() const {
  return static_cast<std::size_t>(
      std::count_if(objects.begin(), objects.end(), [](const ObjectInstance& o) { return o.is_wall; }));
}

std::span<const ObjectInstance> Scene::walls() const { return {objects.data(), wall_count()}; }

std::span<const ObjectInstance> Scene::furniture() const {
  const std::size_t n = wall_count();
  return {objects.data() + n, objects.size() - n};
}

Scene Scene::prefix(std::size_t k) const {
  Scene s = *this;
  const std::size_t keep = std::min(objects.size(), wall_count() + k);
  s.objects.resize(keep);
  return s;
}

Scene Scene::without(std::string_view id) const {
  Scene s = *this;
  std::erase_if(s.objects, [&](const ObjectInstance& o) { return o.id == id; });
  return s;
}

Scene Scene::with_object(ObjectInstance obj) const {
  Scene s = *this;
  s.objects.push_back(std::move(obj));
  return s;
}

Box Scene::bounds() const {
  Box b;
  for (const auto& p : room) b.extend(p);
  return b;
}

Vec2 Scene::cell_center(int x, int y) const {
  return {origin.x() + (x + 0.5) * grid.cell, origin.y() + (y + 0.5) * grid.cell};
}

std::optional<CellIndex> Scene::cell_of(const Vec2& p) const {
  const int x = static_cast<int>(std::floor((p.x() - origin.x()) / grid.cell));
  const int y = static_cast<int>(std::floor((p.y() - origin.y()) / grid.cell));
  if (x < 0 || y < 0 || x >= grid.w || y >= grid.h) return std::nullopt;
  return CellIndex{x, y};
}

bool Scene::contains_point(const Vec2& p) const { return point_in_polygon(room, p); }

bool point_in_polygon(std::span<const Vec2> poly, const Vec2& p) {
  // Boundary points count as inside.
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const Box seg(a.cwiseMin(b), a.cwiseMax(b));
    if (p.x() >= seg.min().x() - kEps && p.x() <= seg.max().x() + kEps && p.y() >= seg.min().y() - kEps &&
        p.y() <= seg.max().y() + kEps) {
      return true;
    }
  }
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

void validate_room(std::span<const Vec2> poly, double max_side) {
  if (poly.size() < 4) throw Error(ErrorKind::Geometry, "room polygon needs at least 4 vertices");
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 d = poly[(i + 1) % poly.size()] - poly[i];
    if (d.norm() < kEps) throw Error(ErrorKind::Geometry, "degenerate zero-length edge " + std::to_string(i));
    if (std::abs(d.x()) > kEps && std::abs(d.y()) > kEps) {
      throw Error(ErrorKind::Geometry, "non-rectilinear room polygon: edge " + std::to_string(i) + " is not axis-aligned");
    }
  }
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        throw Error(ErrorKind::Geometry, "room polygon is not simple");
      }
    }
  }
  if (std::abs(signed_area(poly)) < kEps) throw Error(ErrorKind::Geometry, "room polygon has zero area");
  Box b;
  for (const auto& p : poly) b.extend(p);
  if (b.sizes().maxCoeff() > max_side + kEps) {
    throw Error(ErrorKind::Geometry, "room side exceeds maximum of " + std::to_string(max_side) + " m");
  }
}

std::vector<ObjectInstance> derive_walls(std::span<const Vec2> poly, double thickness) {
  const bool ccw = signed_area(poly) > 0.0;
  std::vector<ObjectInstance> walls;
  walls.reserve(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const Vec2 d = b - a;
    const double len = d.norm();
    if (len < kEps) throw Error(ErrorKind::Geometry, "degenerate zero-length edge " + std::to_string(i));
    const Vec2 normal = ccw ? Vec2(-d.y(), d.x()) : Vec2(d.y(), -d.x());
    ObjectInstance w;
    w.id = "wall_" + std::to_string(i);
    w.category = "wall";
    w.size = Vec2(len, thickness);
    w.position = 0.5 * (a + b);
    w.orientation = orientation_of(normal);
    w.holds_humans = false;
    w.is_wall = true;
    walls.push_back(std::move(w));
  }
  return walls;
}

Scene scene_from_json(const nlohmann::json& doc, const SceneOptions& opts) {
  require_keys(doc, {"scene_type", "room", "objects"}, "scene");
  if (!doc.contains("room") || !doc.contains("objects")) throw Error(ErrorKind::Schema, "scene requires 'room' and 'objects'");
  Scene s;
  s.grid = opts.grid;
  if (doc.contains("scene_type")) {
    if (!doc["scene_type"].is_string()) throw Error(ErrorKind::Schema, "'scene_type' must be a string");
    s.scene_type = doc["scene_type"].get<std::string>();
  }
  if (!doc["room"].is_array()) throw Error(ErrorKind::Schema, "'room' must be an array of [x, y] vertices");
  std::vector<Vec2> room;
  for (const auto& v : doc["room"]) room.push_back(read_vec2(v, "room vertex"));
  s.room = normalized_polygon(std::move(room));
  validate_room(s.room, opts.max_side);
  const Box bounds = s.bounds();
  s.origin = bounds.min();
  if (opts.grid.w * opts.grid.cell + kEps < bounds.sizes().x() || opts.grid.h * opts.grid.cell + kEps < bounds.sizes().y()) {
    throw Error(ErrorKind::Geometry, "grid does not cover the room bounding box");
  }
  s.objects = derive_walls(s.room, opts.wall_thickness);

  if (!doc["objects"].is_array()) throw Error(ErrorKind::Schema, "'objects' must be an array");
  std::set<std::string> ids;
  for (const auto& o : s.objects) ids.insert(o.id);
  for (const auto& j : doc["objects"]) {
    require_keys(j, {"id", "category", "size", "position", "orientation", "holds_humans"}, "object");
    for (const char* k : {"id", "category", "size", "position", "orientation"}) {
      if (!j.contains(k)) throw Error(ErrorKind::Schema, std::string("object missing '") + k + "'");
    }
    ObjectInstance obj;
    if (!j["id"].is_string() || !j["category"].is_string() || !j["orientation"].is_string()) {
      throw Error(ErrorKind::Schema, "object 'id', 'category' and 'orientation' must be strings");
    }
    obj.id = j["id"].get<std::string>();
    obj.category = j["category"].get<std::string>();
    obj.size = read_vec2(j["size"], "object size");
    obj.position = read_vec2(j["position"], "object position");
    const auto o = orientation_from_string(j["orientation"].get<std::string>());
    if (!o) throw Error(ErrorKind::Schema, "orientation must be one of N, E, S, W");
    obj.orientation = *o;
    if (j.contains("holds_humans")) {
      if (!j["holds_humans"].is_boolean()) throw Error(ErrorKind::Schema, "'holds_humans' must be a boolean");
      obj.holds_humans = j["holds_humans"].get<bool>();
    }
    if (obj.id.empty()) throw Error(ErrorKind::Schema, "object id must be non-empty");
    if (!ids.insert(obj.id).second) throw Error(ErrorKind::Schema, "duplicate object id '" + obj.id + "'");
    if (obj.category == "wall") throw Error(ErrorKind::Schema, "walls are derived and may not appear in files");
    if (!(obj.size.x() > 0.0 && obj.size.y() > 0.0)) throw Error(ErrorKind::Schema, "object size must be positive");
    if (!opts.vocabulary.empty() &&
        std::find(opts.vocabulary.begin(), opts.vocabulary.end(), obj.category) == opts.vocabulary.end()) {
      throw Error(ErrorKind::Validation, "unknown category '" + obj.category + "'");
    }
    if (!point_in_polygon(s.room, obj.position)) {
      throw Error(ErrorKind::Geometry, "object outside room: '" + obj.id + "'");
    }
    s.objects.push_back(std::move(obj));
  }
  return s;
}

Scene load_scene(std::string_view bytes, const SceneOptions& opts) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Schema, std::string("invalid JSON: ") + e.what());
  }
  return scene_from_json(doc, opts);
}

Scene load_scene_file(const std::string& path, const SceneOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scene(ss.str(), opts);
}

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json doc;
  doc["scene_type"] = scene.scene_type;
  doc["room"] = nlohmann::json::array();
  for (const auto& p : scene.room) doc["room"].push_back({p.x(), p.y()});
  doc["objects"] = nlohmann::json::array();
  for (const auto& o : scene.furniture()) {
    doc["objects"].push_back({{"id", o.id},
                              {"category", o.category},
                              {"size", {o.size.x(), o.size.y()}},
                              {"position", {o.position.x(), o.position.y()}},
                              {"orientation", std::string(1, to_char(o.orientation))},
                              {"holds_humans", o.holds_humans}});
  }
  return doc;
}

std::string serialize_scene(const Scene& scene) { return scene_to_json(scene).dump(2); }

CellRect footprint_offsets(const Vec2& size, Orientation o, double cell) {
  const Vec2 half = 0.5 * world_extent(size, o) / cell;
  return {static_cast<int>(std::ceil(-half.x() - kEps)), static_cast<int>(std::ceil(-half.y() - kEps)),
          static_cast<int>(std::ceil(half.x() - kEps)), static_cast<int>(std::ceil(half.y() - kEps))};
}

CellRect rasterize_footprint(const ObjectInstance& obj, CellIndex centroid, Orientation o, const GridSpec& grid) {
  return footprint_offsets(obj.size, o, grid.cell).translated(centroid.x, centroid.y).clipped(grid);
}

CellRect rasterize_box(const Box& box, const Vec2& origin, const GridSpec& grid) {
  auto lo = [&](double v, double o) { return static_cast<int>(std::ceil((v - o) / grid.cell - 0.5 - kEps)); };
  return {lo(box.min().x(), origin.x()), lo(box.min().y(), origin.y()), lo(box.max().x(), origin.x()),
          lo(box.max().y(), origin.y())};
}

double max_pairwise_overlap(const Scene& scene) {
  const auto furn = scene.furniture();
  double worst = 0.0;
  for (std::size_t i = 0; i < furn.size(); ++i) {
    for (std::size_t j = i + 1; j < furn.size(); ++j) {
      const Box a = footprint_box(furn[i]);
      const Box b = footprint_box(furn[j]);
      const double smaller = std::min(a.volume(), b.volume());
      if (smaller > 0.0) worst = std::max(worst, intersection_area(a, b) / smaller);
    }
  }
  return worst;
}

}  // namespace placeprog
