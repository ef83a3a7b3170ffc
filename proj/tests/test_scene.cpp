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

#include "placeprog/error.hpp"
#include "placeprog/scene.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace placeprog;
using namespace placeprog::testing;

TEST_CASE("minimal scene derives four walls") {
  const Scene s = make_scene(rect_room(4, 4), {object("bed_0", "bed", {1.6, 2.0}, {2, 1.1}, Orientation::N, true)});
  CHECK(s.wall_count() == 4);
  CHECK(s.furniture().size() == 1);
  CHECK(s.objects.size() == 5);
  for (const auto& w : s.walls()) {
    CHECK(w.is_wall);
    CHECK_FALSE(w.holds_humans);
    CHECK(w.category == "wall");
  }
}

TEST_CASE("wall normals, lengths and positions") {
  const Scene unit = make_scene(rect_room(1, 1));
  std::vector<Orientation> normals;
  for (const auto& w : unit.walls()) normals.push_back(w.orientation);
  std::sort(normals.begin(), normals.end());
  CHECK(normals == std::vector<Orientation>{Orientation::N, Orientation::E, Orientation::S, Orientation::W});

  const Scene rect = make_scene(rect_room(6, 4));
  std::vector<double> lengths;
  for (const auto& w : rect.walls()) lengths.push_back(w.size.x());
  CHECK(lengths == std::vector<double>{6, 4, 6, 4});
  CHECK(rect.walls()[0].position.isApprox(Vec2(3, 0)));
  CHECK(rect.walls()[0].size.y() == doctest::Approx(0.10));
}

TEST_CASE("L-shaped room: six walls, each normal pointing inside") {
  // Vertices (0,0) (4,0) (4,2) (2,2) (2,4) (0,4), counter-clockwise.
  const Scene s = make_scene(l_room(4, 4, 2, 2));
  REQUIRE(s.wall_count() == 6);
  const std::vector<Orientation> expected = {Orientation::N, Orientation::W, Orientation::S,
                                             Orientation::W, Orientation::S, Orientation::E};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& w = s.walls()[i];
    CHECK(w.orientation == expected[i]);
    CHECK(s.contains_point(w.position + 0.01 * unit_vector(w.orientation)));
    CHECK_FALSE(s.contains_point(w.position - 0.01 * unit_vector(w.orientation)));
  }
}

TEST_CASE("wall footprints sit outside the room, flush with the edge") {
  const Scene s = make_scene(rect_room(4, 3));
  const Box south = footprint_box(s.walls()[0]);
  CHECK(south.max().y() == doctest::Approx(0.0));
  CHECK(south.min().y() == doctest::Approx(-0.10));
}

TEST_CASE("scene validation errors") {
  CHECK_THROWS_AS(make_scene(rect_room(4, 4), {object("bed_0", "bed", {1, 1}, {10, 10})}), Error);
  CHECK_THROWS_AS(make_scene({{0, 0}, {4, 0}, {4, 4}, {1, 3}}), Error);     // diagonal edge
  CHECK_THROWS_AS(make_scene(rect_room(7, 4)), Error);                         // over max side
  CHECK_THROWS_AS(make_scene(rect_room(4, 4), {object("x", "bed", {0, 1}, {1, 1})}), Error);
  CHECK_THROWS_AS(make_scene(rect_room(4, 4), {object("a", "bed", {1, 1}, {1, 1}), object("a", "bed", {1, 1}, {2, 2})}),
                  Error);
  SceneOptions vocab;
  vocab.vocabulary = {"bed"};
  CHECK_THROWS_AS(make_scene(rect_room(4, 4), {object("d", "desk", {1, 1}, {1, 1})}, vocab), Error);
  try {
    make_scene(rect_room(4, 4), {object("bed_0", "bed", {1, 1}, {10, 10})});
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("outside room") != std::string::npos);
    CHECK(e.kind() == ErrorKind::Geometry);
  }
  nlohmann::json j = scene_json(rect_room(4, 4), {});
  j["extra"] = 1;
  CHECK_THROWS_AS(scene_from_json(j), Error);
}

TEST_CASE("load and serialize round-trip") {
  const Scene s = make_scene(l_room(5, 4, 3, 2), {object("bed_0", "bed", {1.6, 2.0}, {1.0, 1.1}, Orientation::E, true),
                                                  object("nightstand_0", "nightstand", {0.5, 0.4}, {0.5, 3.0})});
  const Scene t = load_scene(serialize_scene(s));
  CHECK(serialize_scene(t) == serialize_scene(s));
  CHECK(t.objects.size() == s.objects.size());
  CHECK(t.origin.isApprox(s.origin));
}

TEST_CASE("footprint rasterization") {
  const GridSpec g{8, 8, 0.5};
  SUBCASE("one-cell object covers its centroid cell only") {
    const ObjectInstance o = object("a", "x", {0.5, 0.5}, {0, 0});
    const CellRect r = rasterize_footprint(o, {3, 4}, Orientation::N, g);
    CHECK(r == CellRect{3, 4, 4, 5});
  }
  SUBCASE("E and W swap width and depth") {
    const ObjectInstance o = object("a", "x", {1.5, 0.5}, {0, 0});
    const CellRect n = rasterize_footprint(o, {4, 4}, Orientation::N, g);
    const CellRect e = rasterize_footprint(o, {4, 4}, Orientation::E, g);
    CHECK(n.x1 - n.x0 == e.y1 - e.y0);
    CHECK(n.y1 - n.y0 == e.x1 - e.x0);
  }
  SUBCASE("boxes match per-cell containment") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int i = 0; i < 200; ++i) {
      Vec2 a(u(rng), u(rng)), b(u(rng), u(rng));
      const Box box(a.cwiseMin(b), a.cwiseMax(b));
      const CellRect r = rasterize_box(box, Vec2::Zero(), g).clipped(g);
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          const double cx = (x + 0.5) * 0.5, cy = (y + 0.5) * 0.5;
          const bool inside = cx >= box.min().x() && cx < box.max().x() && cy >= box.min().y() && cy < box.max().y();
          CHECK(r.contains(x, y) == inside);
        }
      }
    }
  }
  SUBCASE("footprint area stays within a ring of cells of the analytic area") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    for (int i = 0; i < 100; ++i) {
      const Vec2 size(u(rng), u(rng));
      const CellRect r = footprint_offsets(size, Orientation::N, 0.1);
      const double area = static_cast<double>(r.area()) * 0.01;
      const double ring = 2 * (size.x() + size.y()) * 0.1 + 4 * 0.01;
      CHECK(std::abs(area - size.x() * size.y()) <= ring);
    }
  }
}

TEST_CASE("scene prefixes and removal keep walls") {
  const Scene s = make_scene(rect_room(4, 4), {object("a", "bed", {1, 1}, {1, 1}), object("b", "desk", {1, 1}, {3, 3})});
  CHECK(s.prefix(0).furniture().empty());
  CHECK(s.prefix(0).wall_count() == 4);
  CHECK(s.prefix(1).furniture().size() == 1);
  CHECK(s.without("a").find("a") == nullptr);
  CHECK(s.without("a").find("b") != nullptr);
}

TEST_CASE("geometry helpers") {
  const Box ref(Vec2(0, 0), Vec2(1, 1));
  const Box q(Vec2(0.5, 1.2), Vec2(1.5, 2));
  CHECK(directional_gap(ref, q, Orientation::N) == doctest::Approx(0.2));
  CHECK(lateral_overlap(ref, q, Orientation::N) == doctest::Approx(0.5));
  CHECK(box_distance(ref, q) == doctest::Approx(0.2));
  CHECK(intersection_area(ref, Box(Vec2(0.5, 0.5), Vec2(2, 2))) == doctest::Approx(0.25));
  CHECK(opposite(Orientation::N) == Orientation::S);
  CHECK(turn_left(Orientation::N) == Orientation::W);
  CHECK(turn_right(Orientation::W) == Orientation::N);
  CHECK(orientation_from_string("E") == Orientation::E);
  CHECK_FALSE(orientation_from_string("Q").has_value());
}
