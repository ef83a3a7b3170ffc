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
#include "placeprog/executor.hpp"
#include "placeprog/program.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace placeprog;
using namespace placeprog::testing;

namespace {

// Random tree over synthetic ids; independent of any scene.
NodePtr random_node(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, 2), type(0, 3), dir(0, 3), ref(0, 9);
  if (depth <= 1 || kind(rng) == 0) {
    Constraint c;
    c.type = static_cast<ConstraintType>(type(rng));
    c.reference = (ref(rng) < 4 ? "wall_" : "obj_") + std::to_string(ref(rng));
    if (c.type == ConstraintType::Attach || c.type == ConstraintType::ReachableByArm) {
      c.direction = static_cast<Direction>(dir(rng));
    }
    return ProgramNode::leaf(c);
  }
  auto l = random_node(rng, depth - 1), r = random_node(rng, depth - 1);
  return kind(rng) == 1 ? ProgramNode::conj(l, r) : ProgramNode::disj(l, r);
}

PlacementProgram leaf(const char* text) { return parse_program(text); }

}  // namespace

TEST_CASE("parse the smallest and a Fig-3 shaped program") {
  const PlacementProgram one = parse_program("attach(wall_2, up)");
  CHECK(one.leaf_count() == 1);
  CHECK(one.leaves()[0] == Constraint{ConstraintType::Attach, "wall_2", Direction::Up});

  const PlacementProgram p = parse_program("or(and(attach(bed_1, left), align(bed_1)), attach(wall_0, up))");
  CHECK(p.node_count() == 5);
  CHECK(p.leaf_count() == 3);
  CHECK(p.root()->kind == ProgramNode::Kind::Or);
  CHECK(p.root()->left->kind == ProgramNode::Kind::And);
  CHECK(p.references() == std::vector<std::string>{"bed_1", "wall_0"});
  CHECK(parse_program("  or ( and(attach( bed_1 ,left),align(bed_1)) ,\n attach(wall_0,up) ) ") == p);
}

TEST_CASE("parse errors") {
  for (const char* bad : {"", "attach(wall_0)", "align(wall_0, up)", "face(bed_1, left)", "attach(wall_0, sideways)",
                          "hover(wall_0)", "and(align(wall_0))", "and(align(a), align(b), align(c))",
                          "align(wall_0) extra", "or(align(a),", "reachable_by_arm(, up)"}) {
    INFO(bad);
    CHECK_THROWS_AS(parse_program(bad), Error);
  }
  try {
    parse_program("and(align(a), hover(b))");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() > 0);
    CHECK(e.kind() == ErrorKind::Parse);
  }
}

TEST_CASE("1000 random trees round-trip through text") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 1000; ++i) {
    const PlacementProgram p(random_node(rng, 6));
    const std::string text = serialize_program(p);
    const PlacementProgram q = parse_program(text);
    CHECK(q == p);
    CHECK(serialize_program(q) == text);
  }
}

TEST_CASE("validation") {
  Constraint bad{ConstraintType::Align, "wall_0", Direction::Up};
  CHECK_FALSE(is_well_formed(bad));
  CHECK_THROWS_AS(validate_program(PlacementProgram(ProgramNode::leaf(bad))), Error);
  for (auto t : {ConstraintType::Attach, ConstraintType::ReachableByArm}) {
    CHECK(is_well_formed({t, "x", Direction::Left}));
    CHECK_FALSE(is_well_formed({t, "x", Direction::Null}));
  }
  for (auto t : {ConstraintType::Align, ConstraintType::Face}) CHECK(is_well_formed({t, "x", Direction::Null}));
  CHECK_FALSE(is_well_formed({ConstraintType::Attach, "", Direction::Up}));

  NodePtr deep = ProgramNode::leaf({ConstraintType::Align, "a", Direction::Null});
  for (int i = 0; i < 12; ++i) deep = ProgramNode::conj(deep, ProgramNode::leaf({ConstraintType::Face, "b", Direction::Null}));
  CHECK_THROWS_AS(validate_program(PlacementProgram(deep)), Error);
  CHECK_NOTHROW(validate_program(PlacementProgram(deep), 20));

  const Scene s = make_scene(rect_room(4, 4), {object("desk_0", "desk", {1, 0.5}, {2, 0.3}),
                                               object("bed_0", "bed", {1.6, 2}, {2, 2.5}, Orientation::N, true)});
  CHECK_NOTHROW(validate_against_scene(leaf("reachable_by_arm(bed_0, up)"), s));
  CHECK_THROWS_AS(validate_against_scene(leaf("reachable_by_arm(desk_0, up)"), s), Error);
  CHECK_THROWS_AS(validate_against_scene(leaf("align(sofa_0)"), s), Error);
}

TEST_CASE("delete_constraint") {
  CHECK(delete_constraint(parse_program("and(align(a), align(b))"), 1) == parse_program("align(a)"));
  CHECK(delete_constraint(parse_program("or(and(align(a), align(b)), align(c))"), 0) ==
        parse_program("or(align(b), align(c))"));
  CHECK_THROWS_AS(delete_constraint(parse_program("align(a)"), 0), Error);
  CHECK_THROWS_AS(delete_constraint(parse_program("and(align(a), align(b))"), 2), Error);

  std::mt19937_64 rng(4);
  int trees = 0;
  while (trees < 50) {
    const PlacementProgram p(random_node(rng, 6));
    if (p.leaf_count() != 10) continue;
    ++trees;
    for (int k = 0; k < 10; ++k) {
      const PlacementProgram q = delete_constraint(p, k);
      CHECK(q.leaf_count() == 9);
      CHECK_NOTHROW(validate_program(q));
      CHECK(parse_program(serialize_program(q)) == q);
    }
  }
}

TEST_CASE("relax_randomly removes between one and all but one leaf") {
  std::mt19937_64 rng(6);
  const PlacementProgram p = parse_program("and(and(align(a), align(b)), and(align(c), align(d)))");
  for (int i = 0; i < 200; ++i) {
    const PlacementProgram q = relax_randomly(p, rng);
    CHECK(q.leaf_count() >= 1);
    CHECK(q.leaf_count() <= 3);
  }
  CHECK_THROWS_AS(relax_randomly(parse_program("align(a)"), rng), Error);
}

TEST_CASE("enumerate_subtrees") {
  const auto one = enumerate_subtrees(parse_program("align(a)"));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == parse_program("align(a)"));

  const auto two = enumerate_subtrees(parse_program("and(align(a), align(b))"));
  REQUIRE(two.size() == 3);
  CHECK(two[0] == parse_program("and(align(a), align(b))"));
  CHECK(two[1] == parse_program("align(a)"));
  CHECK(two[2] == parse_program("align(b)"));

  const PlacementProgram balanced = parse_program("and(or(align(a), align(b)), or(align(c), align(d)))");
  CHECK(balanced.node_count() == 7);
  CHECK(enumerate_subtrees(balanced).size() == 7);
}

TEST_CASE("or_join and and_join are left-deep") {
  const PlacementProgram p = leaf("align(a)"), q = leaf("align(b)"), r = leaf("align(c)");
  CHECK(or_join({p}) == p);
  CHECK(or_join({p, q}) == parse_program("or(align(a), align(b))"));
  CHECK(or_join({p, q, r}) == parse_program("or(or(align(a), align(b)), align(c))"));
  CHECK(and_join({p, q, r}) == parse_program("and(and(align(a), align(b)), align(c))"));

  const Scene s = make_scene(rect_room(4, 4), {}, small_grid(64, 64, 0.0625));
  const ExecutionContext ctx(s, {"chair", {0.4, 0.4}, false});
  const PlacementProgram a = leaf("attach(wall_0, up)"), b = leaf("attach(wall_1, up)"), c = leaf("align(wall_2)");
  CHECK(execute_program(or_join({a, b, c}), ctx) ==
        (execute_program(a, ctx) | execute_program(b, ctx) | execute_program(c, ctx)));
}

TEST_CASE("rename_references and local directions") {
  const PlacementProgram p = parse_program("and(attach(bed_0, left), align(bed_0))");
  CHECK(rename_references(p, {{"bed_0", "bed_3"}}) == parse_program("and(attach(bed_3, left), align(bed_3))"));
  CHECK(to_world(Direction::Up, Orientation::E) == Orientation::E);
  CHECK(to_world(Direction::Down, Orientation::E) == Orientation::W);
  CHECK(to_world(Direction::Left, Orientation::N) == Orientation::W);
  CHECK(to_world(Direction::Right, Orientation::N) == Orientation::E);
  CHECK_THROWS_AS(to_world(Direction::Null, Orientation::N), Error);
}
