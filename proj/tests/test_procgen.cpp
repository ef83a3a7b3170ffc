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
#include "placeprog/procgen.hpp"
#include "support/oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>

using namespace placeprog;
namespace fs = std::filesystem;

namespace {

int kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return static_cast<int>(e.kind());
  }
  return -1;
}

std::map<std::string, int> category_counts(const std::vector<GeneratedScene>& scenes) {
  std::map<std::string, int> out;
  for (const auto& g : scenes) {
    for (const auto& o : g.scene.furniture()) ++out[o.category];
  }
  return out;
}

}  // namespace

TEST_CASE("default grammar scenes are valid and carry their ground truth") {
  const ProcgenConfig cfg;
  const auto scenes = generate_dataset(default_grammar(), 300, 11, cfg, 4);
  REQUIRE(scenes.size() == 300);
  for (const auto& g : scenes) {
    // Reloading runs the full scene validator.
    const Scene back = scene_from_json(scene_to_json(g.scene));
    CHECK(serialize_scene(back) == serialize_scene(g.scene));
    CHECK(max_pairwise_overlap(g.scene) <= cfg.max_scene_overlap);
    const Box b = g.scene.bounds();
    CHECK(b.sizes().minCoeff() >= cfg.min_side - 1e-9);
    CHECK(b.sizes().maxCoeff() <= cfg.max_side + 1e-9);
    CHECK(g.scene.wall_count() == 4);

    const auto furniture = g.scene.furniture();
    REQUIRE(g.truth.size() == furniture.size());
    CHECK(furniture.front().category == "bed");
    for (std::size_t i = 0; i < furniture.size(); ++i) {
      const auto& obj = furniture[i];
      CHECK(g.truth[i].object_id == obj.id);
      CHECK(g.find(obj.id) == &g.truth[i]);
      const auto cell = g.scene.cell_of(obj.position);
      REQUIRE(cell);
      CHECK(g.truth[i].mask.test({*cell, obj.orientation}));
      // Each object was placed after everything before it, not after later objects.
      const ExecutionContext ctx(g.scene.prefix(i), {obj.category, obj.size, obj.holds_humans});
      CHECK(g.truth[i].mask.is_subset_of(ctx.free_mask()));
    }
  }
}

TEST_CASE("ground-truth masks match the brute-force evaluator") {
  const auto scenes = generate_dataset(default_grammar(), 6, 5, ProcgenConfig{});
  for (const auto& g : scenes) {
    const auto furniture = g.scene.furniture();
    for (std::size_t i = 0; i < furniture.size(); ++i) {
      const auto& obj = furniture[i];
      const Scene before = g.scene.prefix(i);
      const oracle::Evaluator ev(before, {obj.category, obj.size, obj.holds_humans}, ExecutorConfig{});
      CHECK(ev.run(g.truth[i].program) == g.truth[i].mask);
    }
  }
}

TEST_CASE("procgen is deterministic and thread-count independent") {
  const ProcgenConfig cfg;
  const auto a = generate_dataset(default_grammar(), 20, 99, cfg, 1);
  const auto b = generate_dataset(default_grammar(), 20, 99, cfg, 8);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(serialize_scene(a[i].scene) == serialize_scene(b[i].scene));
    for (std::size_t k = 0; k < a[i].truth.size(); ++k) {
      CHECK(a[i].truth[k].mask == b[i].truth[k].mask);
      CHECK(serialize_program(a[i].truth[k].program) == serialize_program(b[i].truth[k].program));
    }
  }
  CHECK(serialize_scene(generate_dataset(default_grammar(), 1, 100, cfg)[0].scene) != serialize_scene(a[0].scene));
}

TEST_CASE("category frequencies are stable across disjoint seed ranges") {
  const ProcgenConfig cfg;
  const auto a = category_counts(generate_dataset(default_grammar(), 300, 1, cfg, 4));
  const auto b = category_counts(generate_dataset(default_grammar(), 300, 777777, cfg, 4));
  // Pearson chi-square on the 2 x k contingency table.
  double na = 0, nb = 0;
  for (const auto& [c, n] : a) na += n;
  for (const auto& [c, n] : b) nb += n;
  double chi2 = 0;
  int k = 0;
  for (const auto& [c, n] : a) {
    const double m = b.count(c) ? b.at(c) : 0;
    const double col = n + m;
    const double ea = col * na / (na + nb), eb = col * nb / (na + nb);
    chi2 += (n - ea) * (n - ea) / ea + (m - eb) * (m - eb) / eb;
    ++k;
  }
  CHECK(k == 6);
  CHECK(a.size() == b.size());
  // 99.9th percentile of chi-square with 5 degrees of freedom.
  CHECK(chi2 < 20.52);
}

TEST_CASE("grammar files") {
  const Grammar g = default_grammar();
  CHECK_NOTHROW(validate_grammar(g));
  const Grammar back = grammar_from_json(grammar_to_json(g));
  CHECK(grammar_to_json(back) == grammar_to_json(g));

  Grammar forward = g;
  std::swap(forward.rules[0], forward.rules[1]);
  CHECK(kind_of([&] { validate_grammar(forward); }) == static_cast<int>(ErrorKind::Config));
  Grammar counts = g;
  counts.rules[1].max_count = -1;
  CHECK(kind_of([&] { validate_grammar(counts); }) == static_cast<int>(ErrorKind::Config));
  Grammar bad_text = g;
  bad_text.rules[0].program = "and(attach({wall}, up)";
  CHECK(kind_of([&] { validate_grammar(bad_text); }) == static_cast<int>(ErrorKind::Config));
  Grammar no_walls = g;
  no_walls.rules[0].over_walls = false;
  CHECK(kind_of([&] { validate_grammar(no_walls); }) == static_cast<int>(ErrorKind::Config));

  Grammar huge = g;
  huge.rules[0].min_width = huge.rules[0].max_width = 7.0;
  ProcgenConfig cfg;
  cfg.scene_retries = 3;
  CHECK(kind_of([&] { generate_scene(huge, 1, cfg, "x"); }) == static_cast<int>(ErrorKind::Execution));
}

TEST_CASE("generated datasets round-trip through disk") {
  const fs::path dir = fs::temp_directory_path() / "placeprog_procgen_rt";
  fs::remove_all(dir);
  const auto scenes = generate_dataset(default_grammar(), 5, 3, ProcgenConfig{});
  write_generated(scenes, dir);
  const auto back = load_generated(dir);
  REQUIRE(back.size() == scenes.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == scenes[i].id);
    CHECK(serialize_scene(back[i].scene) == serialize_scene(scenes[i].scene));
    REQUIRE(back[i].truth.size() == scenes[i].truth.size());
    for (std::size_t k = 0; k < back[i].truth.size(); ++k) {
      CHECK(back[i].truth[k].object_id == scenes[i].truth[k].object_id);
      CHECK(back[i].truth[k].mask == scenes[i].truth[k].mask);
      CHECK(back[i].truth[k].program == scenes[i].truth[k].program);
    }
  }
  CHECK(load_scene_dir(dir).size() == 5);
  fs::remove_all(dir);
}

TEST_CASE("classifier eval set") {
  const auto scenes = generate_dataset(default_grammar(), 60, 21, ProcgenConfig{}, 4);
  const auto set = build_classifier_eval_set(scenes, 4);
  std::map<std::pair<std::string, std::string>, const MaskExample*> positive;
  std::size_t objects = 0;
  for (const auto& g : scenes) objects += g.truth.size();
  for (const auto& e : set) {
    if (e.positive) {
      CHECK(positive.emplace(std::pair{e.scene_id, e.object_id}, &e).second);
    }
  }
  CHECK(positive.size() == objects);
  int negatives = 0;
  for (const auto& e : set) {
    if (e.positive) {
      const auto& g = *std::find_if(scenes.begin(), scenes.end(), [&](const auto& s) { return s.id == e.scene_id; });
      CHECK(e.mask == g.find(e.object_id)->mask);
      continue;
    }
    ++negatives;
    const MaskExample& pos = *positive.at({e.scene_id, e.object_id});
    CHECK_FALSE(e.mask.is_subset_of(pos.mask));
    const ExecutionContext ctx(e.context, e.query);
    CHECK(execute_program(e.program, ctx) == e.mask);
  }
  CHECK(negatives > 0);
  CHECK(set.size() == build_classifier_eval_set(scenes, 4).size());
}
