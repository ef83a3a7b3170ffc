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

#include "placeprog/bootstrap.hpp"
#include "placeprog/error.hpp"
#include "placeprog/evaluation.hpp"
#include "placeprog/procgen.hpp"
#include "placeprog/synthesis.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

using namespace placeprog;
using namespace placeprog::testing;
namespace fs = std::filesystem;

namespace {

Scene with(const std::vector<std::string>& categories) {
  std::vector<ObjectInstance> objs;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    objs.push_back(object(categories[i] + "_" + std::to_string(i), categories[i], {0.4, 0.5},
                          {0.5 + 0.8 * static_cast<double>(i), 1.0}));
  }
  return make_scene(rect_room(4, 4), objs);
}

std::set<std::string> draws(const CategoryModel& m, const Scene& s, int n) {
  std::mt19937_64 rng(4);
  std::set<std::string> out;
  for (int i = 0; i < n; ++i) out.insert(m.sample(s, rng));
  return out;
}

struct Trained {
  std::vector<GeneratedScene> scenes = generate_dataset(default_grammar(), 30, 61, ProcgenConfig{}, 4);
  SceneCorpus corpus = make_corpus(scenes);
  RetrievalProposer proposer;
  ConstantScorer scorer{0.8};
  SynthesisModel model;
  std::vector<Scene> plain;
  Trained() {
    proposer.retrain(extract_dataset(corpus, {}, {}, 4), corpus);
    for (const auto& g : scenes) plain.push_back(g.scene);
    model = fit_synthesis_model(plain, proposer, scorer);
  }
};

}  // namespace

TEST_CASE("category model conditions on counts") {
  std::vector<Scene> train(10, with({"bed", "nightstand"}));
  CategoryModel m;
  m.fit(train);
  CHECK(draws(m, make_scene(rect_room(4, 4)), 200) == std::set<std::string>{"bed"});
  CHECK(draws(m, with({"bed"}), 200) == std::set<std::string>{"nightstand"});
  CHECK(draws(m, with({"nightstand", "bed"}), 200) == std::set<std::string>{CategoryModel::kStop});
  // Unseen state: falls back to the marginal.
  CHECK(draws(m, with({"bed", "bed", "bed"}), 400).size() >= 2);

  const CategoryModel back = CategoryModel::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  CHECK(draws(back, with({"bed"}), 50) == draws(m, with({"bed"}), 50));
  CHECK(CategoryModel{}.empty());
}

TEST_CASE("dimension sampler draws observed sizes") {
  DimensionSampler d;
  std::vector<Scene> train{with({"bed"}), make_scene(rect_room(4, 4), {object("bed_9", "bed", {1.6, 2.0}, {2, 2}, Orientation::N, true)})};
  d.fit(train);
  std::mt19937_64 rng(1);
  std::set<std::pair<double, double>> seen;
  for (int i = 0; i < 100; ++i) {
    const Query q = d.sample("bed", rng);
    CHECK(q.category == "bed");
    seen.insert({q.size.x(), q.size.y()});
  }
  CHECK(seen == std::set<std::pair<double, double>>{{0.4, 0.5}, {1.6, 2.0}});
  CHECK_THROWS_AS(d.sample("sofa", rng), Error);
  const DimensionSampler back = DimensionSampler::from_json(d.to_json());
  CHECK(back.to_json() == d.to_json());
}

TEST_CASE("select_program") {
  const Scene s = make_scene(rect_room(4, 4), {}, small_grid(64, 64, 0.0625));
  const ExecutionContext ctx(s, {"desk", {1.0, 0.5}, false});
  const ConstantScorer c(0.5);
  std::mt19937_64 rng(1);
  const auto a = parse_program("and(attach(wall_0, up), align(wall_0))");
  const auto b = parse_program("and(align(wall_0), attach(wall_0, up))");
  const auto none = parse_program("and(attach(wall_0, up), attach(wall_2, up))");
  const auto pick = select_program({b, none, a}, ctx, c, 5, rng);
  REQUIRE(pick);
  CHECK(serialize_program(pick->program) == std::min(serialize_program(a), serialize_program(b)));
  CHECK(pick->mask == execute_program(a, ctx));
  CHECK(pick->score == doctest::Approx(0.5));
  CHECK_FALSE(select_program({none}, ctx, c, 5, rng));
  CHECK_FALSE(select_program({}, ctx, c, 5, rng));

  struct PreferSouth : PlacementScorer {
    double probability(const ExecutionContext&, const Placement& p) const override {
      return p.orientation == Orientation::S ? 0.9 : 0.2;
    }
  } south;
  const auto s2 = parse_program("and(attach(wall_2, up), align(wall_2))");
  CHECK(select_program({a, s2}, ctx, south, 5, rng)->program == s2);
}

TEST_CASE("synthesis steps") {
  Trained t;
  SynthesisConfig cfg;
  const Scene room = floor_plan_of(t.plain[0]);
  CHECK(room.furniture().empty());
  CHECK(room.wall_count() == t.plain[0].wall_count());

  SUBCASE("placements respect the collision threshold in the scene they were placed in") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      Scene s = floor_plan_of(t.plain[seed]);
      for (int k = 0; k < 6; ++k) {
        const StepResult r = step(s, t.model, cfg, rng);
        if (r.stopped()) {
          CHECK(serialize_scene(r.scene) == serialize_scene(s));
          break;
        }
        const ObjectInstance& o = *r.placed;
        const ExecutionContext ctx(s, {o.category, o.size, o.holds_humans}, cfg.executor);
        const auto cell = s.cell_of(o.position);
        REQUIRE(cell);
        CHECK(ctx.free_mask().test({*cell, o.orientation}));
        CHECK(execute_program(r.program, ctx).test({*cell, o.orientation}));
        CHECK(r.scene.furniture().size() == s.furniture().size() + 1);
        CHECK(r.scene.find(o.id) != nullptr);
        CHECK(s.find(o.id) == nullptr);
        s = r.scene;
      }
    }
  }
  SUBCASE("stop leaves the scene unchanged") {
    SynthesisModel empty_model = fit_synthesis_model(std::vector<Scene>{room}, t.proposer, t.scorer);
    std::mt19937_64 rng(1);
    const StepResult r = step(room, empty_model, cfg, rng);
    CHECK(r.stopped());
    CHECK(serialize_scene(r.scene) == serialize_scene(room));
  }
  SUBCASE("determinism and object caps") {
    const Scene a = synthesize(t.plain[3], t.model, cfg, 11);
    const Scene b = synthesize(t.plain[3], t.model, cfg, 11);
    CHECK(serialize_scene(a) == serialize_scene(b));
    CHECK(static_cast<int>(a.furniture().size()) <= cfg.max_objects);

    SynthesisConfig zero = cfg;
    zero.max_objects = 0;
    CHECK(serialize_scene(synthesize(t.plain[3], t.model, zero, 1)) == serialize_scene(floor_plan_of(t.plain[3])));
    SynthesisConfig full = cfg;
    full.max_objects = static_cast<int>(t.plain[3].furniture().size());
    CHECK(serialize_scene(complete(t.plain[3], t.model, full, 1)) == serialize_scene(t.plain[3]));

    const Scene partial = t.plain[5].prefix(1);
    const Scene done = complete(partial, t.model, cfg, 2);
    REQUIRE(done.objects.size() >= partial.objects.size());
    for (std::size_t i = 0; i < partial.objects.size(); ++i) CHECK(done.objects[i].id == partial.objects[i].id);
  }
  SUBCASE("missing parts are a precondition error") {
    SynthesisModel broken = t.model;
    broken.scorer = nullptr;
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(step(room, broken, cfg, rng), Error);
  }
}

TEST_CASE("model directories") {
  const fs::path dir = fs::temp_directory_path() / "placeprog_not_a_model";
  fs::remove_all(dir);
  fs::create_directories(dir / "scenes");
  CHECK_FALSE(is_model_dir(dir));
  CHECK_THROWS_AS(load_trained_model(dir), Error);
  fs::remove_all(dir);
}
