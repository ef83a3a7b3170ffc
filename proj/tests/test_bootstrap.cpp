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
#include "placeprog/io.hpp"
#include "placeprog/procgen.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

using namespace placeprog;
using namespace placeprog::testing;
namespace fs = std::filesystem;

namespace {

std::set<std::string> texts(const std::vector<Candidate>& cs) {
  std::set<std::string> out;
  for (const auto& c : cs) out.insert(serialize_program(c.program));
  return out;
}

ScoredCandidate scored(const std::string& text, const ExecutionContext& ctx, double score) {
  ScoredCandidate c;
  c.program = parse_program(text);
  c.mask = execute_program(c.program, ctx);
  c.score = score;
  for (int o = 0; o < 4; ++o) c.areas[o] = c.mask.count(orientation_from_index(o));
  return c;
}

struct Throwing : PlacementScorer {
  double probability(const ExecutionContext&, const Placement&) const override {
    throw Error(ErrorKind::Execution, "scorer offline");
  }
};

struct Fixture {
  std::vector<GeneratedScene> scenes = generate_dataset(default_grammar(), 16, 41, ProcgenConfig{}, 4);
  SceneCorpus corpus = make_corpus(scenes);
  TruthMasks truth = truth_masks(scenes);
  ProgramDataset dataset = extract_dataset(corpus, {}, {}, 4);
};

}  // namespace

TEST_CASE("generate_candidates") {
  std::mt19937_64 rng(1);
  const auto single = parse_program("attach(wall_0, up)");
  CHECK(texts(generate_candidates(single, {}, 8, rng)) == std::set<std::string>{serialize_program(single)});

  const auto dup = parse_program("align(wall_1)");
  const auto with_dups = generate_candidates(single, {dup, dup, single}, 0, rng);
  CHECK(texts(with_dups).size() == with_dups.size());
  CHECK(with_dups.size() == 2);

  const Scene s = make_scene(rect_room(4, 4), {}, small_grid(64, 64, 0.0625));
  const ExecutionContext ctx(s, {"desk", {1.0, 0.5}, false});
  const auto three = parse_program("and(and(attach(wall_0, up), align(wall_0)), attach(wall_3, up))");
  const PlacementMask base = execute_program(three, ctx);
  const auto cands = generate_candidates(three, {}, 3, rng);
  CHECK(cands.front().source == CandidateSource::Original);
  int relaxed = 0;
  for (const auto& c : cands) {
    if (c.source != CandidateSource::Relaxed) continue;
    ++relaxed;
    CHECK(c.program.leaf_count() < 3);
    CHECK(base.is_subset_of(execute_program(c.program, ctx)));
  }
  CHECK(relaxed >= 1);
}

TEST_CASE("filter_and_split") {
  const Scene s = make_scene(rect_room(4, 4), {}, small_grid(64, 64, 0.0625));
  const ExecutionContext ctx(s, {"desk", {1.0, 0.5}, false});
  auto run = [&](const std::string& text) {
    return filter_and_split({{parse_program(text), CandidateSource::Proposed}}, ctx, 0.5);
  };
  CHECK(run("align(wall_0)").empty());
  // wall_0 faces N and wall_2 faces S; the facing query can never touch both.
  CHECK(run("and(attach(wall_0, up), attach(wall_2, up))").empty());

  const auto kept = run("and(attach(wall_0, up), align(wall_0))");
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].orientation_count() == 1);
  CHECK(kept[0].orientation() == index(Orientation::N));

  const auto split =
      run("or(and(attach(wall_0, up), align(wall_0)), and(attach(wall_2, up), align(wall_2)))");
  REQUIRE(split.size() == 2);
  std::set<int> seen;
  for (const auto& c : split) {
    CHECK(c.source == CandidateSource::Subtree);
    CHECK(c.orientation_count() == 1);
    CHECK(c.mask.count() == c.areas[c.orientation()]);
    seen.insert(c.orientation());
  }
  CHECK(seen == std::set<int>{index(Orientation::N), index(Orientation::S)});
}

TEST_CASE("combine") {
  const Scene s = make_scene(rect_room(4, 4), {}, small_grid(64, 64, 0.0625));
  const ExecutionContext ctx(s, {"desk", {1.0, 0.5}, false});
  const auto north_small = scored("and(and(attach(wall_0, up), align(wall_0)), attach(wall_3, up))", ctx, 0.9);
  const auto north = scored("and(attach(wall_0, up), align(wall_0))", ctx, 0.7);
  const auto south = scored("and(attach(wall_2, up), align(wall_2))", ctx, 0.8);
  const auto south_low = scored("and(attach(wall_2, up), align(wall_2))", ctx, 0.1);

  SUBCASE("one orientation gives the largest mask, bare") {
    const auto p = combine({north_small, north}, 0.6);
    REQUIRE(p);
    CHECK(*p == north.program);
  }
  SUBCASE("two orientations are or-joined and the mask is the union") {
    const auto p = combine({north_small, north, south}, 0.6);
    REQUIRE(p);
    const PlacementMask m = execute_program(*p, ctx);
    CHECK(m == (north.mask | south.mask));
    CHECK(north_small.mask.is_subset_of(m));
  }
  SUBCASE("below threshold loses") {
    const auto p = combine({north, south_low}, 0.6);
    REQUIRE(p);
    CHECK(*p == north.program);
    CHECK_FALSE(combine({south_low}, 0.6));
    CHECK_FALSE(combine({}, 0.6));
  }
  SUBCASE("area ties go to the higher score, then the smaller text") {
    auto twin = scored("and(align(wall_0), attach(wall_0, up))", ctx, 0.95);
    REQUIRE(twin.mask == north.mask);
    CHECK(*combine({north, twin}, 0.6) == twin.program);
    twin.score = north.score;
    const auto pick = *combine({twin, north}, 0.6);
    CHECK(serialize_program(pick) == std::min(serialize_program(north.program), serialize_program(twin.program)));
  }
}

TEST_CASE("remap_references") {
  const Scene source = make_scene(rect_room(4, 4), {object("bed_0", "bed", {1.6, 2.0}, {2.0, 1.1}, Orientation::N, true)});
  const Scene target =
      make_scene(rect_room(5, 3), {object("bed_7", "bed", {1.6, 2.0}, {1.0, 1.5}, Orientation::E, true)});
  const auto p = parse_program("and(attach(bed_0, left), align(wall_0))");
  const auto mapped = remap_references(p, source, target);
  REQUIRE(mapped);
  CHECK(serialize_program(*mapped) == "and(attach(bed_7, left), align(wall_0))");
  const Scene empty = make_scene(rect_room(5, 3));
  CHECK_FALSE(remap_references(p, source, empty));
}

TEST_CASE("self-training iteration") {
  Fixture f;
  REQUIRE(f.dataset.entries.size() > 20);
  RetrievalProposer proposer;
  proposer.retrain(f.dataset, f.corpus);
  const ConstantScorer scorer(0.9);
  BootstrapConfig cfg;
  cfg.n_proposals = 4;
  cfg.n_relax = 4;

  SUBCASE("empty subset only bumps the counter") {
    cfg.subset_fraction = 0.0;
    const auto next = run_iteration(f.dataset, f.corpus, proposer, scorer, cfg, 3);
    CHECK(next.iteration == f.dataset.iteration + 1);
    REQUIRE(next.entries.size() == f.dataset.entries.size());
    for (std::size_t i = 0; i < next.entries.size(); ++i) {
      CHECK(next.entries[i].program == f.dataset.entries[i].program);
      CHECK(next.entries[i].provenance == f.dataset.entries[i].provenance);
    }
  }
  SUBCASE("deterministic, valid, and never shrinks an edited mask") {
    cfg.subset_fraction = 0.5;
    RetrievalProposer other = proposer;
    const auto a = run_iteration(f.dataset, f.corpus, proposer, scorer, cfg, 7, &f.truth, 1);
    const auto b = run_iteration(f.dataset, f.corpus, other, scorer, cfg, 7, &f.truth, 4);
    REQUIRE(a.entries.size() == b.entries.size());
    int edited = 0;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].program == b.entries[i].program);
      const auto& e = a.entries[i];
      const ExecutionContext ctx = entry_context(f.corpus, e, cfg.executor);
      CHECK_NOTHROW(validate_against_scene(e.program, ctx.scene()));
      const PlacementMask m = execute_program(e.program, ctx);
      CHECK_FALSE(m.empty());
      if (e.provenance != f.dataset.entries[i].provenance) {
        ++edited;
        // A constant score above threshold lets the largest candidate win per orientation,
        // and the original is always a candidate.
        const PlacementMask before = execute_program(f.dataset.entries[i].program, ctx);
        for (int o = 0; o < 4; ++o) {
          const Orientation ori = orientation_from_index(o);
          if (before.count(ori) > 0 && before.nonempty_orientations() == 1) CHECK(m.count(ori) >= before.count(ori));
        }
      }
    }
    CHECK(edited > 0);
    REQUIRE(a.history.size() == 1);
    CHECK(a.history[0].edited == static_cast<int>(std::llround(0.5 * a.entries.size())));
    CHECK(a.history[0].recall > 0.0);
  }
  SUBCASE("a failing scorer leaves the dataset untouched") {
    const fs::path dir = fs::temp_directory_path() / "placeprog_bootstrap_atomic";
    save_dataset(f.dataset, dir);
    const std::string before = read_text_file(dir / "manifest.json");
    ProgramDataset copy = f.dataset;
    cfg.subset_fraction = 1.0;
    CHECK_THROWS_AS(run_iteration(copy, f.corpus, proposer, Throwing{}, cfg, 1), Error);
    CHECK(copy.iteration == f.dataset.iteration);
    CHECK(read_text_file(dir / "manifest.json") == before);
    fs::remove_all(dir);
  }
  SUBCASE("bad configs") {
    cfg.subset_fraction = 1.5;
    CHECK_THROWS_AS(run_iteration(f.dataset, f.corpus, proposer, scorer, cfg, 1), Error);
  }
}

TEST_CASE("datasets persist and metrics are perfect against themselves") {
  Fixture f;
  const fs::path dir = fs::temp_directory_path() / "placeprog_dataset_rt";
  fs::remove_all(dir);
  ProgramDataset d = f.dataset;
  d.iteration = 3;
  d.history.push_back({3, 0.9, 0.5, f1_score(0.9, 0.5), 10, 4, 2});
  save_dataset(d, dir);
  fs::create_directories(dir / "programs" / "stale");
  save_dataset(d, dir);
  CHECK_FALSE(fs::exists(dir / "programs" / "stale"));
  const auto back = load_dataset(dir);
  CHECK(back.iteration == 3);
  REQUIRE(back.entries.size() == d.entries.size());
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    CHECK(back.entries[i].scene_id == d.entries[i].scene_id);
    CHECK(back.entries[i].object_id == d.entries[i].object_id);
    CHECK(back.entries[i].program == d.entries[i].program);
  }
  REQUIRE(back.history.size() == 1);
  CHECK(snapshot_to_json(back.history[0]) == snapshot_to_json(d.history[0]));
  fs::remove_all(dir);

  TruthMasks self;
  for (const auto& e : d.entries) {
    self[{e.scene_id, e.object_id}] = collapse_orientations(execute_program(e.program, entry_context(f.corpus, e, {})));
  }
  const auto snap = evaluate_dataset(d, f.corpus, self, {}, 0);
  CHECK(snap.precision == doctest::Approx(1.0));
  CHECK(snap.recall == doctest::Approx(1.0));
  CHECK(snap.entries == static_cast<int>(d.entries.size()));
}
