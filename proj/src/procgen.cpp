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

#include "placeprog/procgen.hpp"

#include "placeprog/error.hpp"
#include "placeprog/extraction.hpp"
#include "placeprog/io.hpp"
#include "placeprog/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <regex>

namespace placeprog {

namespace fs = std::filesystem;

namespace {

const std::regex kPlaceholder(R"(\{([A-Za-z0-9_.-]+)\})");

std::vector<std::string> placeholders(const std::string& tmpl) {
  std::vector<std::string> out;
  for (std::sregex_iterator it(tmpl.begin(), tmpl.end(), kPlaceholder), end; it != end; ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

std::string substitute(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t last = 0;
  for (std::sregex_iterator it(tmpl.begin(), tmpl.end(), kPlaceholder), end; it != end; ++it) {
    out.append(tmpl, last, static_cast<std::size_t>(it->position()) - last);
    out += values.at((*it)[1].str());
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(tmpl, last);
  return out;
}

/// Instantiates a rule's program in `scene`, or returns an invalid program when a
/// referenced category has not been placed.
PlacementProgram instantiate(const GrammarRule& rule, const Scene& scene) {
  std::map<std::string, std::string> values;
  for (const auto& name : placeholders(rule.program)) {
    if (name == "wall") continue;
    auto it = std::find_if(scene.furniture().begin(), scene.furniture().end(),
                           [&](const ObjectInstance& o) { return o.category == name; });
    if (it == scene.furniture().end()) return {};
    values[name] = it->id;
  }
  if (!rule.over_walls) return parse_program(substitute(rule.program, values));
  std::vector<PlacementProgram> parts;
  for (const auto& w : scene.walls()) {
    values["wall"] = w.id;
    parts.push_back(parse_program(substitute(rule.program, values)));
  }
  return or_join(parts);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Grammar default_grammar() {
  Grammar g;
  g.rules = {
      {"bed", 1, 1, true, 1.4, 1.8, 2.0, 2.2, true, "and(attach({wall}, up), align({wall}))"},
      {"nightstand", 0, 2, false, 0.40, 0.55, 0.35, 0.45, false,
       "or(and(attach({bed}, left), align({bed})), and(attach({bed}, right), align({bed})))"},
      {"wardrobe", 0, 1, false, 1.0, 2.0, 0.55, 0.65, true, "and(attach({wall}, up), align({wall}))"},
      {"desk", 0, 1, false, 1.0, 1.4, 0.5, 0.7, true, "and(attach({wall}, up), align({wall}))"},
      {"chair", 0, 1, true, 0.45, 0.55, 0.45, 0.55, false, "and(attach({desk}, up), face({desk}))"},
      {"bench", 0, 1, true, 0.8, 1.2, 0.35, 0.45, false, "and(reachable_by_arm({bed}, up), align({bed}))"},
  };
  return g;
}

void validate_grammar(const Grammar& g) {
  std::vector<std::string> seen;
  for (const auto& r : g.rules) {
    const std::string where = "grammar rule '" + r.category + "': ";
    if (r.category.empty() || r.category == "wall") throw Error(ErrorKind::Config, where + "bad category");
    if (r.min_count < 0 || r.max_count < r.min_count) throw Error(ErrorKind::Config, where + "bad count range");
    if (!(r.min_width > 0 && r.max_width >= r.min_width && r.min_depth > 0 && r.max_depth >= r.min_depth)) {
      throw Error(ErrorKind::Config, where + "bad size range");
    }
    std::map<std::string, std::string> dummy;
    for (const auto& name : placeholders(r.program)) {
      if (name == "wall") {
        if (!r.over_walls) throw Error(ErrorKind::Config, where + "{wall} needs over_walls");
      } else if (std::find(seen.begin(), seen.end(), name) == seen.end()) {
        throw Error(ErrorKind::Config, where + "references '" + name + "' before any rule places it");
      }
      dummy[name] = name + "_0";
    }
    try {
      validate_program(parse_program(substitute(r.program, dummy)));
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, where + e.what());
    }
    seen.push_back(r.category);
  }
}

Grammar grammar_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Schema, "grammar must be a JSON list of rules");
  static const std::vector<std::string> kKeys = {"category", "count", "holds_humans", "width",
                                                 "depth",    "over_walls", "program"};
  Grammar g;
  try {
    for (const auto& rj : j) {
      for (const auto& [k, v] : rj.items()) {
        if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end()) {
          throw Error(ErrorKind::Schema, "unknown grammar key '" + k + "'");
        }
      }
      GrammarRule r;
      r.category = rj.at("category").get<std::string>();
      auto count = rj.at("count").get<std::array<int, 2>>();
      auto width = rj.at("width").get<std::array<double, 2>>();
      auto depth = rj.at("depth").get<std::array<double, 2>>();
      r.min_count = count[0];
      r.max_count = count[1];
      r.min_width = width[0];
      r.max_width = width[1];
      r.min_depth = depth[0];
      r.max_depth = depth[1];
      r.holds_humans = rj.value("holds_humans", false);
      r.over_walls = rj.value("over_walls", false);
      r.program = rj.at("program").get<std::string>();
      g.rules.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed grammar: ") + e.what());
  }
  validate_grammar(g);
  return g;
}

nlohmann::json grammar_to_json(const Grammar& g) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : g.rules) {
    out.push_back({{"category", r.category},
                   {"count", {r.min_count, r.max_count}},
                   {"holds_humans", r.holds_humans},
                   {"width", {r.min_width, r.max_width}},
                   {"depth", {r.min_depth, r.max_depth}},
                   {"over_walls", r.over_walls},
                   {"program", r.program}});
  }
  return out;
}

const TruthEntry* GeneratedScene::find(std::string_view object_id) const {
  for (const auto& t : truth) {
    if (t.object_id == object_id) return &t;
  }
  return nullptr;
}

GeneratedScene generate_scene(const Grammar& g, std::uint64_t seed, const ProcgenConfig& cfg, std::string id) {
  if (!(cfg.min_side > 0 && cfg.max_side >= cfg.min_side)) throw Error(ErrorKind::Config, "bad room side range");
  if (cfg.max_side > cfg.grid.w * cfg.grid.cell + 1e-9 || cfg.max_side > cfg.grid.h * cfg.grid.cell + 1e-9) {
    throw Error(ErrorKind::Config, "room sides exceed the grid extent");
  }
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < cfg.scene_retries; ++attempt) {
    const double w = uniform(rng, cfg.min_side, cfg.max_side);
    const double h = uniform(rng, cfg.min_side, cfg.max_side);
    Scene scene;
    scene.scene_type = cfg.scene_type;
    scene.room = {Vec2(0, 0), Vec2(w, 0), Vec2(w, h), Vec2(0, h)};
    scene.objects = derive_walls(scene.room);
    scene.grid = cfg.grid;
    scene.origin = scene.bounds().min();

    GeneratedScene out{id, {}, {}};
    std::map<std::string, int> counters;
    bool ok = true;
    for (const auto& rule : g.rules) {
      const int count = std::uniform_int_distribution<int>(rule.min_count, rule.max_count)(rng);
      for (int c = 0; c < count && ok; ++c) {
        PlacementProgram program = instantiate(rule, scene);
        if (!program.valid()) {
          ok = c >= rule.min_count;
          break;
        }
        bool placed = false;
        for (int t = 0; t < cfg.object_retries && !placed; ++t) {
          Query q{rule.category, Vec2(uniform(rng, rule.min_width, rule.max_width),
                                      uniform(rng, rule.min_depth, rule.max_depth)),
                  rule.holds_humans};
          ExecutionContext ctx(scene, q, cfg.executor);
          PlacementMask mask = execute_program(program, ctx);
          if (mask.empty()) continue;
          const Placement p = sample_placements(mask, 1, rng).front();
          ObjectInstance obj;
          obj.id = rule.category + "_" + std::to_string(counters[rule.category]++);
          obj.category = rule.category;
          obj.size = q.size;
          obj.position = scene.cell_center(p.cell);
          obj.orientation = p.orientation;
          obj.holds_humans = rule.holds_humans;
          scene.objects.push_back(obj);
          if (max_pairwise_overlap(scene) > cfg.max_scene_overlap) {
            scene.objects.pop_back();
            --counters[rule.category];
            continue;
          }
          out.truth.push_back({obj.id, program, std::move(mask)});
          placed = true;
        }
        if (!placed) {
          ok = c >= rule.min_count;
          break;
        }
      }
      if (!ok) break;
    }
    if (ok) {
      out.scene = std::move(scene);
      return out;
    }
  }
  throw Error(ErrorKind::Execution, "procgen: scene retry budget exhausted for " + id);
}

std::string scene_id_for(const ProcgenConfig& cfg, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%05d", index);
  return cfg.scene_type + buf;
}

std::vector<GeneratedScene> generate_dataset(const Grammar& g, int n, std::uint64_t seed, const ProcgenConfig& cfg,
                                             int threads) {
  if (n < 0) throw Error(ErrorKind::Config, "scene count must be non-negative");
  validate_grammar(g);
  std::vector<GeneratedScene> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = generate_scene(g, derive_seed(seed, i), cfg, scene_id_for(cfg, static_cast<int>(i)));
  });
  return out;
}

void write_generated(std::span<const GeneratedScene> scenes, const fs::path& dir) {
  for (const auto& gs : scenes) {
    write_json_file(dir / "scenes" / (gs.id + ".json"), scene_to_json(gs.scene));
    for (const auto& t : gs.truth) {
      const fs::path base = dir / "truth" / gs.id;
      write_text_file_atomic(base / (t.object_id + ".prog"), serialize_program(t.program) + "\n");
      write_text_file_atomic(base / (t.object_id + ".mask.json"), mask_to_json(t.mask).dump() + "\n");
    }
  }
}

std::vector<std::pair<std::string, Scene>> load_scene_dir(const fs::path& dir, const SceneOptions& opts) {
  const fs::path scenes_dir = fs::exists(dir / "scenes") ? dir / "scenes" : dir;
  if (!fs::is_directory(scenes_dir)) throw Error(ErrorKind::Io, "no scene directory at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(scenes_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, Scene>> out;
  for (const auto& f : files) {
    try {
      out.emplace_back(f.stem().string(), load_scene_file(f.string(), opts));
    } catch (const Error& e) {
      throw Error(e.kind(), f.filename().string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<GeneratedScene> load_generated(const fs::path& dir, const SceneOptions& opts) {
  std::vector<GeneratedScene> out;
  for (auto& [id, scene] : load_scene_dir(dir, opts)) {
    GeneratedScene gs{id, std::move(scene), {}};
    for (const auto& obj : gs.scene.furniture()) {
      const fs::path base = dir / "truth" / id;
      TruthEntry t;
      t.object_id = obj.id;
      t.program = parse_program(read_text_file(base / (obj.id + ".prog")));
      t.mask = mask_from_json(read_json_file(base / (obj.id + ".mask.json")));
      gs.truth.push_back(std::move(t));
    }
    out.push_back(std::move(gs));
  }
  return out;
}

std::vector<MaskExample> build_classifier_eval_set(std::span<const GeneratedScene> scenes, std::uint64_t seed,
                                                   const ExecutorConfig& exec, int deletion_tries) {
  std::vector<std::vector<MaskExample>> per_scene(scenes.size());
  parallel_for(scenes.size(), 1, [&](std::size_t i) {
    const GeneratedScene& gs = scenes[i];
    std::mt19937_64 rng(derive_seed(seed, i));
    const auto furn = gs.scene.furniture();
    for (std::size_t k = 0; k < furn.size(); ++k) {
      const ObjectInstance& obj = furn[k];
      const TruthEntry* truth = gs.find(obj.id);
      if (!truth) throw Error(ErrorKind::NotFound, "no ground truth for " + gs.id + "/" + obj.id);
      auto context = std::make_shared<const Scene>(gs.scene.prefix(k));
      const Query query{obj.category, obj.size, obj.holds_humans};
      per_scene[i].push_back({gs.id, obj.id, context, query, truth->program, truth->mask, true});
      PlacementProgram extracted;
      try {
        extracted = extract_initial_program(gs.scene, obj.id, {}, exec);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Unconstrained) continue;
        throw;
      }
      if (extracted.leaf_count() < 2) continue;
      ExecutionContext ctx(context, query, exec);
      for (int t = 0; t < deletion_tries; ++t) {
        PlacementProgram relaxed = relax_randomly(extracted, rng);
        PlacementMask m = execute_program(relaxed, ctx);
        if (!m.is_subset_of(truth->mask)) {
          per_scene[i].push_back({gs.id, obj.id, context, query, std::move(relaxed), std::move(m), false});
          break;
        }
      }
    }
  });
  std::vector<MaskExample> out;
  for (auto& v : per_scene) {
    for (auto& e : v) out.push_back(std::move(e));
  }
  return out;
}

}  // namespace placeprog
