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
#include "placeprog/mask.hpp"
#include "placeprog/program.hpp"
#include "placeprog/scene.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace placeprog {

/// One grammar rule. `program` is a template: `{wall}` expands to every wall (the
/// instantiations are or-joined) when `over_walls` is set, and `{category}` names the
/// first already placed object of that category.
struct GrammarRule {
  std::string category;
  int min_count = 1;
  int max_count = 1;
  bool holds_humans = false;
  double min_width = 0.5, max_width = 0.5;
  double min_depth = 0.5, max_depth = 0.5;
  bool over_walls = false;
  std::string program;
};

struct Grammar {
  std::vector<GrammarRule> rules;
};

/// Bed on a wall, nightstands beside it, wardrobe on a wall, desk with a facing chair,
/// and a bench within arm's reach of the bed's foot.
Grammar default_grammar();
Grammar grammar_from_json(const nlohmann::json& j);
nlohmann::json grammar_to_json(const Grammar& g);
/// Checks counts, ranges, placeholder order and that every template parses.
void validate_grammar(const Grammar& g);

struct ProcgenConfig {
  std::string scene_type = "bedroom";
  double min_side = 3.0;
  double max_side = 6.2;
  int object_retries = 20;
  int scene_retries = 50;
  /// Same bound scene ingestion enforces, as a fraction of the smaller footprint.
  double max_scene_overlap = 0.20;
  GridSpec grid;
  ExecutorConfig executor;
};

struct TruthEntry {
  std::string object_id;
  PlacementProgram program;
  PlacementMask mask;
};

struct GeneratedScene {
  std::string id;
  Scene scene;
  /// In placement order, one per furniture object.
  std::vector<TruthEntry> truth;

  const TruthEntry* find(std::string_view object_id) const;
};

/// Throws Error(Execution) when the scene retry budget runs out.
GeneratedScene generate_scene(const Grammar& g, std::uint64_t seed, const ProcgenConfig& cfg, std::string id);
std::vector<GeneratedScene> generate_dataset(const Grammar& g, int n, std::uint64_t seed, const ProcgenConfig& cfg,
                                             int threads = 1);
std::string scene_id_for(const ProcgenConfig& cfg, int index);

/// Layout: scenes/<id>.json, truth/<id>/<object>.prog and <object>.mask.json.
void write_generated(std::span<const GeneratedScene> scenes, const std::filesystem::path& dir);
std::vector<GeneratedScene> load_generated(const std::filesystem::path& dir, const SceneOptions& opts = {});
/// Scenes only (no truth needed), sorted by id.
std::vector<std::pair<std::string, Scene>> load_scene_dir(const std::filesystem::path& dir,
                                                          const SceneOptions& opts = {});

/// A ground-truth or relaxed mask with the partial scene it was computed in.
struct MaskExample {
  std::string scene_id;
  std::string object_id;
  std::shared_ptr<const Scene> context;
  Query query;
  PlacementProgram program;
  PlacementMask mask;
  bool positive = true;
};

/// One positive (the ground-truth mask) per object; at most one negative per object, from
/// random constraint deletions on the object's extracted program whose mask reaches
/// outside the ground truth.
std::vector<MaskExample> build_classifier_eval_set(std::span<const GeneratedScene> scenes, std::uint64_t seed,
                                                   const ExecutorConfig& exec = {}, int deletion_tries = 8);

}  // namespace placeprog
