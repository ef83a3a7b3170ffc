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

#include "placeprog/bootstrap.hpp"
#include "placeprog/classifier.hpp"
#include "placeprog/executor.hpp"
#include "placeprog/scene.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace placeprog {

/// Next-category distribution conditioned on the current category counts, with a stop
/// symbol. Unseen count states fall back to the marginal.
class CategoryModel {
 public:
  static constexpr const char* kStop = "<stop>";

  void fit(std::span<const Scene> scenes);
  /// A category name or kStop.
  std::string sample(const Scene& partial, std::mt19937_64& rng) const;
  bool empty() const { return marginal_.empty(); }
  nlohmann::json to_json() const;
  static CategoryModel from_json(const nlohmann::json& j);

 private:
  static std::string key(const Scene& s);
  std::map<std::string, std::map<std::string, double>> conditional_;
  std::map<std::string, double> marginal_;
};

/// Uniform over the sizes observed per category.
class DimensionSampler {
 public:
  void fit(std::span<const Scene> scenes);
  /// Throws Error(NotFound) for a category never observed.
  Query sample(const std::string& category, std::mt19937_64& rng) const;
  nlohmann::json to_json() const;
  static DimensionSampler from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::vector<Vec2>> sizes_;
  std::map<std::string, bool> holds_humans_;
};

struct SynthesisConfig {
  int max_objects = 12;
  int n_proposals = 12;
  int category_retries = 5;
  int m_samples = 10;
  ExecutorConfig executor;
};

/// Everything step() needs; the proposer and scorer are borrowed.
struct SynthesisModel {
  CategoryModel categories;
  DimensionSampler dimensions;
  const Proposer* proposer = nullptr;
  const PlacementScorer* scorer = nullptr;
};

SynthesisModel fit_synthesis_model(std::span<const Scene> training, const Proposer& proposer,
                                   const PlacementScorer& scorer);

struct SelectedProgram {
  PlacementProgram program;
  PlacementMask mask;
  double score = 0.0;
};

/// Highest-scoring proposal with a nonempty mask; ties go to the smaller program text.
std::optional<SelectedProgram> select_program(const std::vector<PlacementProgram>& proposals,
                                              const ExecutionContext& ctx, const PlacementScorer& scorer, int m_samples,
                                              std::mt19937_64& rng);

struct StepResult {
  Scene scene;
  std::optional<ObjectInstance> placed;
  /// Program whose mask the placement was sampled from; invalid on stop.
  PlacementProgram program;
  double score = 0.0;
  bool stopped() const { return !placed.has_value(); }
};

/// Samples a category (or stop), dimensions and proposals, keeps the best-scoring
/// nonempty program and places the object at a sample of its mask.
StepResult step(const Scene& scene, const SynthesisModel& model, const SynthesisConfig& cfg, std::mt19937_64& rng);

Scene complete(const Scene& partial, const SynthesisModel& model, const SynthesisConfig& cfg, std::uint64_t seed);
/// Completion of an unfurnished room.
Scene synthesize(const Scene& floor_plan, const SynthesisModel& model, const SynthesisConfig& cfg, std::uint64_t seed);

/// The room of `s` with walls only.
Scene floor_plan_of(const Scene& s);

/// A trained model directory as written by `bootstrap run`: scenes/, dataset/ and
/// classifier.json. The synthesis model borrows the proposer and classifier, so this
/// stays put behind a pointer.
struct TrainedModel {
  SceneCorpus corpus;
  ClassifierModel classifier;
  RetrievalProposer proposer;
  SynthesisModel synthesis;
};

/// Mask of the program select_program picks among the model's proposals; empty when
/// every proposal is empty.
PlacementMask predict_mask(const TrainedModel& model, const Scene& context, const Query& query,
                           const SynthesisConfig& cfg, std::uint64_t seed);

bool is_model_dir(const std::filesystem::path& dir);
std::unique_ptr<TrainedModel> load_trained_model(const std::filesystem::path& dir, const SceneOptions& opts = {});

}  // namespace placeprog
