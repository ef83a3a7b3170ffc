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
#include "placeprog/extraction.hpp"
#include "placeprog/mask.hpp"
#include "placeprog/procgen.hpp"
#include "placeprog/scene.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace placeprog {

struct EvalCase {
  std::string id;
  std::shared_ptr<const Scene> context;
  Query query;
  BitGrid truth;
  /// "oracle" or "human".
  std::string provenance = "oracle";
};

/// One case per furniture object of each scene: the partial scene before it and its collapsed ground truth.
std::vector<EvalCase> oracle_cases(std::span<const GeneratedScene> scenes, std::size_t max_cases = 0);

struct EvalReport {
  std::string tag;
  int dilation_radius = 0;
  double threshold = -1.0;  // binarization threshold for scalar predictions, -1 otherwise
  std::vector<std::string> case_ids;
  std::vector<MaskMetrics> cases;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

using MaskPredictor = std::function<PlacementMask(const EvalCase&)>;
using ScalarPredictor = std::function<ScoreGrid(const EvalCase&)>;

/// Throws Error(Validation) when a prediction's grid does not match the case.
EvalReport eval_location_distribution(std::span<const EvalCase> cases, const MaskPredictor& predict,
                                      int dilation_radius, std::string tag = {}, int threads = 1);
/// Scalar predictions are binarized at the F1-maximizing threshold fit on `fit_cases`.
EvalReport eval_scalar_location_distribution(std::span<const EvalCase> fit_cases, std::span<const EvalCase> cases,
                                             const ScalarPredictor& predict, int dilation_radius, std::string tag = {});

/// KL(reference || generated) over smoothed category frequencies.
double category_kl(std::span<const Scene> generated, std::span<const Scene> reference, double epsilon = 1e-6);

/// Scene-level features: category counts, occupancy statistics, an adjacency histogram.
Eigen::VectorXd scene_features(const Scene& s, const std::vector<std::string>& vocabulary);

/// Held-out accuracy of a fresh logistic real/fake scene classifier, in [0, 1].
/// Throws Error(Precondition) when one side outnumbers the other more than 10:1.
double scene_classifier_accuracy(std::span<const Scene> generated, std::span<const Scene> real, std::uint64_t seed);

struct ConsistencyReport {
  double p_cons = 0.0;
  double n_cons = 0.0;
  double accuracy = 0.0;
  /// Fractions of all decisions, as in a confusion table summing to one.
  double tn = 0.0, fp = 0.0, fn = 0.0, tp = 0.0;
  /// False positives over negative decisions.
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  int positives = 0;
  int negatives = 0;

  nlohmann::json to_json() const;
};

/// Scores every mask `repeats` times with fresh samples. A mask is consistent when its
/// majority label is correct.
ConsistencyReport classifier_consistency(const PlacementScorer& scorer, std::span<const MaskExample> eval_set,
                                         int repeats, int m_samples, double threshold, std::uint64_t seed,
                                         const ExecutorConfig& exec = {}, int threads = 1);

/// Extraction, classifier training and bootstrap on one training scene set.
struct PipelineConfig {
  ExtractionConfig extraction;
  ExecutorConfig executor;
  PairConfig pairs;
  ClassifierConfig classifier;
  BootstrapConfig bootstrap;
  int iterations = 5;
};

struct PipelineResult {
  ProgramDataset dataset;
  MetricsSnapshot initial;
  ClassifierModel model;
  std::shared_ptr<RetrievalProposer> proposer;
  SceneCorpus corpus;
};

/// Training pairs from `scenes` and a classifier fit on them, both seeded from `seed`.
ClassifierModel train_scene_classifier(std::span<const Scene> scenes, const PairConfig& pairs,
                                       const ClassifierConfig& cfg, const ExecutorConfig& exec, std::uint64_t seed);

PipelineResult run_pipeline(std::span<const GeneratedScene> scenes, const PipelineConfig& cfg, std::uint64_t seed,
                            int threads = 1);

/// Scenes picked uniformly (seeded) at the given fraction, kept in input order.
std::vector<GeneratedScene> subsample_scenes(std::span<const GeneratedScene> scenes, double fraction, std::uint64_t seed);

struct SparsityRow {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  int scenes = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

std::vector<SparsityRow> sparsity_sweep(std::span<const GeneratedScene> scenes, const std::vector<double>& fractions,
                                        const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg,
                                        int threads = 1);
std::string sparsity_csv(const std::vector<SparsityRow>& rows);

TruthMasks truth_masks(std::span<const GeneratedScene> scenes);
SceneCorpus make_corpus(std::span<const GeneratedScene> scenes);

}  // namespace placeprog
