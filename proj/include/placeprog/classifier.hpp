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

#include <Eigen/Core>
#include <json.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace placeprog {

/// A query object at a concrete pose inside a partial scene, labeled real or fake.
struct LabeledPlacement {
  std::shared_ptr<const Scene> context;
  Query query;
  Vec2 position = Vec2::Zero();
  Orientation orientation = Orientation::N;
  bool real = true;
  double weight = 1.0;
  /// Translation (m) plus half a meter per quarter turn; 0 for positives.
  double perturbation = 0.0;
};

struct PairConfig {
  int n_pairs = 10000;
  double min_shift = 0.25;
  double max_shift = 2.0;
  double positive_fraction = 0.5;
  double min_weight = 0.5;
  double max_weight = 2.0;
};

/// Positives keep a random subset of a scene and one remaining object at its true pose;
/// negatives additionally perturb that object's location and/or orientation.
std::vector<LabeledPlacement> generate_training_pairs(std::span<const Scene> dataset, const PairConfig& cfg,
                                                      std::mt19937_64& rng);

/// Geometry thresholds the features are computed with.
struct FeatureParams {
  double attach_band = 0.15;
  double reach_low = 0.15;
  double reach_high = 0.60;
  double tolerance = 0.5 * 6.2 / 128.0;
  double collision_threshold = 0.10;
};

FeatureParams feature_params(const ExecutorConfig& exec, const GridSpec& grid);

/// Fixed-length relational features of a placement: a query-category one-hot, one block
/// per reference category (walls first), then global overlap and occupancy terms.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<std::string> furniture_categories, FeatureParams params = {});

  const std::vector<std::string>& reference_categories() const { return reference_categories_; }
  const std::vector<std::string>& query_categories() const { return query_categories_; }
  const FeatureParams& params() const { return params_; }
  int dimension() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  std::string hash() const;

  Eigen::VectorXd features(const Scene& context, const Query& query, const Vec2& position, Orientation o) const;

 private:
  std::vector<std::string> reference_categories_;
  std::vector<std::string> query_categories_;
  FeatureParams params_;
  std::vector<std::string> names_;
};

struct LogisticConfig {
  int epochs = 30;
  double learning_rate = 1.0;
  double l2 = 3.0;
  double positive_weight = 1.0;
  double negative_weight = 1.0;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Weighted, L2-regularized logistic regression by damped Newton steps.
/// Column 0 of `x` is treated as the unregularized bias.
Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             const LogisticConfig& cfg);

/// Probability that a placement is real.
class PlacementScorer {
 public:
  virtual ~PlacementScorer() = default;
  virtual double probability(const ExecutionContext& ctx, const Placement& p) const = 0;
};

class ConstantScorer : public PlacementScorer {
 public:
  explicit ConstantScorer(double p) : p_(p) {}
  double probability(const ExecutionContext&, const Placement&) const override { return p_; }

 private:
  double p_;
};

struct ClassifierMetrics {
  double accuracy = 0.0;
  double fp_rate = 0.0;  // false positives / held-out negatives
  double fn_rate = 0.0;  // false negatives / held-out positives
  int held_out = 0;
};

struct ClassifierConfig {
  LogisticConfig logistic;
  /// One weight vector per query category, or a single one shared by all categories.
  bool per_category = true;
  double threshold = 0.6;
  double held_out_fraction = 0.2;
};

/// Logistic real/fake model. The logit sums the shared weights (key "*") and the query
/// category's weights, whichever are present.
class ClassifierModel : public PlacementScorer {
 public:
  ClassifierModel() = default;
  ClassifierModel(FeatureSchema schema, std::map<std::string, Eigen::VectorXd> weights, double threshold);

  double probability(const ExecutionContext& ctx, const Placement& p) const override;
  double probability(const LabeledPlacement& example) const;
  double probability(const std::string& category, const Eigen::VectorXd& features) const;

  const FeatureSchema& schema() const { return schema_; }
  const std::map<std::string, Eigen::VectorXd>& weights() const { return weights_; }
  double threshold() const { return threshold_; }
  ClassifierMetrics metrics;

  nlohmann::json to_json() const;
  static ClassifierModel from_json(const nlohmann::json& j);

 private:
  FeatureSchema schema_;
  std::map<std::string, Eigen::VectorXd> weights_;
  double threshold_ = 0.6;
};

/// Trains on a seeded split and records held-out metrics. Throws Error(Precondition) on single-class input.
ClassifierModel train_classifier(std::span<const LabeledPlacement> pairs, const FeatureSchema& schema,
                                 const ClassifierConfig& cfg, std::uint64_t seed);

/// Mean real-probability over `m_samples` placements drawn from `mask`.
double score_mask(const PlacementMask& mask, const ExecutionContext& ctx, const PlacementScorer& scorer, int m_samples,
                  std::uint64_t seed);
double score_program(const PlacementProgram& p, const ExecutionContext& ctx, const PlacementScorer& scorer,
                     int m_samples, std::uint64_t seed);

/// Furniture categories seen in `scenes`, sorted.
std::vector<std::string> furniture_vocabulary(std::span<const Scene> scenes);

}  // namespace placeprog
