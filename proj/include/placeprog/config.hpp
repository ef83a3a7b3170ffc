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
#include "placeprog/evaluation.hpp"
#include "placeprog/executor.hpp"
#include "placeprog/extraction.hpp"
#include "placeprog/procgen.hpp"
#include "placeprog/scene.hpp"
#include "placeprog/synthesis.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace placeprog {

struct EvaluationConfig {
  int dilation_radius = 2;
  int consistency_repeats = 5;
  int sca_seeds = 5;
  std::vector<double> sparsity_fractions = {1.0, 0.5, 0.25, 0.1, 0.05};
  int sparsity_seeds = 3;
  std::size_t max_cases = 100;
};

/// Every module default in one document. Unknown keys anywhere are an error.
struct RunConfig {
  GridSpec grid;
  SceneOptions scene;
  ExecutorConfig executor;
  ExtractionConfig extraction;
  PairConfig pairs;
  ClassifierConfig classifier;
  BootstrapConfig bootstrap;
  int bootstrap_iterations = 5;
  ProcgenConfig procgen;
  EvaluationConfig evaluation;
  SynthesisConfig synthesis;

  /// Sub-configs that repeat the grid or executor settings are kept in sync with them.
  void sync();
  PipelineConfig pipeline() const;
  nlohmann::json to_json() const;
  std::string hash() const;
};

/// Missing keys keep their defaults. Throws Error(Config) on unknown keys or bad values.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json read_config_document(const std::string& path);
/// Applies `a.b.c=value` to a config document. The value is parsed as JSON when it can be,
/// otherwise kept as a string.
void apply_config_override(nlohmann::json& doc, std::string_view assignment);
void validate_run_config(const RunConfig& c);

}  // namespace placeprog
