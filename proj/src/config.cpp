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

#include "placeprog/config.hpp"

#include "placeprog/error.hpp"
#include "placeprog/io.hpp"

#include <cstdio>
#include <set>

namespace placeprog {

namespace {

/// Reads members of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorKind::Config, where() + "must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw Error(ErrorKind::Config, "unknown config key '" + path_ + "." + k + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::Config, where() + "bad value for '" + key + "'");
    }
  }
  const nlohmann::json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string path(const char* key) const { return path_ + "." + key; }

 private:
  std::string where() const { return "config '" + path_ + "': "; }
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_executor(Section& s, ExecutorConfig& e) {
  s.get("attach_band", e.attach_band);
  s.get("reach_low", e.reach_low);
  s.get("reach_high", e.reach_high);
  s.get("collision_threshold", e.collision_threshold);
  s.get("contact_tolerance", e.contact_tolerance);
}

nlohmann::json executor_json(const ExecutorConfig& e) {
  return {{"attach_band", e.attach_band},
          {"reach_low", e.reach_low},
          {"reach_high", e.reach_high},
          {"collision_threshold", e.collision_threshold},
          {"contact_tolerance", e.contact_tolerance}};
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::Config, msg);
}

}  // namespace

void RunConfig::sync() {
  scene.grid = grid;
  procgen.grid = grid;
  procgen.executor = executor;
  bootstrap.executor = executor;
  synthesis.executor = executor;
  bootstrap.threshold = classifier.threshold;
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.extraction = extraction;
  p.executor = executor;
  p.pairs = pairs;
  p.classifier = classifier;
  p.bootstrap = bootstrap;
  p.iterations = bootstrap_iterations;
  return p;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  {
    Section root(j, "config");
    if (auto* g = root.sub("grid")) {
      Section s(*g, root.path("grid"));
      s.get("w", c.grid.w);
      s.get("h", c.grid.h);
      s.get("cell", c.grid.cell);
    }
    if (auto* g = root.sub("scene")) {
      Section s(*g, root.path("scene"));
      s.get("max_side", c.scene.max_side);
      s.get("wall_thickness", c.scene.wall_thickness);
      s.get("vocabulary", c.scene.vocabulary);
    }
    if (auto* g = root.sub("executor")) {
      Section s(*g, root.path("executor"));
      read_executor(s, c.executor);
    }
    if (auto* g = root.sub("extraction")) {
      Section s(*g, root.path("extraction"));
      s.get("attach_dist", c.extraction.attach_dist);
      s.get("reach_low", c.extraction.reach_low);
      s.get("reach_high", c.extraction.reach_high);
      s.get("max_scene_overlap", c.extraction.max_scene_overlap);
    }
    if (auto* g = root.sub("classifier")) {
      Section s(*g, root.path("classifier"));
      s.get("threshold", c.classifier.threshold);
      s.get("held_out_fraction", c.classifier.held_out_fraction);
      s.get("per_category", c.classifier.per_category);
      s.get("epochs", c.classifier.logistic.epochs);
      s.get("learning_rate", c.classifier.logistic.learning_rate);
      s.get("l2", c.classifier.logistic.l2);
      s.get("positive_weight", c.classifier.logistic.positive_weight);
      s.get("negative_weight", c.classifier.logistic.negative_weight);
      if (auto* p = s.sub("pairs")) {
        Section ps(*p, s.path("pairs"));
        ps.get("n_pairs", c.pairs.n_pairs);
        ps.get("min_shift", c.pairs.min_shift);
        ps.get("max_shift", c.pairs.max_shift);
        ps.get("positive_fraction", c.pairs.positive_fraction);
        ps.get("min_weight", c.pairs.min_weight);
        ps.get("max_weight", c.pairs.max_weight);
      }
    }
    if (auto* g = root.sub("bootstrap")) {
      Section s(*g, root.path("bootstrap"));
      s.get("iterations", c.bootstrap_iterations);
      s.get("subset_fraction", c.bootstrap.subset_fraction);
      s.get("n_relax", c.bootstrap.n_relax);
      s.get("n_proposals", c.bootstrap.n_proposals);
      s.get("max_coverage", c.bootstrap.max_coverage);
      s.get("m_samples", c.bootstrap.m_samples);
      s.get("dilation_radius", c.bootstrap.dilation_radius);
    }
    if (auto* g = root.sub("procgen")) {
      Section s(*g, root.path("procgen"));
      s.get("scene_type", c.procgen.scene_type);
      s.get("min_side", c.procgen.min_side);
      s.get("max_side", c.procgen.max_side);
      s.get("object_retries", c.procgen.object_retries);
      s.get("scene_retries", c.procgen.scene_retries);
      s.get("max_scene_overlap", c.procgen.max_scene_overlap);
    }
    if (auto* g = root.sub("evaluation")) {
      Section s(*g, root.path("evaluation"));
      s.get("dilation_radius", c.evaluation.dilation_radius);
      s.get("consistency_repeats", c.evaluation.consistency_repeats);
      s.get("sca_seeds", c.evaluation.sca_seeds);
      s.get("sparsity_fractions", c.evaluation.sparsity_fractions);
      s.get("sparsity_seeds", c.evaluation.sparsity_seeds);
      s.get("max_cases", c.evaluation.max_cases);
    }
    if (auto* g = root.sub("synthesis")) {
      Section s(*g, root.path("synthesis"));
      s.get("max_objects", c.synthesis.max_objects);
      s.get("n_proposals", c.synthesis.n_proposals);
      s.get("category_retries", c.synthesis.category_retries);
      s.get("m_samples", c.synthesis.m_samples);
    }
  }
  c.sync();
  validate_run_config(c);
  return c;
}

nlohmann::json read_config_document(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
}

RunConfig load_run_config(const std::string& path) { return run_config_from_json(read_config_document(path)); }

void apply_config_override(nlohmann::json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorKind::Config, "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  // Bare words that are not JSON are taken as strings.
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (!doc.is_object()) doc = nlohmann::json::object();
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorKind::Config, "override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    nlohmann::json& next = (*node)[part];
    if (next.is_null()) next = nlohmann::json::object();
    if (!next.is_object()) throw Error(ErrorKind::Config, "override key '" + key + "' descends into a non-object");
    node = &next;
    start = dot + 1;
  }
}

void validate_run_config(const RunConfig& c) {
  require(c.grid.w > 0 && c.grid.h > 0 && c.grid.cell > 0, "grid dimensions must be positive");
  try {
    validate_executor_config(c.executor);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  require(c.extraction.attach_dist >= 0 && c.extraction.reach_low <= c.extraction.reach_high, "bad extraction bands");
  require(c.classifier.threshold >= 0 && c.classifier.threshold <= 1, "classifier threshold must lie in [0, 1]");
  require(c.classifier.logistic.epochs > 0 && c.classifier.logistic.l2 >= 0, "bad logistic settings");
  require(c.pairs.n_pairs > 0 && c.pairs.min_shift > 0 && c.pairs.max_shift >= c.pairs.min_shift,
          "bad training pair settings");
  require(c.bootstrap.subset_fraction >= 0 && c.bootstrap.subset_fraction <= 1, "subset_fraction must lie in [0, 1]");
  require(c.bootstrap.max_coverage > 0 && c.bootstrap.max_coverage <= 1, "max_coverage must lie in (0, 1]");
  require(c.bootstrap.m_samples > 0 && c.bootstrap.n_relax >= 0 && c.bootstrap.n_proposals >= 0,
          "bad bootstrap counts");
  require(c.bootstrap_iterations >= 0, "iterations must be non-negative");
  require(c.procgen.min_side > 0 && c.procgen.max_side >= c.procgen.min_side, "bad procgen room sides");
  require(c.evaluation.dilation_radius >= 0 && c.evaluation.consistency_repeats > 0, "bad evaluation settings");
  for (double f : c.evaluation.sparsity_fractions) require(f > 0 && f <= 1, "sparsity fractions must lie in (0, 1]");
  require(c.synthesis.max_objects >= 0 && c.synthesis.m_samples > 0, "bad synthesis settings");
}

nlohmann::json RunConfig::to_json() const {
  return {
      {"grid", {{"w", grid.w}, {"h", grid.h}, {"cell", grid.cell}}},
      {"scene", {{"max_side", scene.max_side}, {"wall_thickness", scene.wall_thickness}, {"vocabulary", scene.vocabulary}}},
      {"executor", executor_json(executor)},
      {"extraction",
       {{"attach_dist", extraction.attach_dist},
        {"reach_low", extraction.reach_low},
        {"reach_high", extraction.reach_high},
        {"max_scene_overlap", extraction.max_scene_overlap}}},
      {"classifier",
       {{"threshold", classifier.threshold},
        {"held_out_fraction", classifier.held_out_fraction},
        {"per_category", classifier.per_category},
        {"epochs", classifier.logistic.epochs},
        {"learning_rate", classifier.logistic.learning_rate},
        {"l2", classifier.logistic.l2},
        {"positive_weight", classifier.logistic.positive_weight},
        {"negative_weight", classifier.logistic.negative_weight},
        {"pairs",
         {{"n_pairs", pairs.n_pairs},
          {"min_shift", pairs.min_shift},
          {"max_shift", pairs.max_shift},
          {"positive_fraction", pairs.positive_fraction},
          {"min_weight", pairs.min_weight},
          {"max_weight", pairs.max_weight}}}}},
      {"bootstrap",
       {{"iterations", bootstrap_iterations},
        {"subset_fraction", bootstrap.subset_fraction},
        {"n_relax", bootstrap.n_relax},
        {"n_proposals", bootstrap.n_proposals},
        {"max_coverage", bootstrap.max_coverage},
        {"m_samples", bootstrap.m_samples},
        {"dilation_radius", bootstrap.dilation_radius}}},
      {"procgen",
       {{"scene_type", procgen.scene_type},
        {"min_side", procgen.min_side},
        {"max_side", procgen.max_side},
        {"object_retries", procgen.object_retries},
        {"scene_retries", procgen.scene_retries},
        {"max_scene_overlap", procgen.max_scene_overlap}}},
      {"evaluation",
       {{"dilation_radius", evaluation.dilation_radius},
        {"consistency_repeats", evaluation.consistency_repeats},
        {"sca_seeds", evaluation.sca_seeds},
        {"sparsity_fractions", evaluation.sparsity_fractions},
        {"sparsity_seeds", evaluation.sparsity_seeds},
        {"max_cases", evaluation.max_cases}}},
      {"synthesis",
       {{"max_objects", synthesis.max_objects},
        {"n_proposals", synthesis.n_proposals},
        {"category_retries", synthesis.category_retries},
        {"m_samples", synthesis.m_samples}}},
  };
}

std::string RunConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace placeprog
