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

#include "placeprog/synthesis.hpp"

#include "placeprog/error.hpp"
#include "placeprog/io.hpp"
#include "placeprog/procgen.hpp"

#include <algorithm>

namespace placeprog {

namespace fs = std::filesystem;

namespace {

std::string sample_from(const std::map<std::string, double>& dist, std::mt19937_64& rng) {
  std::vector<double> w;
  for (const auto& [k, v] : dist) w.push_back(v);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  return std::next(dist.begin(), static_cast<std::ptrdiff_t>(pick(rng)))->first;
}

nlohmann::json dist_json(const std::map<std::string, double>& d) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : d) j[k] = v;
  return j;
}

}  // namespace

std::string CategoryModel::key(const Scene& s) {
  std::map<std::string, int> counts;
  for (const auto& o : s.furniture()) ++counts[o.category];
  std::string k;
  for (const auto& [c, n] : counts) k += c + "=" + std::to_string(n) + ";";
  return k;
}

void CategoryModel::fit(std::span<const Scene> scenes) {
  conditional_.clear();
  marginal_.clear();
  for (const auto& s : scenes) {
    Scene partial = s.prefix(0);
    for (const auto& o : s.furniture()) {
      conditional_[key(partial)][o.category] += 1.0;
      marginal_[o.category] += 1.0;
      partial.objects.push_back(o);
    }
    conditional_[key(partial)][kStop] += 1.0;
    marginal_[kStop] += 1.0;
  }
}

std::string CategoryModel::sample(const Scene& partial, std::mt19937_64& rng) const {
  if (marginal_.empty()) throw Error(ErrorKind::Precondition, "category model is not fitted");
  auto it = conditional_.find(key(partial));
  return sample_from(it != conditional_.end() ? it->second : marginal_, rng);
}

nlohmann::json CategoryModel::to_json() const {
  nlohmann::json cond = nlohmann::json::object();
  for (const auto& [k, d] : conditional_) cond[k] = dist_json(d);
  return {{"conditional", cond}, {"marginal", dist_json(marginal_)}};
}

CategoryModel CategoryModel::from_json(const nlohmann::json& j) {
  CategoryModel m;
  try {
    for (const auto& [k, d] : j.at("conditional").items()) {
      for (const auto& [c, v] : d.items()) m.conditional_[k][c] = v.get<double>();
    }
    for (const auto& [c, v] : j.at("marginal").items()) m.marginal_[c] = v.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed category model: ") + e.what());
  }
  return m;
}

void DimensionSampler::fit(std::span<const Scene> scenes) {
  sizes_.clear();
  holds_humans_.clear();
  for (const auto& s : scenes) {
    for (const auto& o : s.furniture()) {
      sizes_[o.category].push_back(o.size);
      holds_humans_[o.category] = holds_humans_[o.category] || o.holds_humans;
    }
  }
}

Query DimensionSampler::sample(const std::string& category, std::mt19937_64& rng) const {
  auto it = sizes_.find(category);
  if (it == sizes_.end() || it->second.empty()) throw Error(ErrorKind::NotFound, "no sizes observed for '" + category + "'");
  const auto& v = it->second;
  return {category, v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)], holds_humans_.at(category)};
}

nlohmann::json DimensionSampler::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [c, v] : sizes_) {
    nlohmann::json sizes = nlohmann::json::array();
    for (const auto& s : v) sizes.push_back({s.x(), s.y()});
    j[c] = {{"holds_humans", holds_humans_.at(c)}, {"sizes", sizes}};
  }
  return j;
}

DimensionSampler DimensionSampler::from_json(const nlohmann::json& j) {
  DimensionSampler d;
  try {
    for (const auto& [c, cj] : j.items()) {
      d.holds_humans_[c] = cj.at("holds_humans").get<bool>();
      for (const auto& s : cj.at("sizes")) d.sizes_[c].emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed dimension sampler: ") + e.what());
  }
  return d;
}

SynthesisModel fit_synthesis_model(std::span<const Scene> training, const Proposer& proposer,
                                   const PlacementScorer& scorer) {
  SynthesisModel m;
  m.categories.fit(training);
  m.dimensions.fit(training);
  m.proposer = &proposer;
  m.scorer = &scorer;
  return m;
}

std::optional<SelectedProgram> select_program(const std::vector<PlacementProgram>& proposals,
                                              const ExecutionContext& ctx, const PlacementScorer& scorer, int m_samples,
                                              std::mt19937_64& rng) {
  std::optional<SelectedProgram> best;
  std::string best_text;
  for (const auto& p : proposals) {
    PlacementMask m = execute_program(p, ctx);
    if (m.empty()) continue;
    const double s = score_mask(m, ctx, scorer, m_samples, rng());
    std::string text = serialize_program(p);
    if (!best || s > best->score || (s == best->score && text < best_text)) {
      best = SelectedProgram{p, std::move(m), s};
      best_text = std::move(text);
    }
  }
  return best;
}

StepResult step(const Scene& scene, const SynthesisModel& model, const SynthesisConfig& cfg, std::mt19937_64& rng) {
  if (!model.proposer || !model.scorer) throw Error(ErrorKind::Precondition, "synthesis model needs a proposer and a scorer");
  StepResult out{scene, std::nullopt, {}, 0.0};
  if (static_cast<int>(scene.furniture().size()) >= cfg.max_objects) return out;
  for (int attempt = 0; attempt < cfg.category_retries; ++attempt) {
    const std::string category = model.categories.sample(scene, rng);
    if (category == CategoryModel::kStop) return out;
    const Query query = model.dimensions.sample(category, rng);
    const ExecutionContext ctx(scene, query, cfg.executor);
    const auto proposals = model.proposer->propose({&scene, query, "", ""}, cfg.n_proposals, rng);

    auto best = select_program(proposals, ctx, *model.scorer, cfg.m_samples, rng);
    if (!best) continue;

    const Placement p = sample_placements(best->mask, 1, rng).front();
    int n = 0;
    while (scene.find(category + "_" + std::to_string(n))) ++n;
    ObjectInstance obj;
    obj.id = category + "_" + std::to_string(n);
    obj.category = category;
    obj.size = query.size;
    obj.position = scene.cell_center(p.cell);
    obj.orientation = p.orientation;
    obj.holds_humans = query.holds_humans;
    out.scene.objects.push_back(obj);
    out.placed = obj;
    out.program = std::move(best->program);
    out.score = best->score;
    return out;
  }
  return out;
}

Scene complete(const Scene& partial, const SynthesisModel& model, const SynthesisConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Scene s = partial;
  while (static_cast<int>(s.furniture().size()) < cfg.max_objects) {
    StepResult r = step(s, model, cfg, rng);
    if (r.stopped()) break;
    s = std::move(r.scene);
  }
  return s;
}

Scene synthesize(const Scene& floor_plan, const SynthesisModel& model, const SynthesisConfig& cfg, std::uint64_t seed) {
  return complete(floor_plan_of(floor_plan), model, cfg, seed);
}

Scene floor_plan_of(const Scene& s) { return s.prefix(0); }

PlacementMask predict_mask(const TrainedModel& model, const Scene& context, const Query& query,
                           const SynthesisConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ExecutionContext ctx(context, query, cfg.executor);
  const auto proposals = model.proposer.propose({&context, query, "", ""}, cfg.n_proposals, rng);
  auto best = select_program(proposals, ctx, model.classifier, cfg.m_samples, rng);
  return best ? std::move(best->mask) : PlacementMask(context.grid);
}

bool is_model_dir(const fs::path& dir) {
  return fs::is_directory(dir / "scenes") && fs::exists(dir / "dataset" / "manifest.json") &&
         fs::exists(dir / "classifier.json");
}

std::unique_ptr<TrainedModel> load_trained_model(const fs::path& dir, const SceneOptions& opts) {
  if (!is_model_dir(dir)) {
    throw Error(ErrorKind::NotFound, dir.string() + " is not a model directory (scenes/, dataset/, classifier.json)");
  }
  auto m = std::make_unique<TrainedModel>();
  std::vector<Scene> training;
  for (auto& [id, scene] : load_scene_dir(dir, opts)) {
    training.push_back(scene);
    m->corpus[id] = std::make_shared<const Scene>(std::move(scene));
  }
  m->classifier = ClassifierModel::from_json(read_json_file(dir / "classifier.json"));
  m->proposer.retrain(load_dataset(dir / "dataset"), m->corpus);
  m->synthesis = fit_synthesis_model(training, m->proposer, m->classifier);
  return m;
}

}  // namespace placeprog
