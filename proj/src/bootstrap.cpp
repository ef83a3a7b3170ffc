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
#include "placeprog/io.hpp"
#include "placeprog/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace placeprog {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Vec2 normalized(const Scene& s, const Vec2& p) {
  const Box b = s.bounds();
  const Vec2 ext = b.sizes().cwiseMax(1e-9);
  return (p - b.min()).cwiseQuotient(ext);
}

std::map<std::string, int> category_counts(const Scene& context) {
  std::map<std::string, int> out;
  for (const auto& o : context.furniture()) ++out[o.category];
  return out;
}

double count_distance(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
  double d = 0.0;
  auto ia = a.begin(), ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      d += ia++->second;
    } else if (ia == a.end() || ib->first < ia->first) {
      d += ib++->second;
    } else {
      d += std::abs(ia++->second - ib++->second);
    }
  }
  return d;
}

std::array<long, 4> slice_areas(const PlacementMask& m) {
  std::array<long, 4> a{};
  for (auto o : kOrientations) a[index(o)] = static_cast<long>(m.slice(o).count());
  return a;
}

}  // namespace

const DatasetEntry* ProgramDataset::find(const std::string& scene_id, const std::string& object_id) const {
  for (const auto& e : entries) {
    if (e.scene_id == scene_id && e.object_id == object_id) return &e;
  }
  return nullptr;
}

ExecutionContext entry_context(const SceneCorpus& corpus, const DatasetEntry& e, const ExecutorConfig& exec) {
  auto it = corpus.find(e.scene_id);
  if (it == corpus.end()) throw Error(ErrorKind::NotFound, "unknown scene '" + e.scene_id + "'");
  const ObservedPlacement obs = observe(*it->second, e.object_id);
  return ExecutionContext(std::make_shared<const Scene>(placement_context(*it->second, e.object_id)), obs.query, exec);
}

ProgramDataset extract_dataset(const SceneCorpus& corpus, const ExtractionConfig& cfg, const ExecutorConfig& exec,
                               int threads, ExtractionSummary* summary) {
  std::vector<std::pair<std::string, std::shared_ptr<const Scene>>> scenes(corpus.begin(), corpus.end());
  std::vector<std::vector<DatasetEntry>> per_scene(scenes.size());
  std::vector<ExtractionSummary> counts(scenes.size());
  parallel_for(scenes.size(), threads, [&](std::size_t i) {
    const auto& [id, scene] = scenes[i];
    if (max_pairwise_overlap(*scene) > cfg.max_scene_overlap) {
      counts[i].skipped_collisions = static_cast<int>(scene->furniture().size());
      return;
    }
    for (const auto& obj : scene->furniture()) {
      try {
        per_scene[i].push_back({id, obj.id, extract_initial_program(*scene, obj.id, cfg, exec), "initial"});
        ++counts[i].extracted;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Unconstrained) throw;
        ++counts[i].skipped_unconstrained;
      }
    }
  });
  ProgramDataset out;
  ExtractionSummary total;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    for (auto& e : per_scene[i]) out.entries.push_back(std::move(e));
    total.extracted += counts[i].extracted;
    total.skipped_unconstrained += counts[i].skipped_unconstrained;
    total.skipped_collisions += counts[i].skipped_collisions;
  }
  if (summary) *summary = total;
  return out;
}

std::optional<PlacementProgram> remap_references(const PlacementProgram& p, const Scene& source, const Scene& target) {
  std::vector<std::pair<std::string, std::string>> mapping;
  for (const auto& ref : p.references()) {
    const ObjectInstance* src = source.find(ref);
    if (!src) return std::nullopt;
    const Vec2 src_pos = normalized(source, src->position);
    const ObjectInstance* best = nullptr;
    double best_key = std::numeric_limits<double>::infinity();
    for (const auto& obj : target.objects) {
      if (obj.category != src->category) continue;
      double key = (normalized(target, obj.position) - src_pos).norm();
      // Walls match by facing first; furniture keeps its id when the target has it.
      if (src->is_wall && obj.orientation != src->orientation) key += 10.0;
      if (!src->is_wall && obj.id != src->id) key += 10.0;
      if (key < best_key) {
        best_key = key;
        best = &obj;
      }
    }
    if (!best) return std::nullopt;
    mapping.emplace_back(ref, best->id);
  }
  PlacementProgram out = rename_references(p, mapping);
  try {
    validate_against_scene(out, target);
  } catch (const Error&) {
    return std::nullopt;
  }
  return out;
}

void RetrievalProposer::retrain(const ProgramDataset& dataset, const SceneCorpus& corpus) {
  std::vector<Item> items;
  items.reserve(dataset.entries.size());
  for (const auto& e : dataset.entries) {
    auto it = corpus.find(e.scene_id);
    if (it == corpus.end()) throw Error(ErrorKind::NotFound, "unknown scene '" + e.scene_id + "'");
    const Scene context = placement_context(*it->second, e.object_id);
    const ObservedPlacement obs = observe(*it->second, e.object_id);
    items.push_back({e.scene_id, e.object_id, obs.query, context.bounds().sizes(), category_counts(context), it->second,
                     e.program});
  }
  items_ = std::move(items);
}

std::vector<PlacementProgram> RetrievalProposer::propose(const ProposalRequest& req, int k, std::mt19937_64&) const {
  if (!req.context) throw Error(ErrorKind::Precondition, "proposal request without a scene");
  const Vec2 extent = req.context->bounds().sizes();
  const auto counts = category_counts(*req.context);
  std::vector<std::pair<double, const Item*>> ranked;
  for (const auto& item : items_) {
    if (item.query.category != req.query.category) continue;
    if (item.scene_id == req.scene_id && item.object_id == req.object_id) continue;
    const double d = (item.query.size - req.query.size).lpNorm<1>() + 0.5 * (item.room_extent - extent).lpNorm<1>() +
                     0.25 * count_distance(item.counts, counts);
    ranked.emplace_back(d, &item);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return std::tie(a.second->scene_id, a.second->object_id) < std::tie(b.second->scene_id, b.second->object_id);
  });
  std::vector<PlacementProgram> out;
  std::set<std::string> seen;
  for (const auto& [d, item] : ranked) {
    if (static_cast<int>(out.size()) >= k) break;
    auto remapped = remap_references(item->program, *item->scene, *req.context);
    if (!remapped) continue;
    if (seen.insert(serialize_program(*remapped)).second) out.push_back(std::move(*remapped));
  }
  return out;
}

void PriorSampler::retrain(const ProgramDataset& dataset, const SceneCorpus&) {
  leaf_weights_.clear();
  int multi = 0;
  for (const auto& e : dataset.entries) {
    for (const auto& c : e.program.leaves()) leaf_weights_[{c.type, c.direction}] += 1.0;
    multi += e.program.leaf_count() >= 2;
  }
  two_leaf_fraction_ = dataset.entries.empty() ? 0.5 : static_cast<double>(multi) / dataset.entries.size();
}

std::vector<PlacementProgram> PriorSampler::propose(const ProposalRequest& req, int k, std::mt19937_64& rng) const {
  if (!req.context) throw Error(ErrorKind::Precondition, "proposal request without a scene");
  if (leaf_weights_.empty()) return {};
  std::vector<std::pair<ConstraintType, Direction>> kinds;
  std::vector<double> weights;
  for (const auto& [kd, w] : leaf_weights_) {
    kinds.push_back(kd);
    weights.push_back(w);
  }
  std::discrete_distribution<std::size_t> pick_kind(weights.begin(), weights.end());
  std::bernoulli_distribution two(two_leaf_fraction_);
  const auto& objs = req.context->objects;

  auto sample_leaf = [&]() -> std::optional<Constraint> {
    const auto [type, dir] = kinds[pick_kind(rng)];
    std::vector<const ObjectInstance*> refs;
    for (const auto& o : objs) {
      if (type != ConstraintType::ReachableByArm || o.holds_humans) refs.push_back(&o);
    }
    if (refs.empty()) return std::nullopt;
    const auto* ref = refs[std::uniform_int_distribution<std::size_t>(0, refs.size() - 1)(rng)];
    return Constraint{type, ref->id, dir};
  };

  std::vector<PlacementProgram> out;
  std::set<std::string> seen;
  for (int attempt = 0; attempt < 4 * k && static_cast<int>(out.size()) < k; ++attempt) {
    std::vector<PlacementProgram> leaves;
    const int n = two(rng) ? 2 : 1;
    for (int i = 0; i < n; ++i) {
      if (auto c = sample_leaf()) leaves.emplace_back(ProgramNode::leaf(*c));
    }
    if (leaves.empty()) continue;
    PlacementProgram p = and_join(leaves);
    if (seen.insert(serialize_program(p)).second) out.push_back(std::move(p));
  }
  return out;
}

const char* to_string(CandidateSource s) {
  switch (s) {
    case CandidateSource::Proposed: return "proposed";
    case CandidateSource::Relaxed: return "relaxed";
    case CandidateSource::Original: return "original";
    case CandidateSource::Subtree: return "subtree";
  }
  return "?";
}

int ScoredCandidate::orientation_count() const {
  return static_cast<int>(std::count_if(areas.begin(), areas.end(), [](long a) { return a > 0; }));
}

int ScoredCandidate::orientation() const {
  if (orientation_count() != 1) return -1;
  return static_cast<int>(std::find_if(areas.begin(), areas.end(), [](long a) { return a > 0; }) - areas.begin());
}

std::vector<Candidate> generate_candidates(const PlacementProgram& original, const std::vector<PlacementProgram>& proposals,
                                           int n_relax, std::mt19937_64& rng) {
  std::vector<Candidate> sources{{original, CandidateSource::Original}};
  for (const auto& p : proposals) sources.push_back({p, CandidateSource::Proposed});

  std::vector<Candidate> out;
  std::set<std::string> seen;
  auto add = [&](const PlacementProgram& p, CandidateSource s) {
    if (seen.insert(serialize_program(p)).second) out.push_back({p, s});
  };
  for (const auto& c : sources) add(c.program, c.source);
  for (const auto& c : sources) {
    if (c.program.leaf_count() < 2) continue;
    for (int r = 0; r < n_relax; ++r) add(relax_randomly(c.program, rng), CandidateSource::Relaxed);
  }
  return out;
}

std::vector<ScoredCandidate> filter_and_split(const std::vector<Candidate>& candidates, const ExecutionContext& ctx,
                                              double max_coverage) {
  const double free_cells = static_cast<double>(collapse_orientations(ctx.free_mask()).count());
  std::vector<ScoredCandidate> out;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_hash;

  auto covered_ok = [&](const PlacementMask& m) {
    return free_cells > 0 && static_cast<double>(collapse_orientations(m).count()) <= max_coverage * free_cells;
  };
  auto push = [&](ScoredCandidate sc) {
    const std::uint64_t h = sc.mask.hash();
    auto& bucket = by_hash[h];
    for (auto i : bucket) {
      if (out[i].mask == sc.mask) return;
    }
    bucket.push_back(out.size());
    out.push_back(std::move(sc));
  };

  for (const auto& c : candidates) {
    PlacementMask m = execute_program(c.program, ctx);
    if (m.empty() || !covered_ok(m)) continue;
    ScoredCandidate sc{c.program, std::move(m), 0.0, {}, c.source};
    sc.areas = slice_areas(sc.mask);
    if (sc.orientation_count() == 1) {
      push(std::move(sc));
      continue;
    }
    const auto subtrees = enumerate_subtrees(c.program);
    for (std::size_t i = 1; i < subtrees.size(); ++i) {
      PlacementMask sm = execute_program(subtrees[i], ctx);
      if (sm.empty() || !covered_ok(sm)) continue;
      ScoredCandidate sub{subtrees[i], std::move(sm), 0.0, {}, CandidateSource::Subtree};
      sub.areas = slice_areas(sub.mask);
      if (sub.orientation_count() == 1) push(std::move(sub));
    }
  }
  return out;
}

std::optional<PlacementProgram> combine(const std::vector<ScoredCandidate>& scored, double threshold) {
  std::array<const ScoredCandidate*, 4> best{};
  std::array<std::string, 4> best_text;
  for (const auto& c : scored) {
    const int o = c.orientation();
    if (o < 0 || c.score < threshold) continue;
    const std::string text = serialize_program(c.program);
    const ScoredCandidate* cur = best[static_cast<std::size_t>(o)];
    bool better = !cur;
    if (cur) {
      const long a = c.areas[static_cast<std::size_t>(o)], b = cur->areas[static_cast<std::size_t>(o)];
      better = a != b ? a > b : c.score != cur->score ? c.score > cur->score : text < best_text[static_cast<std::size_t>(o)];
    }
    if (better) {
      best[static_cast<std::size_t>(o)] = &c;
      best_text[static_cast<std::size_t>(o)] = text;
    }
  }
  std::vector<PlacementProgram> winners;
  for (const auto* c : best) {
    if (c) winners.push_back(c->program);
  }
  if (winners.empty()) return std::nullopt;
  return or_join(winners);
}

MetricsSnapshot evaluate_dataset(const ProgramDataset& dataset, const SceneCorpus& corpus, const TruthMasks& truth,
                                 const ExecutorConfig& exec, int dilation_radius, int threads) {
  const auto& entries = dataset.entries;
  std::vector<std::optional<MaskMetrics>> per(entries.size());
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    auto it = truth.find({entries[i].scene_id, entries[i].object_id});
    if (it == truth.end()) return;
    const ExecutionContext ctx = entry_context(corpus, entries[i], exec);
    per[i] = compare_masks(collapse_orientations(execute_program(entries[i].program, ctx)), it->second,
                           dilation_radius);
  });
  MetricsSnapshot s;
  s.iteration = dataset.iteration;
  int n = 0;
  for (const auto& m : per) {
    if (!m) continue;
    s.precision += m->precision;
    s.recall += m->recall;
    s.f1 += m->f1;
    ++n;
  }
  s.entries = n;
  if (n) {
    s.precision /= n;
    s.recall /= n;
    s.f1 /= n;
  }
  return s;
}

ProgramDataset run_iteration(const ProgramDataset& dataset, const SceneCorpus& corpus, Proposer& proposer,
                             const PlacementScorer& scorer, const BootstrapConfig& cfg, std::uint64_t seed,
                             const TruthMasks* truth, int threads) {
  if (!(cfg.subset_fraction >= 0.0 && cfg.subset_fraction <= 1.0)) {
    throw Error(ErrorKind::Config, "subset_fraction must lie in [0, 1]");
  }
  if (cfg.n_relax < 0 || cfg.n_proposals < 0 || cfg.m_samples < 1) throw Error(ErrorKind::Config, "bad bootstrap counts");

  const std::size_t n = dataset.entries.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 pick(seed);
  std::shuffle(order.begin(), order.end(), pick);
  order.resize(static_cast<std::size_t>(std::llround(cfg.subset_fraction * static_cast<double>(n))));
  std::sort(order.begin(), order.end());

  std::vector<std::optional<PlacementProgram>> results(order.size());
  parallel_for(order.size(), threads, [&](std::size_t i) {
    const std::size_t idx = order[i];
    const DatasetEntry& e = dataset.entries[idx];
    const ExecutionContext ctx = entry_context(corpus, e, cfg.executor);
    std::mt19937_64 rng(derive_seed(seed, idx));
    ProposalRequest req{&ctx.scene(), ctx.query(), e.scene_id, e.object_id};
    const auto proposals = proposer.propose(req, cfg.n_proposals, rng);
    const auto candidates = generate_candidates(e.program, proposals, cfg.n_relax, rng);
    auto scored = filter_and_split(candidates, ctx, cfg.max_coverage);
    const std::uint64_t entry_seed = derive_seed(seed ^ 0x5c0e5ULL, idx);
    for (auto& c : scored) {
      c.score = score_mask(c.mask, ctx, scorer, cfg.m_samples, derive_seed(entry_seed, fnv1a(serialize_program(c.program))));
    }
    results[i] = combine(scored, cfg.threshold);
  });

  ProgramDataset next = dataset;
  next.iteration = dataset.iteration + 1;
  int replaced = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!results[i]) continue;
    DatasetEntry& e = next.entries[order[i]];
    if (serialize_program(*results[i]) != serialize_program(e.program)) ++replaced;
    e.program = std::move(*results[i]);
    e.provenance = "combined@" + std::to_string(next.iteration);
  }
  MetricsSnapshot snap;
  if (truth) snap = evaluate_dataset(next, corpus, *truth, cfg.executor, cfg.dilation_radius, threads);
  snap.iteration = next.iteration;
  snap.edited = static_cast<int>(order.size());
  snap.replaced = replaced;
  next.history.push_back(snap);
  proposer.retrain(next, corpus);
  return next;
}

nlohmann::json snapshot_to_json(const MetricsSnapshot& s) {
  return {{"iteration", s.iteration}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"entries", s.entries},     {"edited", s.edited},       {"replaced", s.replaced}};
}

void save_dataset(const ProgramDataset& dataset, const fs::path& dir) {
  fs::path staging = dir;
  staging += ".staging";
  fs::remove_all(staging);
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : dataset.entries) {
    write_text_file_atomic(staging / "programs" / e.scene_id / (e.object_id + ".prog"), serialize_program(e.program) + "\n");
    entries.push_back({{"scene_id", e.scene_id}, {"object_id", e.object_id}, {"provenance", e.provenance}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& s : dataset.history) history.push_back(snapshot_to_json(s));
  write_json_file(staging / "manifest.json", {{"iteration", dataset.iteration}, {"entries", entries}, {"history", history}});

  fs::path old = dir;
  old += ".old";
  fs::remove_all(old);
  if (fs::exists(dir)) fs::rename(dir, old);
  fs::rename(staging, dir);
  fs::remove_all(old);
}

ProgramDataset load_dataset(const fs::path& dir) {
  const nlohmann::json m = read_json_file(dir / "manifest.json");
  ProgramDataset d;
  try {
    d.iteration = m.at("iteration").get<int>();
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& ej : m.at("entries")) {
      DatasetEntry e;
      e.scene_id = ej.at("scene_id").get<std::string>();
      e.object_id = ej.at("object_id").get<std::string>();
      e.provenance = ej.at("provenance").get<std::string>();
      if (!seen.insert({e.scene_id, e.object_id}).second) {
        throw Error(ErrorKind::Schema, "duplicate dataset entry " + e.scene_id + "/" + e.object_id);
      }
      e.program = parse_program(read_text_file(dir / "programs" / e.scene_id / (e.object_id + ".prog")));
      d.entries.push_back(std::move(e));
    }
    for (const auto& sj : m.value("history", nlohmann::json::array())) {
      MetricsSnapshot s;
      s.iteration = sj.at("iteration").get<int>();
      s.precision = sj.at("precision").get<double>();
      s.recall = sj.at("recall").get<double>();
      s.f1 = sj.at("f1").get<double>();
      s.entries = sj.at("entries").get<int>();
      s.edited = sj.at("edited").get<int>();
      s.replaced = sj.at("replaced").get<int>();
      d.history.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed dataset manifest: ") + e.what());
  }
  return d;
}

}  // namespace placeprog
