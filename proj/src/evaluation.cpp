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

#include "placeprog/evaluation.hpp"

#include "placeprog/error.hpp"
#include "placeprog/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace placeprog {

namespace {

void check_grid(const BitGrid& pred, const BitGrid& truth, const std::string& id) {
  if (pred.width() != truth.width() || pred.height() != truth.height()) {
    throw Error(ErrorKind::Validation, "case '" + id + "': prediction grid " + std::to_string(pred.width()) + "x" +
                                           std::to_string(pred.height()) + " does not match truth " +
                                           std::to_string(truth.width()) + "x" + std::to_string(truth.height()));
  }
}

void aggregate(EvalReport& r) {
  r.precision = r.recall = r.f1 = 0.0;
  for (const auto& m : r.cases) {
    r.precision += m.precision;
    r.recall += m.recall;
    r.f1 += m.f1;
  }
  if (!r.cases.empty()) {
    const auto n = static_cast<double>(r.cases.size());
    r.precision /= n;
    r.recall /= n;
    r.f1 /= n;
  }
}

}  // namespace

std::vector<EvalCase> oracle_cases(std::span<const GeneratedScene> scenes, std::size_t max_cases) {
  std::vector<EvalCase> out;
  for (const auto& gs : scenes) {
    const auto furn = gs.scene.furniture();
    for (std::size_t k = 0; k < furn.size(); ++k) {
      if (max_cases && out.size() >= max_cases) return out;
      const TruthEntry* t = gs.find(furn[k].id);
      if (!t) throw Error(ErrorKind::NotFound, "no ground truth for " + gs.id + "/" + furn[k].id);
      out.push_back({gs.id + "/" + furn[k].id, std::make_shared<const Scene>(gs.scene.prefix(k)),
                     Query{furn[k].category, furn[k].size, furn[k].holds_humans}, collapse_orientations(t->mask),
                     "oracle"});
    }
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    per.push_back({{"case", case_ids[i]}, {"precision", cases[i].precision}, {"recall", cases[i].recall},
                   {"f1", cases[i].f1}});
  }
  nlohmann::json j = {{"tag", tag},
                      {"config", {{"dilation_radius", dilation_radius}}},
                      {"mean", {{"precision", precision}, {"recall", recall}, {"f1", f1}}},
                      {"cases", per}};
  if (threshold >= 0.0) j["config"]["threshold"] = threshold;
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "case,precision,recall,f1\n";
  for (std::size_t i = 0; i < cases.size(); ++i) {
    os << case_ids[i] << ',' << cases[i].precision << ',' << cases[i].recall << ',' << cases[i].f1 << '\n';
  }
  return os.str();
}

EvalReport eval_location_distribution(std::span<const EvalCase> cases, const MaskPredictor& predict,
                                      int dilation_radius, std::string tag, int threads) {
  EvalReport r;
  r.tag = std::move(tag);
  r.dilation_radius = dilation_radius;
  r.cases.resize(cases.size());
  r.case_ids.resize(cases.size());
  parallel_for(cases.size(), threads, [&](std::size_t i) {
    const BitGrid pred = collapse_orientations(predict(cases[i]));
    check_grid(pred, cases[i].truth, cases[i].id);
    r.cases[i] = compare_masks(pred, cases[i].truth, dilation_radius);
    r.case_ids[i] = cases[i].id;
  });
  aggregate(r);
  return r;
}

EvalReport eval_scalar_location_distribution(std::span<const EvalCase> fit_cases, std::span<const EvalCase> cases,
                                             const ScalarPredictor& predict, int dilation_radius, std::string tag) {
  if (fit_cases.empty()) throw Error(ErrorKind::Precondition, "threshold fitting needs at least one case");
  std::vector<ScoreGrid> scores;
  std::vector<BitGrid> truths;
  for (const auto& c : fit_cases) {
    scores.push_back(predict(c));
    truths.push_back(c.truth);
  }
  EvalReport r;
  r.tag = std::move(tag);
  r.dilation_radius = dilation_radius;
  r.threshold = fit_binarization_threshold(scores, truths);
  for (const auto& c : cases) {
    const BitGrid pred = threshold_scores(predict(c), r.threshold);
    check_grid(pred, c.truth, c.id);
    r.cases.push_back(compare_masks(pred, c.truth, dilation_radius));
    r.case_ids.push_back(c.id);
  }
  aggregate(r);
  return r;
}

double category_kl(std::span<const Scene> generated, std::span<const Scene> reference, double epsilon) {
  if (generated.empty() || reference.empty()) throw Error(ErrorKind::Precondition, "category_kl needs two nonempty scene sets");
  std::map<std::string, std::pair<double, double>> counts;  // (reference, generated)
  double n_ref = 0.0, n_gen = 0.0;
  for (const auto& s : reference) {
    for (const auto& o : s.furniture()) {
      counts[o.category].first += 1.0;
      n_ref += 1.0;
    }
  }
  for (const auto& s : generated) {
    for (const auto& o : s.furniture()) {
      counts[o.category].second += 1.0;
      n_gen += 1.0;
    }
  }
  if (counts.empty()) return 0.0;
  const double k = static_cast<double>(counts.size());
  double kl = 0.0;
  for (const auto& [cat, c] : counts) {
    const double p = (c.first + epsilon) / (n_ref + k * epsilon);
    const double q = (c.second + epsilon) / (n_gen + k * epsilon);
    kl += p * std::log(p / q);
  }
  return std::max(kl, 0.0);
}

Eigen::VectorXd scene_features(const Scene& s, const std::vector<std::string>& vocabulary) {
  const auto furn = s.furniture();
  const auto walls = s.walls();
  const std::size_t nv = vocabulary.size();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv + 13));
  for (const auto& o : furn) {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), o.category);
    if (it != vocabulary.end()) f[it - vocabulary.begin()] += 1.0;
  }
  auto at = [&](int k) -> double& { return f[static_cast<Eigen::Index>(nv) + k]; };
  const Box room = s.bounds();
  const Vec2 ext = room.sizes();
  at(0) = static_cast<double>(furn.size());
  at(1) = ext.x() * ext.y();
  at(2) = std::min(ext.x(), ext.y()) / std::max(ext.x(), ext.y());
  double area = 0.0, wall_contact = 0.0, wall_aligned = 0.0, centrality = 0.0;
  for (const auto& o : furn) {
    const Box b = footprint_box(o);
    area += b.volume();
    double nearest = std::numeric_limits<double>::infinity();
    const ObjectInstance* near_wall = nullptr;
    for (const auto& w : walls) {
      const double d = box_distance(footprint_box(w), b);
      if (d < nearest) {
        nearest = d;
        near_wall = &w;
      }
    }
    wall_contact += nearest <= 0.15;
    wall_aligned += near_wall && near_wall->orientation == o.orientation;
    centrality += (o.position - room.center()).cwiseQuotient(ext).norm();
  }
  const double n = std::max<double>(1.0, static_cast<double>(furn.size()));
  at(3) = area / std::max(1e-9, at(1));
  at(4) = wall_contact / n;
  at(5) = wall_aligned / n;
  at(6) = centrality / n;
  double pairs = 0.0;
  for (std::size_t i = 0; i < furn.size(); ++i) {
    for (std::size_t j = i + 1; j < furn.size(); ++j) {
      const Box a = footprint_box(furn[i]), b = footprint_box(furn[j]);
      const double d = box_distance(a, b);
      at(d <= 0.15 ? 7 : d <= 0.6 ? 8 : d <= 1.5 ? 9 : 10) += 1.0;
      at(11) += furn[i].orientation == furn[j].orientation;
      at(12) += intersection_area(a, b) / std::min(a.volume(), b.volume());
      pairs += 1.0;
    }
  }
  if (pairs > 0) {
    for (int k = 7; k <= 12; ++k) at(k) /= pairs;
  }
  return f;
}

double scene_classifier_accuracy(std::span<const Scene> generated, std::span<const Scene> real, std::uint64_t seed) {
  const double ng = static_cast<double>(generated.size()), nr = static_cast<double>(real.size());
  if (ng == 0 || nr == 0 || std::max(ng, nr) > 10.0 * std::min(ng, nr)) {
    throw Error(ErrorKind::Precondition, "scene classifier needs both sets with imbalance at most 10:1");
  }
  std::set<std::string> cats;
  for (auto set : {generated, real}) {
    for (const auto& s : set) {
      for (const auto& o : s.furniture()) cats.insert(o.category);
    }
  }
  const std::vector<std::string> vocab(cats.begin(), cats.end());
  // Stratified split: each side contributes the same fraction to training, so a class
  // imbalance between train and test never masquerades as signal.
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Eigen::VectorXd, double>> train, test;
  for (auto [set, label] : {std::pair{generated, 0.0}, std::pair{real, 1.0}}) {
    std::vector<std::pair<Eigen::VectorXd, double>> side;
    for (const auto& s : set) side.emplace_back(scene_features(s, vocab), label);
    std::shuffle(side.begin(), side.end(), rng);
    const std::size_t cut = side.size() * 7 / 10;
    if (cut == 0 || cut == side.size()) throw Error(ErrorKind::Precondition, "too few scenes for a held-out split");
    train.insert(train.end(), side.begin(), side.begin() + static_cast<std::ptrdiff_t>(cut));
    test.insert(test.end(), side.begin() + static_cast<std::ptrdiff_t>(cut), side.end());
  }
  const auto& rows = train;
  const std::size_t n_train = train.size();

  const Eigen::Index d = rows.front().first.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d), sd = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < n_train; ++i) mean += rows[i].first;
  mean /= static_cast<double>(n_train);
  for (std::size_t i = 0; i < n_train; ++i) sd += (rows[i].first - mean).cwiseAbs2();
  sd = (sd / static_cast<double>(n_train)).cwiseSqrt().cwiseMax(1e-9);
  auto design_row = [&](const Eigen::VectorXd& f) {
    Eigen::VectorXd x(d + 1);
    x[0] = 1.0;
    x.tail(d) = (f - mean).cwiseQuotient(sd);
    return x;
  };
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n_train), d + 1);
  Eigen::VectorXd y(x.rows()), w = Eigen::VectorXd::Ones(x.rows());
  for (std::size_t i = 0; i < n_train; ++i) {
    x.row(static_cast<Eigen::Index>(i)) = design_row(rows[i].first).transpose();
    y[static_cast<Eigen::Index>(i)] = rows[i].second;
  }
  LogisticConfig lc;
  lc.l2 = 1.0;
  const Eigen::VectorXd theta = fit_logistic(x, y, w, lc);
  int correct = 0;
  for (const auto& [f, label] : test) {
    const bool pred = sigmoid(theta.dot(design_row(f))) >= 0.5;
    correct += pred == (label > 0.5);
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

nlohmann::json ConsistencyReport::to_json() const {
  return {{"p_cons", p_cons}, {"n_cons", n_cons},     {"accuracy", accuracy}, {"tn", tn},
          {"fp", fp},         {"fn", fn},             {"tp", tp},             {"fp_rate", fp_rate},
          {"fn_rate", fn_rate}, {"positives", positives}, {"negatives", negatives}};
}

ConsistencyReport classifier_consistency(const PlacementScorer& scorer, std::span<const MaskExample> eval_set,
                                         int repeats, int m_samples, double threshold, std::uint64_t seed,
                                         const ExecutorConfig& exec, int threads) {
  if (eval_set.empty()) throw Error(ErrorKind::Precondition, "empty classifier eval set");
  if (repeats < 1) throw Error(ErrorKind::Config, "repeats must be positive");
  std::vector<int> accepted(eval_set.size());
  parallel_for(eval_set.size(), threads, [&](std::size_t i) {
    const MaskExample& e = eval_set[i];
    const ExecutionContext ctx(e.context, e.query, exec);
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t s = derive_seed(seed, i * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(r));
      accepted[i] += score_mask(e.mask, ctx, scorer, m_samples, s) >= threshold;
    }
  });
  ConsistencyReport rep;
  double tp = 0, fp = 0, tn = 0, fn = 0, p_ok = 0, n_ok = 0;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    const int yes = accepted[i], no = repeats - accepted[i];
    if (eval_set[i].positive) {
      ++rep.positives;
      tp += yes;
      fn += no;
      p_ok += yes > no;
    } else {
      ++rep.negatives;
      fp += yes;
      tn += no;
      n_ok += no > yes;
    }
  }
  const double total = tp + fp + tn + fn;
  rep.tp = tp / total;
  rep.fp = fp / total;
  rep.tn = tn / total;
  rep.fn = fn / total;
  rep.accuracy = (tp + tn) / total;
  rep.fp_rate = fp + tn > 0 ? fp / (fp + tn) : 0.0;
  rep.fn_rate = tp + fn > 0 ? fn / (tp + fn) : 0.0;
  rep.p_cons = rep.positives ? p_ok / rep.positives : 0.0;
  rep.n_cons = rep.negatives ? n_ok / rep.negatives : 0.0;
  return rep;
}

TruthMasks truth_masks(std::span<const GeneratedScene> scenes) {
  TruthMasks out;
  for (const auto& gs : scenes) {
    for (const auto& t : gs.truth) out[{gs.id, t.object_id}] = collapse_orientations(t.mask);
  }
  return out;
}

SceneCorpus make_corpus(std::span<const GeneratedScene> scenes) {
  SceneCorpus out;
  for (const auto& gs : scenes) out[gs.id] = std::make_shared<const Scene>(gs.scene);
  return out;
}

ClassifierModel train_scene_classifier(std::span<const Scene> scenes, const PairConfig& pairs,
                                       const ClassifierConfig& cfg, const ExecutorConfig& exec, std::uint64_t seed) {
  if (scenes.empty()) throw Error(ErrorKind::Precondition, "classifier training needs at least one scene");
  std::mt19937_64 rng(derive_seed(seed, 1));
  const auto examples = generate_training_pairs(scenes, pairs, rng);
  const FeatureSchema schema(furniture_vocabulary(scenes), feature_params(exec, scenes.front().grid));
  return train_classifier(examples, schema, cfg, derive_seed(seed, 2));
}

PipelineResult run_pipeline(std::span<const GeneratedScene> scenes, const PipelineConfig& cfg, std::uint64_t seed,
                            int threads) {
  if (scenes.empty()) throw Error(ErrorKind::Precondition, "pipeline needs at least one training scene");
  PipelineResult out;
  out.corpus = make_corpus(scenes);
  const TruthMasks truth = truth_masks(scenes);
  BootstrapConfig bcfg = cfg.bootstrap;
  bcfg.executor = cfg.executor;

  out.dataset = extract_dataset(out.corpus, cfg.extraction, cfg.executor, threads);
  out.initial = evaluate_dataset(out.dataset, out.corpus, truth, cfg.executor, bcfg.dilation_radius, threads);
  out.dataset.history.push_back(out.initial);

  std::vector<Scene> plain;
  for (const auto& gs : scenes) plain.push_back(gs.scene);
  out.model = train_scene_classifier(plain, cfg.pairs, cfg.classifier, cfg.executor, seed);

  out.proposer = std::make_shared<RetrievalProposer>();
  out.proposer->retrain(out.dataset, out.corpus);
  for (int k = 0; k < cfg.iterations; ++k) {
    out.dataset = run_iteration(out.dataset, out.corpus, *out.proposer, out.model, bcfg,
                                derive_seed(seed, 100 + static_cast<std::uint64_t>(k)), &truth, threads);
  }
  return out;
}

std::vector<GeneratedScene> subsample_scenes(std::span<const GeneratedScene> scenes, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorKind::Config, "fraction must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(scenes.size())));
  if (count == 0) throw Error(ErrorKind::Precondition, "fraction yields zero scenes");
  std::vector<std::size_t> idx(scenes.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (count < scenes.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<GeneratedScene> out;
  for (auto i : idx) out.push_back(scenes[i]);
  return out;
}

std::vector<SparsityRow> sparsity_sweep(std::span<const GeneratedScene> scenes, const std::vector<double>& fractions,
                                        const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg,
                                        int threads) {
  std::vector<SparsityRow> rows;
  for (double f : fractions) {
    for (auto seed : seeds) {
      const auto subset = subsample_scenes(scenes, f, seed);
      const PipelineResult r = run_pipeline(subset, cfg, seed, threads);
      const MetricsSnapshot& last = r.dataset.history.back();
      rows.push_back({f, seed, static_cast<int>(subset.size()), last.precision, last.recall, last.f1});
    }
  }
  return rows;
}

std::string sparsity_csv(const std::vector<SparsityRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "fraction,seed,scenes,precision,recall,f1\n";
  for (const auto& r : rows) {
    os << r.fraction << ',' << r.seed << ',' << r.scenes << ',' << r.precision << ',' << r.recall << ',' << r.f1 << '\n';
  }
  return os.str();
}

}  // namespace placeprog
