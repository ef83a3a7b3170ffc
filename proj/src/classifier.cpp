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

#include "placeprog/classifier.hpp"

#include "placeprog/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <set>

namespace placeprog {

namespace {

constexpr std::array<Direction, 4> kSides = {Direction::Up, Direction::Down, Direction::Left, Direction::Right};
constexpr std::array<double, 3> kDistanceEdges = {0.15, 0.60, 1.50};
constexpr std::array<double, 3> kRingRadii = {0.5, 1.0, 1.5};
constexpr int kRingPoints = 16;
constexpr int kBlockSize = 17;

Vec2 snap(const Scene& s, const Vec2& p) {
  auto c = s.cell_of(p);
  return c ? s.cell_center(*c) : p;
}

bool box_inside_room(const Scene& s, const Box& b) {
  for (auto corner : {Box::BottomLeft, Box::BottomRight, Box::TopLeft, Box::TopRight}) {
    if (!s.contains_point(b.corner(corner))) return false;
  }
  return true;
}

}  // namespace

FeatureParams feature_params(const ExecutorConfig& exec, const GridSpec& grid) {
  return {exec.attach_band, exec.reach_low, exec.reach_high,
          exec.contact_tolerance >= 0.0 ? exec.contact_tolerance : 0.5 * grid.cell, exec.collision_threshold};
}

FeatureSchema::FeatureSchema(std::vector<std::string> furniture_categories, FeatureParams params) : params_(params) {
  std::sort(furniture_categories.begin(), furniture_categories.end());
  furniture_categories.erase(std::unique(furniture_categories.begin(), furniture_categories.end()),
                             furniture_categories.end());
  reference_categories_.push_back("wall");
  for (auto& c : furniture_categories) {
    if (c != "wall") reference_categories_.push_back(c);
  }
  query_categories_.assign(reference_categories_.begin() + 1, reference_categories_.end());
  names_.push_back("bias");
  for (const auto& c : query_categories_) names_.push_back("query." + c);
  for (const auto& c : reference_categories_) {
    names_.push_back(c + ".present");
    for (auto d : kSides) names_.push_back(c + ".attach_" + std::string(to_string(d)));
    for (auto d : kSides) names_.push_back(c + ".reach_" + std::string(to_string(d)));
    names_.push_back(c + ".attached_aligned");
    names_.push_back(c + ".attached_facing");
    names_.push_back(c + ".faces");
    names_.push_back(c + ".aligned");
    names_.push_back(c + ".dist_contact");
    names_.push_back(c + ".dist_near");
    names_.push_back(c + ".dist_mid");
    names_.push_back(c + ".dist_far");
  }
  names_.push_back("max_overlap");
  names_.push_back("collides");
  names_.push_back("exits_room");
  for (double r : kRingRadii) names_.push_back("ring_" + std::to_string(r).substr(0, 3));
}

std::string FeatureSchema::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& n : names_) mix(n);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f/%.6f/%.6f/%.6f/%.6f", params_.attach_band, params_.reach_low,
                params_.reach_high, params_.tolerance, params_.collision_threshold);
  mix(buf);
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Eigen::VectorXd FeatureSchema::features(const Scene& context, const Query& query, const Vec2& position,
                                        Orientation o) const {
  const FeatureParams& fp = params_;
  const double tol = fp.tolerance;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(dimension());
  const Box q = oriented_box(position, query.size, o);
  f[0] = 1.0;
  auto qc = std::find(query_categories_.begin(), query_categories_.end(), query.category);
  if (qc != query_categories_.end()) f[1 + (qc - query_categories_.begin())] = 1.0;

  int base = 1 + static_cast<int>(query_categories_.size());
  for (const auto& cat : reference_categories_) {
    double nearest = std::numeric_limits<double>::infinity();
    bool present = false;
    for (const auto& obj : context.objects) {
      if (obj.category != cat) continue;
      present = true;
      const Box r = footprint_box(obj);
      bool attached = false;
      for (int k = 0; k < 4; ++k) {
        const Orientation wd = to_world(kSides[k], obj.orientation);
        if (attach_holds(r, q, wd, fp.attach_band, tol)) {
          f[base + 1 + k] = 1.0;
          attached = true;
        }
        if (reach_holds(r, q, wd, fp.reach_low, fp.reach_high, tol)) f[base + 5 + k] = 1.0;
      }
      if (attached && obj.orientation == o) f[base + 9] = 1.0;
      if (attached && obj.orientation == opposite(o) && faces(r, q, o, tol) && faces(q, r, obj.orientation, tol)) {
        f[base + 10] = 1.0;
      }
      if (faces(r, q, o, tol)) f[base + 11] = 1.0;
      if (obj.orientation == o) f[base + 12] = 1.0;
      nearest = std::min(nearest, box_distance(r, q));
    }
    if (present) {
      f[base] = 1.0;
      int bin = 0;
      while (bin < 3 && nearest > kDistanceEdges[bin]) ++bin;
      f[base + 13 + bin] = 1.0;
    }
    base += kBlockSize;
  }

  const double area = q.volume();
  double max_overlap = 0.0;
  for (const auto& obj : context.furniture()) {
    max_overlap = std::max(max_overlap, intersection_area(footprint_box(obj), q) / area);
  }
  f[base] = max_overlap;
  f[base + 1] = max_overlap > fp.collision_threshold ? 1.0 : 0.0;
  f[base + 2] = box_inside_room(context, q) ? 0.0 : 1.0;

  auto occupied = [&](const Vec2& p) {
    if (!context.contains_point(p)) return true;
    for (const auto& obj : context.furniture()) {
      if (footprint_box(obj).contains(p)) return true;
    }
    return false;
  };
  for (std::size_t r = 0; r < kRingRadii.size(); ++r) {
    int hits = 0;
    for (int k = 0; k < kRingPoints; ++k) {
      const double a = 2.0 * std::numbers::pi * k / kRingPoints;
      hits += occupied(position + kRingRadii[r] * Vec2(std::cos(a), std::sin(a)));
    }
    f[base + 3 + static_cast<int>(r)] = static_cast<double>(hits) / kRingPoints;
  }
  return f;
}

Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             const LogisticConfig& cfg) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (y.size() != n || w.size() != n) throw Error(ErrorKind::Precondition, "logistic: row count mismatch");
  Eigen::VectorXd sample_w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sample_w[i] = w[i] * (y[i] > 0.5 ? cfg.positive_weight : cfg.negative_weight);
  }
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(d, cfg.l2);
  if (d > 0) reg[0] = 1e-8;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < cfg.epochs; ++it) {
    const Eigen::VectorXd p = (x * theta).unaryExpr([](double z) { return sigmoid(z); });
    const Eigen::VectorXd grad = x.transpose() * (sample_w.array() * (p - y).array()).matrix() +
                                 (reg.array() * theta.array()).matrix();
    const Eigen::VectorXd curv = sample_w.array() * (p.array() * (1.0 - p.array())).max(1e-9);
    Eigen::MatrixXd hess = x.transpose() * curv.asDiagonal() * x;
    hess.diagonal() += reg;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    theta -= cfg.learning_rate * step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-9) break;
  }
  return theta;
}

ClassifierModel::ClassifierModel(FeatureSchema schema, std::map<std::string, Eigen::VectorXd> weights,
                                 double threshold)
    : schema_(std::move(schema)), weights_(std::move(weights)), threshold_(threshold) {
  for (const auto& [cat, wv] : weights_) {
    if (wv.size() != schema_.dimension()) {
      throw Error(ErrorKind::Schema, "classifier weights for '" + cat + "' do not match the feature schema");
    }
  }
}

double ClassifierModel::probability(const std::string& category, const Eigen::VectorXd& features) const {
  double z = 0.0;
  if (auto it = weights_.find("*"); it != weights_.end()) z += it->second.dot(features);
  if (auto it = weights_.find(category); it != weights_.end()) z += it->second.dot(features);
  return sigmoid(z);
}

double ClassifierModel::probability(const ExecutionContext& ctx, const Placement& p) const {
  const Vec2 pos = ctx.scene().cell_center(p.cell);
  return probability(ctx.query().category, schema_.features(ctx.scene(), ctx.query(), pos, p.orientation));
}

double ClassifierModel::probability(const LabeledPlacement& e) const {
  return probability(e.query.category, schema_.features(*e.context, e.query, e.position, e.orientation));
}

nlohmann::json ClassifierModel::to_json() const {
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [cat, wv] : weights_) {
    models[cat] = {{"weights", std::vector<double>(wv.data(), wv.data() + wv.size())}};
  }
  const auto& fp = schema_.params();
  std::vector<std::string> furniture(schema_.reference_categories().begin() + 1, schema_.reference_categories().end());
  return {{"schema_hash", schema_.hash()},
          {"feature_dim", schema_.dimension()},
          {"categories", furniture},
          {"params",
           {{"attach_band", fp.attach_band},
            {"reach_low", fp.reach_low},
            {"reach_high", fp.reach_high},
            {"tolerance", fp.tolerance},
            {"collision_threshold", fp.collision_threshold}}},
          {"threshold", threshold_},
          {"metrics",
           {{"accuracy", metrics.accuracy},
            {"fp_rate", metrics.fp_rate},
            {"fn_rate", metrics.fn_rate},
            {"held_out", metrics.held_out}}},
          {"models", models}};
}

ClassifierModel ClassifierModel::from_json(const nlohmann::json& j) {
  try {
    const auto& pj = j.at("params");
    FeatureParams fp;
    fp.attach_band = pj.at("attach_band").get<double>();
    fp.reach_low = pj.at("reach_low").get<double>();
    fp.reach_high = pj.at("reach_high").get<double>();
    fp.tolerance = pj.at("tolerance").get<double>();
    fp.collision_threshold = pj.at("collision_threshold").get<double>();
    FeatureSchema schema(j.at("categories").get<std::vector<std::string>>(), fp);
    if (schema.hash() != j.at("schema_hash").get<std::string>() || schema.dimension() != j.at("feature_dim").get<int>()) {
      throw Error(ErrorKind::Schema, "classifier model was trained with a different feature schema");
    }
    std::map<std::string, Eigen::VectorXd> weights;
    for (const auto& [cat, mj] : j.at("models").items()) {
      auto v = mj.at("weights").get<std::vector<double>>();
      weights[cat] = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    ClassifierModel m(std::move(schema), std::move(weights), j.at("threshold").get<double>());
    if (j.contains("metrics")) {
      const auto& mj = j["metrics"];
      m.metrics.accuracy = mj.value("accuracy", 0.0);
      m.metrics.fp_rate = mj.value("fp_rate", 0.0);
      m.metrics.fn_rate = mj.value("fn_rate", 0.0);
      m.metrics.held_out = mj.value("held_out", 0);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed classifier model: ") + e.what());
  }
}

ClassifierModel train_classifier(std::span<const LabeledPlacement> pairs, const FeatureSchema& schema,
                                 const ClassifierConfig& cfg, std::uint64_t seed) {
  if (pairs.empty()) throw Error(ErrorKind::Precondition, "no training pairs");
  const bool any_pos = std::any_of(pairs.begin(), pairs.end(), [](const auto& e) { return e.real; });
  const bool any_neg = std::any_of(pairs.begin(), pairs.end(), [](const auto& e) { return !e.real; });
  if (!any_pos || !any_neg) throw Error(ErrorKind::Precondition, "training pairs contain a single class");
  if (!(cfg.held_out_fraction >= 0.0 && cfg.held_out_fraction < 1.0)) {
    throw Error(ErrorKind::Config, "held_out_fraction must lie in [0, 1)");
  }

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(cfg.held_out_fraction * static_cast<double>(pairs.size()));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(train.begin(), train.end());

  const int d = schema.dimension();
  std::vector<Eigen::VectorXd> feats(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& e = pairs[i];
    feats[i] = schema.features(*e.context, e.query, e.position, e.orientation);
  }

  std::map<std::string, std::vector<std::size_t>> by_key;
  for (auto i : train) by_key[cfg.per_category ? pairs[i].query.category : "*"].push_back(i);
  std::map<std::string, Eigen::VectorXd> weights;
  for (const auto& [key, rows] : by_key) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), d);
    Eigen::VectorXd y(x.rows()), w(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const std::size_t i = rows[static_cast<std::size_t>(r)];
      x.row(r) = feats[i].transpose();
      y[r] = pairs[i].real ? 1.0 : 0.0;
      w[r] = pairs[i].weight;
    }
    weights[key] = fit_logistic(x, y, w, cfg.logistic);
  }

  ClassifierModel model(schema, std::move(weights), cfg.threshold);
  int correct = 0, fp = 0, fn = 0, pos = 0, neg = 0;
  for (auto i : test) {
    const bool pred = model.probability(pairs[i].query.category, feats[i]) >= cfg.threshold;
    const bool truth = pairs[i].real;
    correct += pred == truth;
    if (truth) {
      ++pos;
      fn += !pred;
    } else {
      ++neg;
      fp += pred;
    }
  }
  model.metrics.held_out = static_cast<int>(test.size());
  if (!test.empty()) {
    model.metrics.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    model.metrics.fp_rate = neg ? static_cast<double>(fp) / neg : 0.0;
    model.metrics.fn_rate = pos ? static_cast<double>(fn) / pos : 0.0;
  }
  return model;
}

std::vector<LabeledPlacement> generate_training_pairs(std::span<const Scene> dataset, const PairConfig& cfg,
                                                      std::mt19937_64& rng) {
  if (!(cfg.min_shift > 0.0 && cfg.max_shift >= cfg.min_shift)) {
    throw Error(ErrorKind::Config, "perturbation range must satisfy 0 < min_shift <= max_shift");
  }
  std::vector<const Scene*> usable;
  for (const auto& s : dataset) {
    if (!s.furniture().empty()) usable.push_back(&s);
  }
  if (usable.empty()) throw Error(ErrorKind::Precondition, "no scene with furniture to draw training pairs from");

  std::vector<LabeledPlacement> out;
  out.reserve(static_cast<std::size_t>(std::max(cfg.n_pairs, 0)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(out.size()) < cfg.n_pairs) {
    const Scene& s = *usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
    auto furn = s.furniture();
    const std::size_t n = furn.size();
    const std::size_t keep = std::uniform_int_distribution<std::size_t>(1, n)(rng);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(keep);
    const std::size_t query_pos = idx[std::uniform_int_distribution<std::size_t>(0, keep - 1)(rng)];
    std::sort(idx.begin(), idx.end());

    auto context = std::make_shared<Scene>(s);
    context->objects.assign(s.walls().begin(), s.walls().end());
    for (auto i : idx) {
      if (i != query_pos) context->objects.push_back(furn[i]);
    }
    const ObjectInstance& obj = furn[query_pos];

    LabeledPlacement e;
    e.context = context;
    e.query = Query{obj.category, obj.size, obj.holds_humans};
    e.position = obj.position;
    e.orientation = obj.orientation;
    e.real = unit(rng) < cfg.positive_fraction;
    if (!e.real) {
      const int mode = std::uniform_int_distribution<int>(0, 2)(rng);  // 0 move, 1 turn, 2 both
      double shift = 0.0;
      int turns = 0;
      if (mode != 1) {
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
          const double a = 2.0 * std::numbers::pi * unit(rng);
          const double dist = cfg.min_shift + (cfg.max_shift - cfg.min_shift) * unit(rng);
          const Vec2 p = snap(s, obj.position + dist * Vec2(std::cos(a), std::sin(a)));
          if (!s.contains_point(p)) continue;
          e.position = p;
          shift = (p - obj.position).norm();
          placed = true;
        }
        if (!placed) turns = 1 + std::uniform_int_distribution<int>(0, 2)(rng);
      }
      if (mode != 0 && turns == 0) turns = 1 + std::uniform_int_distribution<int>(0, 2)(rng);
      e.orientation = orientation_from_index(index(obj.orientation) + turns);
      const int quarter = std::min(turns, 4 - turns);
      e.perturbation = shift + 0.5 * quarter;
      e.weight = std::clamp(e.perturbation, cfg.min_weight, cfg.max_weight);
    }
    out.push_back(std::move(e));
  }
  return out;
}

double score_mask(const PlacementMask& mask, const ExecutionContext& ctx, const PlacementScorer& scorer, int m_samples,
                  std::uint64_t seed) {
  if (m_samples < 1) throw Error(ErrorKind::Precondition, "score needs at least one sample");
  if (mask.empty()) throw Error(ErrorKind::Precondition, "cannot score an empty mask");
  double total = 0.0;
  const auto samples = sample_placements(mask, m_samples, seed);
  for (const auto& p : samples) total += scorer.probability(ctx, p);
  return total / static_cast<double>(samples.size());
}

double score_program(const PlacementProgram& p, const ExecutionContext& ctx, const PlacementScorer& scorer,
                     int m_samples, std::uint64_t seed) {
  return score_mask(execute_program(p, ctx), ctx, scorer, m_samples, seed);
}

std::vector<std::string> furniture_vocabulary(std::span<const Scene> scenes) {
  std::set<std::string> cats;
  for (const auto& s : scenes) {
    for (const auto& o : s.furniture()) cats.insert(o.category);
  }
  return {cats.begin(), cats.end()};
}

}  // namespace placeprog
