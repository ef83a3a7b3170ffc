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

#include "placeprog/mask.hpp"

#include "placeprog/error.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace placeprog {
namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

void require_same_dims(const BitGrid& a, const BitGrid& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::Validation, "mask dimension mismatch");
  }
}

void require_same_grid(const PlacementMask& a, const PlacementMask& b) {
  if (!(a.grid() == b.grid())) throw Error(ErrorKind::Validation, "mask grid mismatch");
}

// Shifts a padded row so that bit x moves to x + s (s may be negative).
void or_shifted(std::span<const std::uint64_t> src, std::span<std::uint64_t> dst, int s) {
  const int n = static_cast<int>(src.size());
  if (s >= 0) {
    const int q = s >> 6;
    const int r = s & 63;
    for (int k = n - 1; k >= q; --k) {
      std::uint64_t v = src[k - q] << r;
      if (r != 0 && k - q - 1 >= 0) v |= src[k - q - 1] >> (64 - r);
      dst[k] |= v;
    }
  } else {
    const int t = -s;
    const int q = t >> 6;
    const int r = t & 63;
    for (int k = 0; k + q < n; ++k) {
      std::uint64_t v = src[k + q] >> r;
      if (r != 0 && k + q + 1 < n) v |= src[k + q + 1] << (64 - r);
      dst[k] |= v;
    }
  }
}

}  // namespace

BitGrid::BitGrid(int w, int h, bool value) : w_(w), h_(h), stride_((w + 63) / 64) {
  if (w < 0 || h < 0) throw Error(ErrorKind::Validation, "negative mask dimensions");
  words_.assign(static_cast<std::size_t>(stride_) * h, 0);
  if (value) fill(true);
}

void BitGrid::clear_padding() {
  const int tail = w_ & 63;
  if (tail == 0 || stride_ == 0) return;
  const std::uint64_t keep = (std::uint64_t{1} << tail) - 1;
  for (int y = 0; y < h_; ++y) words_[static_cast<std::size_t>(y) * stride_ + stride_ - 1] &= keep;
}

void BitGrid::fill(bool v) {
  std::fill(words_.begin(), words_.end(), v ? ~std::uint64_t{0} : 0);
  clear_padding();
}

void BitGrid::fill_rect(const CellRect& r, bool v) {
  const CellRect c{std::max(r.x0, 0), std::max(r.y0, 0), std::min(r.x1, w_), std::min(r.y1, h_)};
  if (c.empty()) return;
  for (int y = c.y0; y < c.y1; ++y) {
    auto row = row_words(y);
    for (int k = c.x0 >> 6; k <= (c.x1 - 1) >> 6; ++k) {
      const int lo = std::max(c.x0, k * 64) - k * 64;
      const int hi = std::min(c.x1, k * 64 + 64) - k * 64;
      const std::uint64_t bits = (hi - lo == 64) ? ~std::uint64_t{0} : (((std::uint64_t{1} << (hi - lo)) - 1) << lo);
      row[k] = v ? (row[k] | bits) : (row[k] & ~bits);
    }
  }
}

void BitGrid::fill_outer(const std::vector<char>& cols, const std::vector<char>& rows) {
  std::vector<std::uint64_t> pattern(stride_, 0);
  for (int x = 0; x < w_; ++x) {
    if (cols[x]) pattern[x >> 6] |= std::uint64_t{1} << (x & 63);
  }
  for (int y = 0; y < h_; ++y) {
    auto row = row_words(y);
    if (rows[y]) {
      std::copy(pattern.begin(), pattern.end(), row.begin());
    } else {
      std::fill(row.begin(), row.end(), 0);
    }
  }
}

long BitGrid::count() const {
  long n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

bool BitGrid::any() const {
  return std::any_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w != 0; });
}

bool BitGrid::is_subset_of(const BitGrid& o) const {
  require_same_dims(*this, o);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] & ~o.words_[i]) return false;
  }
  return true;
}

BitGrid& BitGrid::operator&=(const BitGrid& o) {
  require_same_dims(*this, o);
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
  return *this;
}

BitGrid& BitGrid::operator|=(const BitGrid& o) {
  require_same_dims(*this, o);
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
  return *this;
}

BitGrid BitGrid::operator~() const {
  BitGrid r = *this;
  for (auto& w : r.words_) w = ~w;
  r.clear_padding();
  return r;
}

std::uint64_t BitGrid::hash() const {
  std::uint64_t h = mix(static_cast<std::uint64_t>(w_), static_cast<std::uint64_t>(h_));
  for (auto w : words_) h = mix(h, w);
  return h;
}

PlacementMask::PlacementMask(const GridSpec& grid, bool value) : grid_(grid) {
  for (auto& s : slices_) s = BitGrid(grid.w, grid.h, value);
}

long PlacementMask::count() const {
  long n = 0;
  for (const auto& s : slices_) n += s.count();
  return n;
}

bool PlacementMask::empty() const {
  return std::none_of(slices_.begin(), slices_.end(), [](const BitGrid& s) { return s.any(); });
}

int PlacementMask::nonempty_orientations() const {
  return static_cast<int>(std::count_if(slices_.begin(), slices_.end(), [](const BitGrid& s) { return s.any(); }));
}

bool PlacementMask::is_subset_of(const PlacementMask& o) const {
  require_same_grid(*this, o);
  for (auto orient : kOrientations) {
    if (!slice(orient).is_subset_of(o.slice(orient))) return false;
  }
  return true;
}

std::uint64_t PlacementMask::hash() const {
  std::uint64_t h = 0;
  for (const auto& s : slices_) h = mix(h, s.hash());
  return h;
}

PlacementMask mask_and(const PlacementMask& a, const PlacementMask& b) {
  require_same_grid(a, b);
  PlacementMask r = a;
  for (auto o : kOrientations) r.slice(o) &= b.slice(o);
  return r;
}

PlacementMask mask_or(const PlacementMask& a, const PlacementMask& b) {
  require_same_grid(a, b);
  PlacementMask r = a;
  for (auto o : kOrientations) r.slice(o) |= b.slice(o);
  return r;
}

PlacementMask mask_not(const PlacementMask& a) {
  PlacementMask r = a;
  for (auto o : kOrientations) r.slice(o) = ~a.slice(o);
  return r;
}

BitGrid dilate(const BitGrid& m, int radius) {
  if (radius < 0) throw Error(ErrorKind::Precondition, "dilation radius must be non-negative");
  if (radius == 0) return m;
  BitGrid horiz(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    auto src = m.row_words(y);
    auto dst = horiz.row_words(y);
    std::copy(src.begin(), src.end(), dst.begin());
    for (int s = 1; s <= radius; ++s) {
      or_shifted(src, dst, s);
      or_shifted(src, dst, -s);
    }
  }
  // Shifts toward higher x spill into the padding of the last word.
  horiz.clear_padding();
  BitGrid out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    auto dst = out.row_words(y);
    for (int yy = std::max(0, y - radius); yy <= std::min(m.height() - 1, y + radius); ++yy) {
      auto src = horiz.row_words(yy);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] |= src[k];
    }
  }
  return out;
}

PlacementMask dilate(const PlacementMask& m, int radius) {
  PlacementMask r = m;
  for (auto o : kOrientations) r.slice(o) = dilate(m.slice(o), radius);
  return r;
}

BitGrid collapse_orientations(const PlacementMask& m) {
  BitGrid r = m.slice(Orientation::N);
  for (auto o : {Orientation::E, Orientation::S, Orientation::W}) r |= m.slice(o);
  return r;
}

std::vector<Placement> sample_placements(const PlacementMask& m, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_placements(m, k, rng);
}

std::vector<Placement> sample_placements(const PlacementMask& m, int k, std::mt19937_64& rng) {
  struct WordRef {
    int orientation;
    std::size_t word;
  };
  std::vector<long> cumulative;
  std::vector<WordRef> refs;
  long total = 0;
  for (auto o : kOrientations) {
    const auto words = m.slice(o).words();
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (words[i] == 0) continue;
      total += std::popcount(words[i]);
      cumulative.push_back(total);
      refs.push_back({index(o), i});
    }
  }
  if (total == 0) throw Error(ErrorKind::Precondition, "cannot sample from an empty mask");
  std::uniform_int_distribution<long> pick(0, total - 1);
  const int stride = m.slice(Orientation::N).stride();
  std::vector<Placement> out;
  out.reserve(static_cast<std::size_t>(std::max(k, 0)));
  for (int n = 0; n < k; ++n) {
    const long target = pick(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    const std::size_t wi = static_cast<std::size_t>(it - cumulative.begin());
    long rank = target - (wi == 0 ? 0 : cumulative[wi - 1]);
    const auto& ref = refs[wi];
    std::uint64_t w = m.slice(orientation_from_index(ref.orientation)).words()[ref.word];
    while (rank-- > 0) w &= w - 1;
    const int bit = std::countr_zero(w);
    const int y = static_cast<int>(ref.word / stride);
    const int x = static_cast<int>(ref.word % stride) * 64 + bit;
    out.push_back({{x, y}, orientation_from_index(ref.orientation)});
  }
  return out;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

MaskMetrics compare_masks(const BitGrid& pred, const BitGrid& truth, int dilation_radius) {
  require_same_dims(pred, truth);
  const BitGrid p = dilate(pred, dilation_radius);
  const BitGrid t = dilate(truth, dilation_radius);
  const long np = p.count();
  const long nt = t.count();
  const long both = (p & t).count();
  MaskMetrics m;
  m.precision = np > 0 ? static_cast<double>(both) / np : 0.0;
  m.recall = nt > 0 ? static_cast<double>(both) / nt : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

BitGrid threshold_scores(const ScoreGrid& scores, double threshold) {
  BitGrid m(static_cast<int>(scores.rows()), static_cast<int>(scores.cols()));
  for (int y = 0; y < scores.cols(); ++y) {
    for (int x = 0; x < scores.rows(); ++x) {
      if (scores(x, y) >= threshold && scores(x, y) > 0.0) m.set(x, y);
    }
  }
  return m;
}

Binarization binarize_scalar_mask(const ScoreGrid& scores, const BitGrid& truth) {
  if (scores.size() == 0) throw Error(ErrorKind::Precondition, "empty score grid");
  if (scores.rows() != truth.width() || scores.cols() != truth.height()) {
    throw Error(ErrorKind::Validation, "score grid dimension mismatch");
  }
  // Descending sweep: lowering the threshold past a value admits all cells holding it.
  std::vector<std::pair<double, bool>> cells;
  cells.reserve(static_cast<std::size_t>(scores.size()));
  for (int y = 0; y < scores.cols(); ++y) {
    for (int x = 0; x < scores.rows(); ++x) {
      if (scores(x, y) > 0.0) cells.emplace_back(scores(x, y), truth.test(x, y));
    }
  }
  if (cells.empty()) return {BitGrid(truth.width(), truth.height()), 0.0, 0.0};
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const long n_truth = truth.count();
  long tp = 0;
  long predicted = 0;
  double best_f1 = -1.0;
  double best_t = cells.front().first;
  for (std::size_t i = 0; i < cells.size();) {
    const double t = cells[i].first;
    while (i < cells.size() && cells[i].first == t) {
      tp += cells[i].second ? 1 : 0;
      ++predicted;
      ++i;
    }
    const double p = static_cast<double>(tp) / predicted;
    const double r = n_truth > 0 ? static_cast<double>(tp) / n_truth : 0.0;
    const double f = f1_score(p, r);
    if (f > best_f1) {
      best_f1 = f;
      best_t = t;
    }
  }
  return {threshold_scores(scores, best_t), best_t, best_f1};
}

double fit_binarization_threshold(std::span<const ScoreGrid> scores, std::span<const BitGrid> truths,
                                  int max_candidates) {
  if (scores.empty() || scores.size() != truths.size()) {
    throw Error(ErrorKind::Precondition, "threshold fitting needs matching, non-empty score and truth sets");
  }
  std::vector<double> pooled;
  for (const auto& s : scores) pooled.insert(pooled.end(), s.data(), s.data() + s.size());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
  std::vector<double> candidates;
  if (static_cast<int>(pooled.size()) <= max_candidates) {
    candidates = pooled;
  } else {
    for (int i = 0; i < max_candidates; ++i) {
      candidates.push_back(pooled[static_cast<std::size_t>(i) * (pooled.size() - 1) / (max_candidates - 1)]);
    }
  }
  double best_t = candidates.front();
  double best = -1.0;
  for (double t : candidates) {
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      total += compare_masks(threshold_scores(scores[i], t), truths[i], 0).f1;
    }
    if (total > best) {
      best = total;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<long> encode_rle(const BitGrid& m) {
  std::vector<long> runs;
  bool current = false;
  long run = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const bool v = m.test(x, y);
      if (v != current) {
        runs.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  runs.push_back(run);
  return runs;
}

BitGrid decode_rle(std::span<const long> runs, int w, int h) {
  BitGrid m(w, h);
  const long total = static_cast<long>(w) * h;
  long pos = 0;
  bool value = false;
  for (long r : runs) {
    if (r < 0 || pos + r > total) throw Error(ErrorKind::Schema, "run-length data exceeds mask size");
    if (value) {
      for (long i = pos; i < pos + r; ++i) m.set(static_cast<int>(i % w), static_cast<int>(i / w));
    }
    pos += r;
    value = !value;
  }
  if (pos != total) throw Error(ErrorKind::Schema, "run-length data does not cover the mask");
  return m;
}

namespace {

GridSpec grid_from_json(const nlohmann::json& j) {
  if (!j.contains("grid") || !j["grid"].is_object()) throw Error(ErrorKind::Schema, "mask requires 'grid'");
  const auto& g = j["grid"];
  for (const char* k : {"w", "h", "cell"}) {
    if (!g.contains(k) || !g[k].is_number()) throw Error(ErrorKind::Schema, std::string("mask grid requires '") + k + "'");
  }
  GridSpec grid;
  grid.w = g["w"].get<int>();
  grid.h = g["h"].get<int>();
  grid.cell = g["cell"].get<double>();
  if (grid.w <= 0 || grid.h <= 0 || grid.cell <= 0.0) throw Error(ErrorKind::Schema, "mask grid must be positive");
  return grid;
}

std::vector<long> runs_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Schema, "mask slice must be a run-length array");
  std::vector<long> runs;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw Error(ErrorKind::Schema, "run lengths must be integers");
    runs.push_back(v.get<long>());
  }
  return runs;
}

}  // namespace

nlohmann::json mask_to_json(const PlacementMask& m) {
  nlohmann::json j;
  j["grid"] = {{"w", m.grid().w}, {"h", m.grid().h}, {"cell", m.grid().cell}};
  j["slices"] = nlohmann::json::array();
  for (auto o : kOrientations) j["slices"].push_back(encode_rle(m.slice(o)));
  return j;
}

PlacementMask mask_from_json(const nlohmann::json& j) {
  const GridSpec grid = grid_from_json(j);
  if (!j.contains("slices") || !j["slices"].is_array() || j["slices"].size() != 4) {
    throw Error(ErrorKind::Schema, "mask requires exactly 4 slices");
  }
  PlacementMask m(grid);
  for (auto o : kOrientations) m.slice(o) = decode_rle(runs_from_json(j["slices"][index(o)]), grid.w, grid.h);
  return m;
}

nlohmann::json grid2d_to_json(const BitGrid& m, double cell) {
  nlohmann::json j;
  j["grid"] = {{"w", m.width()}, {"h", m.height()}, {"cell", cell}};
  j["slices"] = nlohmann::json::array({encode_rle(m)});
  return j;
}

BitGrid grid2d_from_json(const nlohmann::json& j) {
  const GridSpec grid = grid_from_json(j);
  if (!j.contains("slices") || !j["slices"].is_array() || j["slices"].size() != 1) {
    throw Error(ErrorKind::Schema, "2-D mask requires exactly 1 slice");
  }
  return decode_rle(runs_from_json(j["slices"][0]), grid.w, grid.h);
}

}  // namespace placeprog
