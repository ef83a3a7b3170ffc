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

#include "placeprog/geometry.hpp"
#include "placeprog/scene.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace placeprog {

/// Packed W x H bit grid; rows are padded to whole 64-bit words and padding bits stay zero.
class BitGrid {
 public:
  BitGrid() = default;
  BitGrid(int w, int h, bool value = false);

  int width() const { return w_; }
  int height() const { return h_; }
  int stride() const { return stride_; }

  bool test(int x, int y) const {
    return (words_[static_cast<std::size_t>(y) * stride_ + (x >> 6)] >> (x & 63)) & 1u;
  }
  void set(int x, int y, bool v = true) {
    auto& w = words_[static_cast<std::size_t>(y) * stride_ + (x >> 6)];
    const std::uint64_t bit = std::uint64_t{1} << (x & 63);
    w = v ? (w | bit) : (w & ~bit);
  }

  void fill(bool v);
  /// Sets every cell of `r` (clipped to the grid).
  void fill_rect(const CellRect& r, bool v = true);
  /// Sets cell (x, y) for every x with cols[x] and y with rows[y].
  void fill_outer(const std::vector<char>& cols, const std::vector<char>& rows);

  long count() const;
  bool any() const;
  bool none() const { return !any(); }
  bool is_subset_of(const BitGrid& other) const;

  BitGrid& operator&=(const BitGrid& o);
  BitGrid& operator|=(const BitGrid& o);
  BitGrid operator~() const;
  bool operator==(const BitGrid& o) const = default;

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> row_words(int y) { return {words_.data() + static_cast<std::size_t>(y) * stride_, static_cast<std::size_t>(stride_)}; }
  std::span<const std::uint64_t> row_words(int y) const { return {words_.data() + static_cast<std::size_t>(y) * stride_, static_cast<std::size_t>(stride_)}; }
  std::uint64_t hash() const;
  /// Zeroes the bits past column w-1 in every row.
  void clear_padding();

 private:

  int w_ = 0;
  int h_ = 0;
  int stride_ = 0;
  std::vector<std::uint64_t> words_;
};

inline BitGrid operator&(BitGrid a, const BitGrid& b) { return a &= b; }
inline BitGrid operator|(BitGrid a, const BitGrid& b) { return a |= b; }

struct Placement {
  CellIndex cell;
  Orientation orientation = Orientation::N;
  bool operator==(const Placement&) const = default;
};

/// W x H x 4 binary mask; slice o holds valid centroid cells for orientation o.
class PlacementMask {
 public:
  PlacementMask() = default;
  explicit PlacementMask(const GridSpec& grid, bool value = false);

  const GridSpec& grid() const { return grid_; }
  BitGrid& slice(Orientation o) { return slices_[index(o)]; }
  const BitGrid& slice(Orientation o) const { return slices_[index(o)]; }

  bool test(const Placement& p) const { return slice(p.orientation).test(p.cell.x, p.cell.y); }
  void set(const Placement& p, bool v = true) { slice(p.orientation).set(p.cell.x, p.cell.y, v); }

  long count() const;
  long count(Orientation o) const { return slice(o).count(); }
  bool empty() const;
  int nonempty_orientations() const;
  bool is_subset_of(const PlacementMask& other) const;
  std::uint64_t hash() const;

  bool operator==(const PlacementMask& o) const = default;

 private:
  GridSpec grid_;
  std::array<BitGrid, 4> slices_;
};

PlacementMask mask_and(const PlacementMask& a, const PlacementMask& b);
PlacementMask mask_or(const PlacementMask& a, const PlacementMask& b);
PlacementMask mask_not(const PlacementMask& a);
inline PlacementMask operator&(const PlacementMask& a, const PlacementMask& b) { return mask_and(a, b); }
inline PlacementMask operator|(const PlacementMask& a, const PlacementMask& b) { return mask_or(a, b); }

/// Square-element morphological dilation of half-width `radius` cells.
BitGrid dilate(const BitGrid& m, int radius);
PlacementMask dilate(const PlacementMask& m, int radius);

/// Cell set iff set in any orientation slice.
BitGrid collapse_orientations(const PlacementMask& m);

/// `k` draws uniform over set bits. Throws Error(Precondition) on an empty mask.
std::vector<Placement> sample_placements(const PlacementMask& m, int k, std::uint64_t seed);
std::vector<Placement> sample_placements(const PlacementMask& m, int k, std::mt19937_64& rng);

struct MaskMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

double f1_score(double precision, double recall);

/// Dilates both masks by `dilation_radius`, then precision/recall of pred against truth.
MaskMetrics compare_masks(const BitGrid& pred, const BitGrid& truth, int dilation_radius);

/// Real-valued scores indexed (x, y).
using ScoreGrid = Eigen::ArrayXXd;

struct Binarization {
  BitGrid mask;
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Cells scoring at least `threshold`. Cells scoring zero or less are never set.
BitGrid threshold_scores(const ScoreGrid& scores, double threshold);

/// Sweeps thresholds over the unique score values and keeps the F1-maximizing one.
Binarization binarize_scalar_mask(const ScoreGrid& scores, const BitGrid& truth);

/// Threshold maximizing mean F1 over a set of (scores, truth) pairs; sweeps up to
/// `max_candidates` quantiles of the pooled scores.
double fit_binarization_threshold(std::span<const ScoreGrid> scores, std::span<const BitGrid> truths,
                                  int max_candidates = 256);

/// Alternating 0/1 run lengths in row-major order, starting with a (possibly empty) 0-run.
std::vector<long> encode_rle(const BitGrid& m);
BitGrid decode_rle(std::span<const long> runs, int w, int h);

nlohmann::json mask_to_json(const PlacementMask& m);
PlacementMask mask_from_json(const nlohmann::json& j);
nlohmann::json grid2d_to_json(const BitGrid& m, double cell);
BitGrid grid2d_from_json(const nlohmann::json& j);

}  // namespace placeprog
