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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace placeprog {

using Vec2 = Eigen::Vector2d;
using Box = Eigen::AlignedBox2d;

/// Cardinal facing direction, clockwise from north (+y).
enum class Orientation : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

inline constexpr std::array<Orientation, 4> kOrientations = {Orientation::N, Orientation::E, Orientation::S,
                                                             Orientation::W};

constexpr int index(Orientation o) { return static_cast<int>(o); }
constexpr Orientation orientation_from_index(int i) { return static_cast<Orientation>(((i % 4) + 4) % 4); }
constexpr Orientation opposite(Orientation o) { return orientation_from_index(index(o) + 2); }
/// Left of `o` when viewed from above facing `o`.
constexpr Orientation turn_left(Orientation o) { return orientation_from_index(index(o) + 3); }
constexpr Orientation turn_right(Orientation o) { return orientation_from_index(index(o) + 1); }
constexpr bool is_north_south(Orientation o) { return o == Orientation::N || o == Orientation::S; }

Vec2 unit_vector(Orientation o);
char to_char(Orientation o);
std::optional<Orientation> orientation_from_string(std::string_view s);

/// Axis-aligned extent (x, y) of an object of canonical (width, depth) facing `o`.
inline Vec2 world_extent(const Vec2& size, Orientation o) {
  return is_north_south(o) ? size : Vec2(size.y(), size.x());
}

inline Box oriented_box(const Vec2& center, const Vec2& size, Orientation o) {
  const Vec2 half = 0.5 * world_extent(size, o);
  return Box(center - half, center + half);
}

/// Signed length of the overlap of [a0, a1] and [b0, b1]; negative when disjoint.
inline double overlap_length(double a0, double a1, double b0, double b1) {
  return std::min(a1, b1) - std::max(a0, b0);
}

/// Signed gap from `ref` to `query` measured along world direction `dir`.
/// Negative values mean the boxes interpenetrate along that axis.
double directional_gap(const Box& ref, const Box& query, Orientation dir);

/// Overlap of the two boxes on the axis perpendicular to `dir`.
double lateral_overlap(const Box& ref, const Box& query, Orientation dir);

/// Euclidean distance between two boxes (0 when they touch or overlap).
double box_distance(const Box& a, const Box& b);

double intersection_area(const Box& a, const Box& b);

}  // namespace placeprog
