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

#include "placeprog/geometry.hpp"

#include "placeprog/error.hpp"

#include <algorithm>
#include <cmath>

namespace placeprog {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Execution: return "execution";
    case ErrorKind::Unconstrained: return "unconstrained";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
    case ErrorKind::NotFound: return "not_found";
  }
  return "unknown";
}

Vec2 unit_vector(Orientation o) {
  switch (o) {
    case Orientation::N: return {0.0, 1.0};
    case Orientation::E: return {1.0, 0.0};
    case Orientation::S: return {0.0, -1.0};
    case Orientation::W: return {-1.0, 0.0};
  }
  return {0.0, 0.0};
}

char to_char(Orientation o) { return "NESW"[index(o)]; }

std::optional<Orientation> orientation_from_string(std::string_view s) {
  if (s == "N") return Orientation::N;
  if (s == "E") return Orientation::E;
  if (s == "S") return Orientation::S;
  if (s == "W") return Orientation::W;
  return std::nullopt;
}

double directional_gap(const Box& ref, const Box& query, Orientation dir) {
  switch (dir) {
    case Orientation::N: return query.min().y() - ref.max().y();
    case Orientation::S: return ref.min().y() - query.max().y();
    case Orientation::E: return query.min().x() - ref.max().x();
    case Orientation::W: return ref.min().x() - query.max().x();
  }
  return 0.0;
}

double lateral_overlap(const Box& ref, const Box& query, Orientation dir) {
  if (is_north_south(dir)) {
    return overlap_length(ref.min().x(), ref.max().x(), query.min().x(), query.max().x());
  }
  return overlap_length(ref.min().y(), ref.max().y(), query.min().y(), query.max().y());
}

double box_distance(const Box& a, const Box& b) {
  const double dx = std::max({0.0, a.min().x() - b.max().x(), b.min().x() - a.max().x()});
  const double dy = std::max({0.0, a.min().y() - b.max().y(), b.min().y() - a.max().y()});
  return std::hypot(dx, dy);
}

double intersection_area(const Box& a, const Box& b) {
  const double ox = overlap_length(a.min().x(), a.max().x(), b.min().x(), b.max().x());
  const double oy = overlap_length(a.min().y(), a.max().y(), b.min().y(), b.max().y());
  return (ox > 0.0 && oy > 0.0) ? ox * oy : 0.0;
}

}  // namespace placeprog
