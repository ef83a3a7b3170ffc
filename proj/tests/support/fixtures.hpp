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

// Scene builders shared by the unit tests and the acceptance suite.
#pragma once

#include "placeprog/scene.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace placeprog::testing {

inline ObjectInstance object(std::string id, std::string category, Vec2 size, Vec2 position,
                             Orientation o = Orientation::N, bool holds_humans = false) {
  ObjectInstance obj;
  obj.id = std::move(id);
  obj.category = std::move(category);
  obj.size = size;
  obj.position = position;
  obj.orientation = o;
  obj.holds_humans = holds_humans;
  return obj;
}

inline nlohmann::json scene_json(const std::vector<Vec2>& room, const std::vector<ObjectInstance>& furniture,
                                 const std::string& type = "bedroom") {
  nlohmann::json j = {{"scene_type", type}, {"room", nlohmann::json::array()}, {"objects", nlohmann::json::array()}};
  for (const auto& p : room) j["room"].push_back({p.x(), p.y()});
  for (const auto& o : furniture) {
    j["objects"].push_back({{"id", o.id},
                            {"category", o.category},
                            {"size", {o.size.x(), o.size.y()}},
                            {"position", {o.position.x(), o.position.y()}},
                            {"orientation", std::string(1, to_char(o.orientation))},
                            {"holds_humans", o.holds_humans}});
  }
  return j;
}

inline std::vector<Vec2> rect_room(double w, double h) { return {{0, 0}, {w, 0}, {w, h}, {0, h}}; }

/// L shape: a w x h rectangle with the (w - notch_x) x (h - notch_y) top-right corner removed.
inline std::vector<Vec2> l_room(double w, double h, double notch_x, double notch_y) {
  return {{0, 0}, {w, 0}, {w, notch_y}, {notch_x, notch_y}, {notch_x, h}, {0, h}};
}

inline Scene make_scene(const std::vector<Vec2>& room, const std::vector<ObjectInstance>& furniture = {},
                        const SceneOptions& opts = {}) {
  return scene_from_json(scene_json(room, furniture), opts);
}

inline SceneOptions small_grid(int w, int h, double cell) {
  SceneOptions o;
  o.grid = GridSpec{w, h, cell};
  return o;
}

}  // namespace placeprog::testing
