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

#include "placeprog/bootstrap.hpp"
#include "placeprog/classifier.hpp"
#include "placeprog/config.hpp"
#include "placeprog/mask.hpp"
#include "placeprog/scene.hpp"
#include "placeprog/synthesis.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace placeprog {

/// Axis-aligned rectangle of admissible centroids, in room coordinates (meters).
struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool operator==(const Rect&) const = default;
};

struct AnnotationRecord {
  std::string case_id;
  std::string annotator;
  std::string timestamp;
  /// Indexed by orientation.
  std::array<std::vector<Rect>, 4> rects;
};

nlohmann::json annotation_to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const nlohmann::json& j);
/// Cells whose centers fall inside any rectangle of the matching orientation.
/// Throws Error(Validation) for degenerate rectangles or ones leaving the room.
PlacementMask rasterize_annotation(const AnnotationRecord& r, const Scene& context);
/// Several annotators of one case are merged by union.
BitGrid annotation_truth(const std::vector<AnnotationRecord>& records, const Scene& context);

struct ServiceRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct ServiceResponse {
  int status = 200;
  std::string body;
};

/// HTTP API over a data directory:
///   scenes/<id>.json        scenes (required)
///   cases.json              optional [{id, scene_id, object_id}]; otherwise one case per furniture object
///   annotations/<case>.json stored annotation records
///   dataset/, classifier.json  optional synthesis model for /step
class Service {
 public:
  Service(std::filesystem::path data_dir, RunConfig cfg = {});
  ~Service();

  ServiceResponse handle(const ServiceRequest& req);

  /// Binds to `port` (0 picks a free one) and serves on a background thread. Returns the port.
  int start(const std::string& host, int port);
  /// Blocks serving on the calling thread.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct CaseInfo {
    std::string id;
    std::string scene_id;
    std::string object_id;
  };

  ServiceResponse get_scenes();
  ServiceResponse get_scene(const std::string& id);
  ServiceResponse get_cases();
  ServiceResponse get_case(const std::string& id);
  ServiceResponse post_execute(const nlohmann::json& body);
  ServiceResponse post_sample(const nlohmann::json& body);
  ServiceResponse post_step(const nlohmann::json& body);
  ServiceResponse post_annotation(const nlohmann::json& body);
  ServiceResponse get_annotations(const std::string& case_id);

  Scene resolve_scene(const nlohmann::json& body) const;
  const CaseInfo* find_case(const std::string& id) const;
  Scene case_context(const CaseInfo& c) const;
  std::mutex& case_mutex(const std::string& id);

  std::filesystem::path dir_;
  RunConfig cfg_;
  std::map<std::string, std::shared_ptr<const Scene>> scenes_;
  std::vector<CaseInfo> cases_;
  std::unique_ptr<TrainedModel> synthesis_;
  std::mutex locks_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> case_locks_;
  struct Http;
  std::unique_ptr<Http> http_;
};

}  // namespace placeprog
