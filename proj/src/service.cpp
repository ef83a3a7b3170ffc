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

#include "placeprog/service.hpp"

#include "placeprog/error.hpp"
#include "placeprog/executor.hpp"
#include "placeprog/extraction.hpp"
#include "placeprog/io.hpp"
#include "placeprog/procgen.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>
#include <thread>

namespace placeprog {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ServiceResponse reply(int status, const json& j) { return {status, j.dump()}; }

ServiceResponse error_reply(const Error& e) {
  const int status = e.kind() == ErrorKind::NotFound ? 404 : 400;
  return reply(status, {{"error", e.what()}, {"kind", to_string(e.kind())}});
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

Query query_from_json(const json& j) {
  try {
    Query q;
    q.category = j.at("category").get<std::string>();
    const auto size = j.at("size");
    q.size = Vec2(size.at(0).get<double>(), size.at(1).get<double>());
    q.holds_humans = j.value("holds_humans", false);
    return q;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("bad query: ") + e.what());
  }
}

json query_to_json(const Query& q) {
  return {{"category", q.category}, {"size", {q.size.x(), q.size.y()}}, {"holds_humans", q.holds_humans}};
}

json placement_json(const Placement& p, const Scene* scene) {
  json j = {{"x", p.cell.x}, {"y", p.cell.y}, {"orientation", std::string(1, to_char(p.orientation))}};
  if (scene) {
    const Vec2 c = scene->cell_center(p.cell);
    j["position"] = {c.x(), c.y()};
  }
  return j;
}

json mask_summary(const PlacementMask& m) {
  json counts = json::array();
  for (auto o : kOrientations) counts.push_back(m.slice(o).count());
  return {{"mask", mask_to_json(m)}, {"count", m.count()}, {"orientation_counts", counts}};
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool safe_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

}  // namespace

json annotation_to_json(const AnnotationRecord& r) {
  json rects = json::object();
  for (auto o : kOrientations) {
    json list = json::array();
    for (const auto& q : r.rects[index(o)]) list.push_back({q.x0, q.y0, q.x1, q.y1});
    rects[std::string(1, to_char(o))] = list;
  }
  return {{"case_id", r.case_id}, {"annotator", r.annotator}, {"timestamp", r.timestamp}, {"rects", rects}};
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k != "case_id" && k != "annotator" && k != "timestamp" && k != "rects") {
        throw Error(ErrorKind::Schema, "unknown annotation key '" + k + "'");
      }
    }
    r.case_id = j.at("case_id").get<std::string>();
    r.annotator = j.value("annotator", std::string("anonymous"));
    r.timestamp = j.value("timestamp", std::string());
    for (const auto& [k, list] : j.at("rects").items()) {
      auto o = orientation_from_string(k);
      if (!o) throw Error(ErrorKind::Schema, "unknown orientation '" + k + "' in annotation");
      for (const auto& q : list) {
        if (q.size() != 4) throw Error(ErrorKind::Schema, "a rectangle is [x0, y0, x1, y1]");
        r.rects[index(*o)].push_back({q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed annotation: ") + e.what());
  }
  return r;
}

PlacementMask rasterize_annotation(const AnnotationRecord& r, const Scene& context) {
  PlacementMask m(context.grid);
  bool any = false;
  for (auto o : kOrientations) {
    for (const auto& q : r.rects[index(o)]) {
      if (!(std::isfinite(q.x0) && std::isfinite(q.y0) && std::isfinite(q.x1) && std::isfinite(q.y1)) || q.x1 <= q.x0 ||
          q.y1 <= q.y0) {
        throw Error(ErrorKind::Validation, "degenerate annotation rectangle");
      }
      for (const Vec2& p : {Vec2(q.x0, q.y0), Vec2(q.x1, q.y0), Vec2(q.x0, q.y1), Vec2(q.x1, q.y1),
                            Vec2(0.5 * (q.x0 + q.x1), 0.5 * (q.y0 + q.y1))}) {
        if (!context.contains_point(p)) throw Error(ErrorKind::Validation, "annotation rectangle leaves the room");
      }
      const CellRect cells = rasterize_box(Box(Vec2(q.x0, q.y0), Vec2(q.x1, q.y1)), context.origin, context.grid)
                                 .clipped(context.grid);
      m.slice(o).fill_rect(cells);
      any = true;
    }
  }
  if (!any) throw Error(ErrorKind::Validation, "annotation has no rectangles");
  return m;
}

BitGrid annotation_truth(const std::vector<AnnotationRecord>& records, const Scene& context) {
  BitGrid out(context.grid.w, context.grid.h);
  for (const auto& r : records) out |= collapse_orientations(rasterize_annotation(r, context));
  return out;
}

struct Service::Http {
  httplib::Server server;
  std::thread thread;
};

Service::Service(fs::path data_dir, RunConfig cfg) : dir_(std::move(data_dir)), cfg_(std::move(cfg)) {
  cfg_.sync();
  for (auto& [id, scene] : load_scene_dir(dir_, cfg_.scene)) scenes_[id] = std::make_shared<const Scene>(std::move(scene));

  if (fs::exists(dir_ / "cases.json")) {
    const json cj = read_json_file(dir_ / "cases.json");
    try {
      for (const auto& c : cj) {
        cases_.push_back({c.at("id").get<std::string>(), c.at("scene_id").get<std::string>(),
                          c.at("object_id").get<std::string>()});
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, std::string("malformed cases.json: ") + e.what());
    }
  } else {
    for (const auto& [id, scene] : scenes_) {
      for (const auto& o : scene->furniture()) cases_.push_back({id + "." + o.id, id, o.id});
    }
  }
  for (const auto& c : cases_) {
    if (!safe_id(c.id)) throw Error(ErrorKind::Schema, "case id '" + c.id + "' has unsupported characters");
    auto it = scenes_.find(c.scene_id);
    if (it == scenes_.end() || !it->second->find(c.object_id)) {
      throw Error(ErrorKind::NotFound, "case '" + c.id + "' names an unknown scene or object");
    }
  }

  if (is_model_dir(dir_)) synthesis_ = load_trained_model(dir_, cfg_.scene);
}

Service::~Service() { stop(); }

const Service::CaseInfo* Service::find_case(const std::string& id) const {
  for (const auto& c : cases_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

Scene Service::case_context(const CaseInfo& c) const { return placement_context(*scenes_.at(c.scene_id), c.object_id); }

std::mutex& Service::case_mutex(const std::string& id) {
  std::lock_guard lock(locks_mu_);
  auto& m = case_locks_[id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

Scene Service::resolve_scene(const json& body) const {
  if (body.contains("scene_id")) {
    const auto id = body.at("scene_id").get<std::string>();
    auto it = scenes_.find(id);
    if (it == scenes_.end()) throw Error(ErrorKind::NotFound, "unknown scene '" + id + "'");
    return *it->second;
  }
  if (body.contains("scene")) return scene_from_json(body.at("scene"), cfg_.scene);
  throw Error(ErrorKind::Schema, "request needs scene_id or scene");
}

ServiceResponse Service::handle(const ServiceRequest& req) {
  try {
    const auto parts = split_path(req.path);
    auto body = [&] {
      try {
        return req.body.empty() ? json::object() : json::parse(req.body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Schema, std::string("request body is not JSON: ") + e.what());
      }
    };
    if (req.method == "GET") {
      if (parts == std::vector<std::string>{"health"}) {
        return reply(200, {{"status", "ok"}, {"scenes", scenes_.size()}, {"cases", cases_.size()},
                           {"synthesis", synthesis_ != nullptr}});
      }
      if (parts.size() == 1 && parts[0] == "scenes") return get_scenes();
      if (parts.size() == 2 && parts[0] == "scenes") return get_scene(parts[1]);
      if (parts.size() == 1 && parts[0] == "cases") return get_cases();
      if (parts.size() == 2 && parts[0] == "cases") return get_case(parts[1]);
      if (parts.size() == 1 && parts[0] == "annotations") {
        auto it = req.params.find("case");
        if (it == req.params.end()) throw Error(ErrorKind::Schema, "missing ?case= parameter");
        return get_annotations(it->second);
      }
    } else if (req.method == "POST" && parts.size() == 1) {
      if (parts[0] == "execute") return post_execute(body());
      if (parts[0] == "sample") return post_sample(body());
      if (parts[0] == "step") return post_step(body());
      if (parts[0] == "annotations") return post_annotation(body());
    }
    return reply(404, {{"error", "no route for " + req.method + " " + req.path}, {"kind", "not_found"}});
  } catch (const Error& e) {
    return error_reply(e);
  } catch (const json::exception& e) {
    return reply(400, {{"error", e.what()}, {"kind", "schema"}});
  }
}

ServiceResponse Service::get_scenes() {
  json list = json::array();
  for (const auto& [id, s] : scenes_) {
    list.push_back({{"id", id}, {"scene_type", s->scene_type}, {"objects", s->furniture().size()}});
  }
  return reply(200, {{"scenes", list}});
}

ServiceResponse Service::get_scene(const std::string& id) {
  auto it = scenes_.find(id);
  if (it == scenes_.end()) throw Error(ErrorKind::NotFound, "unknown scene '" + id + "'");
  json j = scene_to_json(*it->second);
  j["id"] = id;
  return reply(200, j);
}

ServiceResponse Service::get_cases() {
  json list = json::array();
  for (const auto& c : cases_) list.push_back({{"id", c.id}, {"scene_id", c.scene_id}, {"object_id", c.object_id}});
  return reply(200, {{"cases", list}});
}

ServiceResponse Service::get_case(const std::string& id) {
  const CaseInfo* c = find_case(id);
  if (!c) throw Error(ErrorKind::NotFound, "unknown case '" + id + "'");
  const Scene ctx = case_context(*c);
  const ObservedPlacement obs = observe(*scenes_.at(c->scene_id), c->object_id);
  return reply(200, {{"id", c->id},
                     {"scene_id", c->scene_id},
                     {"object_id", c->object_id},
                     {"scene", scene_to_json(ctx)},
                     {"query", query_to_json(obs.query)},
                     {"grid", {{"w", ctx.grid.w}, {"h", ctx.grid.h}, {"cell", ctx.grid.cell}}},
                     {"origin", {ctx.origin.x(), ctx.origin.y()}}});
}

ServiceResponse Service::post_execute(const json& body) {
  const Scene scene = resolve_scene(body);
  const PlacementProgram p = parse_program(body.at("program_text").get<std::string>());
  validate_program(p);
  const ExecutionContext ctx(scene, query_from_json(body.at("query")), cfg_.executor);
  return reply(200, mask_summary(execute_program(p, ctx)));
}

ServiceResponse Service::post_sample(const json& body) {
  const int k = body.value("k", 1);
  const auto seed = body.value("seed", std::uint64_t{0});
  if (k < 1 || k > 10000) throw Error(ErrorKind::Validation, "k must lie in [1, 10000]");
  std::optional<Scene> scene;
  if (body.contains("scene_id") || body.contains("scene")) scene = resolve_scene(body);
  PlacementMask mask;
  if (body.contains("mask")) {
    mask = mask_from_json(body.at("mask"));
  } else {
    if (!scene) throw Error(ErrorKind::Schema, "sample needs a mask or a scene with a program");
    const PlacementProgram p = parse_program(body.at("program_text").get<std::string>());
    validate_program(p);
    mask = execute_program(p, ExecutionContext(*scene, query_from_json(body.at("query")), cfg_.executor));
  }
  if (mask.empty()) throw Error(ErrorKind::Validation, "cannot sample an empty mask");
  json list = json::array();
  for (const auto& p : sample_placements(mask, k, seed)) list.push_back(placement_json(p, scene ? &*scene : nullptr));
  return reply(200, {{"placements", list}});
}

ServiceResponse Service::post_step(const json& body) {
  if (!synthesis_) throw Error(ErrorKind::NotFound, "no synthesis model in the data directory");
  const Scene scene = resolve_scene(body);
  SynthesisConfig cfg = cfg_.synthesis;
  cfg.max_objects = body.value("max_objects", cfg.max_objects);
  std::mt19937_64 rng(body.value("seed", std::uint64_t{0}));
  const StepResult r = step(scene, synthesis_->synthesis, cfg, rng);
  json j = {{"stopped", r.stopped()}, {"scene", scene_to_json(r.scene)}};
  if (r.placed) {
    j["placed"] = {{"id", r.placed->id},
                   {"category", r.placed->category},
                   {"size", {r.placed->size.x(), r.placed->size.y()}},
                   {"position", {r.placed->position.x(), r.placed->position.y()}},
                   {"orientation", std::string(1, to_char(r.placed->orientation))}};
    j["program"] = serialize_program(r.program);
    j["score"] = r.score;
  }
  return reply(200, j);
}

ServiceResponse Service::post_annotation(const json& body) {
  AnnotationRecord r = annotation_from_json(body);
  const CaseInfo* c = find_case(r.case_id);
  if (!c) throw Error(ErrorKind::NotFound, "unknown case '" + r.case_id + "'");
  if (r.timestamp.empty()) r.timestamp = utc_now();
  const PlacementMask m = rasterize_annotation(r, case_context(*c));

  json stored = annotation_to_json(r);
  stored["mask"] = mask_to_json(m);
  std::lock_guard lock(case_mutex(c->id));
  const fs::path file = dir_ / "annotations" / (c->id + ".json");
  json all = fs::exists(file) ? read_json_file(file) : json::array();
  all.push_back(stored);
  write_json_file(file, all);
  stored["count"] = m.count();
  return reply(200, stored);
}

ServiceResponse Service::get_annotations(const std::string& case_id) {
  const CaseInfo* c = find_case(case_id);
  if (!c) throw Error(ErrorKind::NotFound, "unknown case '" + case_id + "'");
  std::lock_guard lock(case_mutex(c->id));
  const fs::path file = dir_ / "annotations" / (c->id + ".json");
  return reply(200, {{"case_id", c->id}, {"annotations", fs::exists(file) ? read_json_file(file) : json::array()}});
}

int Service::start(const std::string& host, int port) {
  if (http_) throw Error(ErrorKind::Precondition, "service already running");
  http_ = std::make_unique<Http>();
  auto route = [this](const httplib::Request& hreq, httplib::Response& hres) {
    ServiceRequest req{hreq.method, hreq.path, {}, hreq.body};
    for (const auto& [k, v] : hreq.params) req.params[k] = v;
    const ServiceResponse res = handle(req);
    hres.status = res.status;
    hres.set_content(res.body, "application/json");
  };
  http_->server.Get(R"(/.*)", route);
  http_->server.Post(R"(/.*)", route);
  const int bound = port == 0 ? http_->server.bind_to_any_port(host) : (http_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    http_.reset();
    throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  http_->thread = std::thread([this] { http_->server.listen_after_bind(); });
  http_->server.wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  start(host, port);
  if (http_->thread.joinable()) http_->thread.join();
}

void Service::stop() {
  if (!http_) return;
  http_->server.stop();
  if (http_->thread.joinable()) http_->thread.join();
  http_.reset();
}

}  // namespace placeprog
