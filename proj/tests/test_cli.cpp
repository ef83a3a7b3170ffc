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

#include "placeprog/io.hpp"

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

using namespace placeprog;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(PLACEPROG_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
  }
  return out;
}

struct Scratch {
  fs::path dir = fs::temp_directory_path() / "placeprog_cli";
  Scratch() {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string at(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("cli stages are reproducible") {
  Scratch s;
  REQUIRE(run("procgen --n 8 --seed 4 --threads 1 --out " + s.at("a")) == 0);
  REQUIRE(run("procgen --n 8 --seed 4 --threads 6 --out " + s.at("b")) == 0);
  const auto a = tree(s.at("a"));
  CHECK(a.size() > 8);
  CHECK(a == tree(s.at("b")));
  CHECK(a.count("run.json") == 1);
  const auto manifest = nlohmann::json::parse(a.at("run.json"));
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["stage"] == "procgen");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);

  REQUIRE(run("procgen --n 8 --seed 5 --out " + s.at("c")) == 0);
  CHECK(tree(s.at("c")) != a);

  REQUIRE(run("extract --scenes " + s.at("a") + " --seed 1 --out " + s.at("x1")) == 0);
  REQUIRE(run("extract --scenes " + s.at("a") + " --seed 1 --threads 3 --out " + s.at("x2")) == 0);
  CHECK(tree(s.at("x1")) == tree(s.at("x2")));
  CHECK(fs::exists(s.at("x1") + "/summary.json"));
}

TEST_CASE("cli exit codes") {
  Scratch s;
  CHECK(run("--help") == 0);
  CHECK(run("procgen --help") == 0);
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("procgen --n 2 --bogus 1 --out " + s.at("o")) == 2);
  CHECK(run("procgen --n 2") == 2);
  CHECK(run("procgen --n 2 --config /nonexistent.json --out " + s.at("o")) == 2);

  write_json_file(s.dir / "typo.json", {{"grdi", {{"w", 64}}}});
  CHECK(run("procgen --n 2 --config " + s.at("typo.json") + " --out " + s.at("o")) == 2);
  write_json_file(s.dir / "range.json", {{"classifier", {{"threshold", 4.0}}}});
  CHECK(run("procgen --n 2 --config " + s.at("range.json") + " --out " + s.at("o")) == 2);
  CHECK(run("procgen --n 2 --set classifier.threshold=4 --out " + s.at("o")) == 2);
  CHECK(run("procgen --n 2 --set nokey --out " + s.at("o")) == 2);

  REQUIRE(run("procgen --n 2 --set procgen.scene_type=studio --out " + s.at("ok")) == 0);
  const auto manifest = read_json_file(s.dir / "ok" / "run.json");
  CHECK(manifest["config"]["procgen"]["scene_type"] == "studio");
  CHECK(run("extract --scenes " + s.at("missing") + " --out " + s.at("e")) == 2);
}
