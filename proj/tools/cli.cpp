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

// placeprog command line: one subcommand per pipeline stage.
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include "placeprog/bootstrap.hpp"
#include "placeprog/classifier.hpp"
#include "placeprog/config.hpp"
#include "placeprog/error.hpp"
#include "placeprog/evaluation.hpp"
#include "placeprog/io.hpp"
#include "placeprog/parallel.hpp"
#include "placeprog/procgen.hpp"
#include "placeprog/service.hpp"
#include "placeprog/synthesis.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#ifndef PLACEPROG_VERSION
#define PLACEPROG_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace placeprog;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  int threads = 0;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load_config(const Common& c) {
  try {
    json doc = c.config.empty() ? json::object() : read_config_document(c.config);
    for (const auto& o : c.overrides) apply_config_override(doc, o);
    RunConfig cfg = run_config_from_json(doc);
    cfg.sync();
    validate_run_config(cfg);
    return cfg;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

void add_common(CLI::App* sub, Common& c, bool needs_out = true) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--config", c.config, "Run configuration JSON")->check(CLI::ExistingFile);
  sub->add_option("--set", c.overrides, "Config override, e.g. classifier.threshold=0.7 (repeatable)");
  auto* out = sub->add_option("--out", c.out, "Output directory");
  if (needs_out) out->required();
  sub->add_option("--threads", c.threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
}

/// Manifest written next to every stage's outputs. Only inputs that change results go in,
/// so reruns with the same seed and inputs are byte-identical.
void write_manifest(const Common& c, const RunConfig& cfg, const std::string& stage, json args) {
  json j = {{"stage", stage},
            {"seed", c.seed},
            {"config_hash", cfg.hash()},
            {"config", cfg.to_json()},
            {"args", std::move(args)},
            {"versions", {{"placeprog", PLACEPROG_VERSION}, {"manifest", 1}}}};
  write_json_file(fs::path(c.out) / "run.json", j);
}

/// Procgen output directories carry ground truth; plain scene directories do not.
std::vector<GeneratedScene> load_training(const std::string& dir, const RunConfig& cfg) {
  if (fs::is_directory(fs::path(dir) / "truth")) return load_generated(dir, cfg.scene);
  std::vector<GeneratedScene> out;
  for (auto& [id, scene] : load_scene_dir(dir, cfg.scene)) out.push_back({id, std::move(scene), {}});
  return out;
}

std::vector<Scene> plain_scenes(const std::string& dir, const RunConfig& cfg) {
  std::vector<Scene> out;
  for (auto& [id, scene] : load_scene_dir(dir, cfg.scene)) out.push_back(std::move(scene));
  return out;
}

void write_scenes(const fs::path& dir, const std::vector<std::pair<std::string, Scene>>& scenes) {
  for (const auto& [id, s] : scenes) write_json_file(dir / "scenes" / (id + ".json"), scene_to_json(s));
}

void copy_scenes(const fs::path& from, const fs::path& to, const RunConfig& cfg) {
  write_scenes(to, load_scene_dir(from, cfg.scene));
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::uint64_t text_seed(std::uint64_t seed, const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ULL;
  return derive_seed(seed, h);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Placement-program engine for indoor scenes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PLACEPROG_VERSION);
  Common c;
  std::function<void()> action;

  // procgen
  int n_scenes = 100;
  std::string grammar_path;
  auto* procgen = app.add_subcommand("procgen", "Generate oracle scenes with ground-truth programs and masks");
  add_common(procgen, c);
  procgen->add_option("--n", n_scenes, "Number of scenes")->check(CLI::PositiveNumber)->capture_default_str();
  procgen->add_option("--grammar", grammar_path, "Grammar JSON (default: built-in bedroom grammar)")
      ->check(CLI::ExistingFile);
  procgen->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      Grammar g = default_grammar();
      if (!grammar_path.empty()) {
        try {
          g = grammar_from_json(read_json_file(grammar_path));
          validate_grammar(g);
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      }
      const auto scenes = generate_dataset(g, n_scenes, c.seed, cfg.procgen, resolve_threads(c.threads));
      write_generated(scenes, c.out);
      write_json_file(fs::path(c.out) / "grammar.json", grammar_to_json(g));
      write_manifest(c, cfg, "procgen", {{"n", n_scenes}, {"grammar", grammar_path.empty() ? "default" : grammar_path}});
      print({{"scenes", scenes.size()}, {"out", c.out}});
    };
  });

  // extract
  std::string scenes_dir;
  auto* extract = app.add_subcommand("extract", "Extract one program per furniture object");
  add_common(extract, c);
  extract->add_option("--scenes", scenes_dir, "Scene directory")->required()->check(CLI::ExistingDirectory);
  extract->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      const auto scenes = load_training(scenes_dir, cfg);
      const SceneCorpus corpus = make_corpus(scenes);
      ExtractionSummary summary;
      ProgramDataset d = extract_dataset(corpus, cfg.extraction, cfg.executor, resolve_threads(c.threads), &summary);
      const TruthMasks truth = truth_masks(scenes);
      if (!truth.empty()) {
        d.history.push_back(evaluate_dataset(d, corpus, truth, cfg.executor, cfg.evaluation.dilation_radius,
                                             resolve_threads(c.threads)));
      }
      save_dataset(d, c.out);
      const json s = {{"extracted", summary.extracted},
                      {"skipped_unconstrained", summary.skipped_unconstrained},
                      {"skipped_collisions", summary.skipped_collisions}};
      write_json_file(fs::path(c.out) / "summary.json", s);
      write_manifest(c, cfg, "extract", {{"scenes", scenes_dir}});
      print(s);
    };
  });

  // bootstrap run
  int iters = -1;
  auto* bootstrap = app.add_subcommand("bootstrap", "Self-training over an extracted program dataset");
  bootstrap->require_subcommand(1);
  auto* bootstrap_run = bootstrap->add_subcommand("run", "Extract, train the classifier and iterate");
  add_common(bootstrap_run, c);
  bootstrap_run->add_option("--scenes", scenes_dir, "Training scene directory")->required()->check(CLI::ExistingDirectory);
  bootstrap_run->add_option("--iters", iters, "Iterations (default from config)")->check(CLI::NonNegativeNumber);
  bootstrap_run->callback([&] {
    action = [&] {
      RunConfig cfg = load_config(c);
      if (iters >= 0) cfg.bootstrap_iterations = iters;
      const auto scenes = load_training(scenes_dir, cfg);
      const PipelineResult r = run_pipeline(scenes, cfg.pipeline(), c.seed, resolve_threads(c.threads));
      const fs::path out(c.out);
      copy_scenes(scenes_dir, out, cfg);
      save_dataset(r.dataset, out / "dataset");
      json model = r.model.to_json();
      write_json_file(out / "classifier.json", model);
      json history = json::array();
      for (const auto& s : r.dataset.history) history.push_back(snapshot_to_json(s));
      write_json_file(out / "metrics.json", {{"history", history}});
      write_manifest(c, cfg, "bootstrap run", {{"scenes", scenes_dir}, {"iterations", cfg.bootstrap_iterations}});
      print({{"history", history}});
    };
  });

  // classifier train|eval
  std::string model_path;
  auto* classifier = app.add_subcommand("classifier", "Real/fake placement classifier");
  classifier->require_subcommand(1);
  auto* ctrain = classifier->add_subcommand("train", "Train on perturbed placements from a scene directory");
  add_common(ctrain, c);
  ctrain->add_option("--scenes", scenes_dir, "Training scene directory")->required()->check(CLI::ExistingDirectory);
  ctrain->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      const auto scenes = plain_scenes(scenes_dir, cfg);
      const ClassifierModel m = train_scene_classifier(scenes, cfg.pairs, cfg.classifier, cfg.executor, c.seed);
      write_json_file(fs::path(c.out) / "classifier.json", m.to_json());
      write_manifest(c, cfg, "classifier train", {{"scenes", scenes_dir}});
      print(m.to_json().at("metrics"));
    };
  });
  auto* ceval = classifier->add_subcommand("eval", "Consistency on oracle positive and relaxed negative masks");
  add_common(ceval, c);
  ceval->add_option("--scenes", scenes_dir, "Procgen scene directory with truth/")->required()->check(CLI::ExistingDirectory);
  ceval->add_option("--model", model_path, "classifier.json")->required()->check(CLI::ExistingFile);
  ceval->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      const auto scenes = load_generated(scenes_dir, cfg.scene);
      const ClassifierModel m = ClassifierModel::from_json(read_json_file(model_path));
      const auto eval_set = build_classifier_eval_set(scenes, derive_seed(c.seed, 1), cfg.executor);
      const ConsistencyReport r =
          classifier_consistency(m, eval_set, cfg.evaluation.consistency_repeats, cfg.bootstrap.m_samples,
                                 cfg.classifier.threshold, derive_seed(c.seed, 2), cfg.executor, resolve_threads(c.threads));
      write_json_file(fs::path(c.out) / "consistency.json", r.to_json());
      write_manifest(c, cfg, "classifier eval", {{"scenes", scenes_dir}, {"model", model_path}});
      print(r.to_json());
    };
  });

  // eval locdist|ckl|sca|sparsity
  std::string model_dir, generated_dir, reference_dir;
  auto* eval = app.add_subcommand("eval", "Evaluation harness");
  eval->require_subcommand(1);
  auto* locdist = eval->add_subcommand("locdist", "Location-distribution precision, recall and F1 against oracle masks");
  add_common(locdist, c);
  locdist->add_option("--model", model_dir, "Model directory from `bootstrap run`")->required()->check(CLI::ExistingDirectory);
  locdist->add_option("--scenes", scenes_dir, "Held-out procgen directory with truth/")->required()->check(CLI::ExistingDirectory);
  locdist->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      const auto model = load_trained_model(model_dir, cfg.scene);
      const auto scenes = load_generated(scenes_dir, cfg.scene);
      const auto cases = oracle_cases(scenes, cfg.evaluation.max_cases);
      const MaskPredictor predict = [&](const EvalCase& ec) {
        return predict_mask(*model, *ec.context, ec.query, cfg.synthesis, text_seed(c.seed, ec.id));
      };
      const EvalReport r = eval_location_distribution(cases, predict, cfg.evaluation.dilation_radius, "model",
                                                      resolve_threads(c.threads));
      write_json_file(fs::path(c.out) / "locdist.json", r.to_json());
      write_text_file_atomic(fs::path(c.out) / "locdist.csv", r.to_csv());
      write_manifest(c, cfg, "eval locdist", {{"model", model_dir}, {"scenes", scenes_dir}});
      print({{"cases", r.cases.size()}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
    };
  });
  auto* ckl = eval->add_subcommand("ckl", "Category KL divergence of generated scenes from a reference set");
  add_common(ckl, c);
  ckl->add_option("--generated", generated_dir, "Generated scene directory")->required()->check(CLI::ExistingDirectory);
  ckl->add_option("--reference", reference_dir, "Reference scene directory")->required()->check(CLI::ExistingDirectory);
  ckl->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      const double kl = category_kl(plain_scenes(generated_dir, cfg), plain_scenes(reference_dir, cfg));
      const json r = {{"category_kl", kl}};
      write_json_file(fs::path(c.out) / "ckl.json", r);
      write_text_file_atomic(fs::path(c.out) / "ckl.csv", "metric,value\ncategory_kl," + std::to_string(kl) + "\n");
      write_manifest(c, cfg, "eval ckl", {{"generated", generated_dir}, {"reference", reference_dir}});
      print(r);
    };
  });
  auto* sca = eval->add_subcommand("sca", "Accuracy of a real/fake scene classifier");
  add_common(sca, c);
  sca->add_option("--generated", generated_dir, "Generated scene directory")->required()->check(CLI::ExistingDirectory);
  sca->add_option("--reference", reference_dir, "Real scene directory")->required()->check(CLI::ExistingDirectory);
  sca->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      const auto gen = plain_scenes(generated_dir, cfg);
      const auto real = plain_scenes(reference_dir, cfg);
      json runs = json::array();
      std::string csv = "run,seed,accuracy\n";
      double mean = 0.0;
      for (int i = 0; i < cfg.evaluation.sca_seeds; ++i) {
        const std::uint64_t s = derive_seed(c.seed, static_cast<std::uint64_t>(i));
        const double acc = scene_classifier_accuracy(gen, real, s);
        runs.push_back({{"seed", s}, {"accuracy", acc}});
        csv += std::to_string(i) + "," + std::to_string(s) + "," + std::to_string(acc) + "\n";
        mean += acc / cfg.evaluation.sca_seeds;
      }
      const json r = {{"mean_accuracy", mean}, {"runs", runs}};
      write_json_file(fs::path(c.out) / "sca.json", r);
      write_text_file_atomic(fs::path(c.out) / "sca.csv", csv);
      write_manifest(c, cfg, "eval sca", {{"generated", generated_dir}, {"reference", reference_dir}});
      print(r);
    };
  });
  auto* sparsity = eval->add_subcommand("sparsity", "Bootstrap quality against the fraction of training scenes");
  add_common(sparsity, c);
  sparsity->add_option("--scenes", scenes_dir, "Procgen directory with truth/")->required()->check(CLI::ExistingDirectory);
  sparsity->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      const auto scenes = load_generated(scenes_dir, cfg.scene);
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < cfg.evaluation.sparsity_seeds; ++i) seeds.push_back(derive_seed(c.seed, static_cast<std::uint64_t>(i)));
      const auto rows = sparsity_sweep(scenes, cfg.evaluation.sparsity_fractions, seeds, cfg.pipeline(),
                                       resolve_threads(c.threads));
      json j = json::array();
      for (const auto& r : rows) {
        j.push_back({{"fraction", r.fraction}, {"seed", r.seed}, {"scenes", r.scenes}, {"precision", r.precision},
                     {"recall", r.recall}, {"f1", r.f1}});
      }
      write_json_file(fs::path(c.out) / "sparsity.json", j);
      write_text_file_atomic(fs::path(c.out) / "sparsity.csv", sparsity_csv(rows));
      write_manifest(c, cfg, "eval sparsity", {{"scenes", scenes_dir}});
      print(j);
    };
  });

  // synth and complete
  std::string plan;
  auto* synth = app.add_subcommand("synth", "Furnish empty floor plans");
  add_common(synth, c);
  synth->add_option("--model", model_dir, "Model directory from `bootstrap run`")->required()->check(CLI::ExistingDirectory);
  synth->add_option("--plan", plan, "Scene file or directory; only the room is kept")->required()->check(CLI::ExistingPath);
  auto* complete_cmd = app.add_subcommand("complete", "Add objects to a partial scene");
  add_common(complete_cmd, c);
  complete_cmd->add_option("--model", model_dir, "Model directory from `bootstrap run`")->required()->check(CLI::ExistingDirectory);
  complete_cmd->add_option("--scene", plan, "Scene file or directory")->required()->check(CLI::ExistingPath);
  auto furnish = [&](bool from_empty, const char* stage) {
    action = [&, from_empty, stage] {
      const RunConfig cfg = load_config(c);
      const auto model = load_trained_model(model_dir, cfg.scene);
      std::vector<std::pair<std::string, Scene>> inputs;
      if (fs::is_directory(plan)) {
        inputs = load_scene_dir(plan, cfg.scene);
      } else {
        inputs.emplace_back(fs::path(plan).stem().string(), load_scene_file(plan, cfg.scene));
      }
      std::vector<std::pair<std::string, Scene>> outputs(inputs.size());
      parallel_for(inputs.size(), resolve_threads(c.threads), [&](std::size_t i) {
        const std::uint64_t s = derive_seed(c.seed, i);
        const auto& [id, scene] = inputs[i];
        outputs[i] = {id, from_empty ? synthesize(scene, model->synthesis, cfg.synthesis, s)
                                     : complete(scene, model->synthesis, cfg.synthesis, s)};
      });
      write_scenes(c.out, outputs);
      write_manifest(c, cfg, stage, {{"model", model_dir}, {"input", plan}});
      print({{"scenes", outputs.size()}, {"out", c.out}});
    };
  };
  synth->callback([&] { furnish(true, "synth"); });
  complete_cmd->callback([&] { furnish(false, "complete"); });

  // serve
  std::string data_dir, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP API over a data directory");
  add_common(serve, c, false);
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--data", data_dir, "Data directory (default: $PLACEPROG_DATA)");
  serve->callback([&] {
    action = [&] {
      const RunConfig cfg = load_config(c);
      if (data_dir.empty()) {
        const char* env = std::getenv("PLACEPROG_DATA");
        if (!env || !*env) throw ConfigError("no data directory: pass --data or set PLACEPROG_DATA");
        data_dir = env;
      }
      Service service(data_dir, cfg);
      std::cerr << "serving " << data_dir << " on " << host << ":" << port << "\n";
      service.run(host, port);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (action) action();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
