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

#include "placeprog/classifier.hpp"
#include "placeprog/executor.hpp"
#include "placeprog/extraction.hpp"
#include "placeprog/mask.hpp"
#include "placeprog/program.hpp"
#include "placeprog/scene.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace placeprog {

/// Scenes by id. Programs in a dataset refer to objects of these scenes.
using SceneCorpus = std::map<std::string, std::shared_ptr<const Scene>>;

struct DatasetEntry {
  std::string scene_id;
  std::string object_id;
  PlacementProgram program;
  /// "initial" or "combined@<iteration>".
  std::string provenance = "initial";
};

struct MetricsSnapshot {
  int iteration = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int entries = 0;
  int edited = 0;
  int replaced = 0;
};

struct ProgramDataset {
  std::vector<DatasetEntry> entries;
  int iteration = 0;
  std::vector<MetricsSnapshot> history;

  const DatasetEntry* find(const std::string& scene_id, const std::string& object_id) const;
};

/// The partial scene and query an entry's program places, built once per use.
ExecutionContext entry_context(const SceneCorpus& corpus, const DatasetEntry& e, const ExecutorConfig& exec);

struct ExtractionSummary {
  int extracted = 0;
  int skipped_unconstrained = 0;
  int skipped_collisions = 0;
};

/// Initial extraction over every furniture object of every scene. Objects without
/// constraints and scenes with major collisions are skipped and counted.
ProgramDataset extract_dataset(const SceneCorpus& corpus, const ExtractionConfig& cfg, const ExecutorConfig& exec,
                               int threads = 1, ExtractionSummary* summary = nullptr);

/// What a proposer is asked to place.
struct ProposalRequest {
  const Scene* context = nullptr;
  Query query;
  /// The entry being edited, excluded from retrieval.
  std::string scene_id;
  std::string object_id;
};

class Proposer {
 public:
  virtual ~Proposer() = default;
  virtual std::vector<PlacementProgram> propose(const ProposalRequest& req, int k, std::mt19937_64& rng) const = 0;
  virtual void retrain(const ProgramDataset& dataset, const SceneCorpus& corpus) = 0;
};

/// Nearest dataset entries of the same query category, with reference ids remapped to
/// same-category objects of the new scene (walls by facing, furniture by id then position).
class RetrievalProposer : public Proposer {
 public:
  std::vector<PlacementProgram> propose(const ProposalRequest& req, int k, std::mt19937_64& rng) const override;
  void retrain(const ProgramDataset& dataset, const SceneCorpus& corpus) override;

 private:
  struct Item {
    std::string scene_id;
    std::string object_id;
    Query query;
    Vec2 room_extent;
    std::map<std::string, int> counts;
    std::shared_ptr<const Scene> scene;
    PlacementProgram program;
  };
  std::vector<Item> items_;
};

/// Samples one- or two-leaf And-trees from the dataset's constraint type/direction frequencies.
class PriorSampler : public Proposer {
 public:
  std::vector<PlacementProgram> propose(const ProposalRequest& req, int k, std::mt19937_64& rng) const override;
  void retrain(const ProgramDataset& dataset, const SceneCorpus& corpus) override;

 private:
  std::map<std::pair<ConstraintType, Direction>, double> leaf_weights_;
  double two_leaf_fraction_ = 0.5;
};

/// Maps each reference of a program written for `source` onto an object of `target`.
/// Returns nullopt when some reference has no same-category counterpart.
std::optional<PlacementProgram> remap_references(const PlacementProgram& p, const Scene& source, const Scene& target);

enum class CandidateSource { Proposed, Relaxed, Original, Subtree };
const char* to_string(CandidateSource s);

struct Candidate {
  PlacementProgram program;
  CandidateSource source = CandidateSource::Original;
};

struct ScoredCandidate {
  PlacementProgram program;
  PlacementMask mask;
  double score = 0.0;
  std::array<long, 4> areas{};
  CandidateSource source = CandidateSource::Original;
  int orientation_count() const;
  /// The single nonempty orientation, or -1.
  int orientation() const;
};

/// Proposals plus the original, each with `n_relax` independent random deletions; deduplicated by text.
std::vector<Candidate> generate_candidates(const PlacementProgram& original, const std::vector<PlacementProgram>& proposals,
                                           int n_relax, std::mt19937_64& rng);

/// Drops empty and unconstrained programs and splits multi-orientation ones into
/// single-orientation subtrees. Output is deduplicated by mask.
std::vector<ScoredCandidate> filter_and_split(const std::vector<Candidate>& candidates, const ExecutionContext& ctx,
                                              double max_coverage);

/// Per orientation, the largest above-threshold candidate; the winners are or-joined.
/// Returns nullopt when nothing clears the threshold.
std::optional<PlacementProgram> combine(const std::vector<ScoredCandidate>& scored, double threshold);

struct BootstrapConfig {
  double subset_fraction = 0.25;
  int n_relax = 8;
  int n_proposals = 12;
  double max_coverage = 0.5;
  int m_samples = 10;
  double threshold = 0.6;
  int dilation_radius = 2;
  ExecutorConfig executor;
};

/// Collapsed ground-truth masks keyed by (scene id, object id), used for metric snapshots.
using TruthMasks = std::map<std::pair<std::string, std::string>, BitGrid>;

MetricsSnapshot evaluate_dataset(const ProgramDataset& dataset, const SceneCorpus& corpus, const TruthMasks& truth,
                                 const ExecutorConfig& exec, int dilation_radius, int threads = 1);

/// One self-training iteration. The input is never modified; any failure propagates
/// before the proposer is retrained.
ProgramDataset run_iteration(const ProgramDataset& dataset, const SceneCorpus& corpus, Proposer& proposer,
                             const PlacementScorer& scorer, const BootstrapConfig& cfg, std::uint64_t seed,
                             const TruthMasks* truth = nullptr, int threads = 1);

/// Layout: programs/<scene>/<object>.prog plus manifest.json. The directory is replaced as a whole.
void save_dataset(const ProgramDataset& dataset, const std::filesystem::path& dir);
ProgramDataset load_dataset(const std::filesystem::path& dir);
nlohmann::json snapshot_to_json(const MetricsSnapshot& s);

}  // namespace placeprog
