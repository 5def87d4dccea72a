/* Copyright 2026 The todsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// The interactive simulation loop, the single-turn gold mode, loop and
// hallucination detection, and batch runs with a manifest.

#ifndef TODSIM_ENGINE_H_
#define TODSIM_ENGINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "todsim/dialogue.h"
#include "todsim/goal.h"
#include "todsim/prompt.h"
#include "todsim/providers.h"
#include "todsim/success.h"

namespace todsim {

struct SessionLimits {
  int max_turn_pairs = 10;
  int loop_window = 2;
  int loop_repeats = 2;

  // Throws std::invalid_argument unless every field is >= 1.
  void Validate() const;
};

// Produces the timestamps stamped on transcripts.
using Clock = std::function<std::string()>;

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string UtcNow();
// Always "1970-01-01T00:00:00Z"; makes repeated runs byte-identical.
std::string EpochClock();

struct EngineConfig {
  CompletionParams completion;
  PromptTemplate prompt;
  SessionLimits limits;
  // Tokens kept free for the generated turn; the prompt budget is
  // completion.max_context - generation_reserve.
  int generation_reserve = 64;
  Ontology ontology = Ontology::DefaultMultiwoz();
  DomainLexicon lexicon = DefaultDomainLexicon();
  Clock clock = UtcNow;

  int PromptBudget() const { return completion.max_context - generation_reserve; }
};

// Runs user-simulator and TOD turns until the simulator emits the end token,
// a loop is detected, the pair limit is hit, or a provider fails. Never
// throws for provider or prompt failures; they end up in the termination.
Transcript RunDialogue(const Goal& goal, std::span<const Exemplar> exemplars,
                       CompletionProvider& completion, TodProvider& tod,
                       const EngineConfig& config);

// True iff the last `window` normalized (user, system) pairs also occur,
// identically, in each of the `repeats` windows directly before them. Only
// complete pairs are considered.
bool DetectLoop(std::span<const Turn> turns, int window, int repeats);

// One annotation per (user turn, off-goal domain) whose keywords appear in
// the turn. Matching is on normalized text and whole words.
std::vector<Annotation> FlagHallucination(std::span<const Turn> turns,
                                          const Goal& goal,
                                          const DomainLexicon& lexicon);

// Generates the next user turn after a gold history (empty, or ending with
// a system turn). No TOD call is made. Throws ProviderError, and
// PromptError when the prompt cannot fit.
Turn RunGoldTurn(std::span<const Turn> gold_history, const Goal& goal,
                 std::span<const Exemplar> exemplars,
                 CompletionProvider& completion, const EngineConfig& config);

// Per-dialogue provider construction; called concurrently when
// parallelism > 1, so implementations must be thread-safe.
struct ProviderFactory {
  std::function<std::unique_ptr<CompletionProvider>(std::size_t index)> completion;
  std::function<std::unique_ptr<TodProvider>(std::size_t index)> tod;
};

struct BatchConfig {
  EngineConfig engine;
  int parallelism = 1;
  std::size_t exemplars_per_dialogue = 2;
  // Recorded in the manifest.
  std::string goal_file;
  // When set, transcripts.jsonl and manifest.json are written here.
  std::filesystem::path output_dir;
};

struct TranscriptRef {
  std::size_t index = 0;
  std::string goal_id;
  std::string file;
  std::size_t line = 0;  // 1-based line within `file`
  std::string termination;
};

struct RunManifest {
  std::string run_id;
  std::string goal_file;
  std::uint64_t seed = 0;
  RunParams provider_params;
  std::vector<TranscriptRef> transcripts;
  std::map<std::string, int> termination_counts;

  nlohmann::ordered_json ToJson() const;
  static RunManifest FromJson(const nlohmann::ordered_json& doc);
};

struct BatchResult {
  RunManifest manifest;
  std::vector<Transcript> transcripts;
};

// Seed for dialogue `index` of a batch run with `seed`.
std::uint64_t DialogueSeed(std::uint64_t seed, std::size_t index);

// For each goal draws min(k, pool size) exemplars with DialogueSeed, runs
// RunDialogue, and aggregates terminations. Throws std::invalid_argument for
// an empty pool when goals are present; individual dialogue failures are
// recorded, never thrown.
BatchResult RunBatch(std::span<const Goal> goals,
                     std::span<const Exemplar> pool, std::uint64_t seed,
                     const BatchConfig& config, const ProviderFactory& providers);

}  // namespace todsim

#endif  // TODSIM_ENGINE_H_
