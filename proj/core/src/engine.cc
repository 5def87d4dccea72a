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

#include "todsim/engine.h"

#include <atomic>
#include <ctime>
#include <stdexcept>
#include <thread>

#include "text_util.h"
#include "todsim/corpus.h"

namespace todsim {

void SessionLimits::Validate() const {
  if (max_turn_pairs < 1 || loop_window < 1 || loop_repeats < 1) {
    throw std::invalid_argument(
        "session limits must all be >= 1 (max_turn_pairs, loop_window, "
        "loop_repeats)");
  }
}

std::string UtcNow() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string EpochClock() { return "1970-01-01T00:00:00Z"; }

bool DetectLoop(std::span<const Turn> turns, int window, int repeats) {
  if (window < 1 || repeats < 1) return false;
  std::vector<std::string> pairs;
  for (std::size_t i = 0; i + 1 < turns.size(); i += 2) {
    pairs.push_back(NormalizeUtterance(turns[i].text) + "\x1f" +
                    NormalizeUtterance(turns[i + 1].text));
  }
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t need = w * static_cast<std::size_t>(repeats + 1);
  if (pairs.size() < need) return false;
  const std::size_t last = pairs.size() - w;
  for (std::size_t r = 1; r <= static_cast<std::size_t>(repeats); ++r) {
    for (std::size_t k = 0; k < w; ++k) {
      if (pairs[last + k] != pairs[last - r * w + k]) return false;
    }
  }
  return true;
}

std::vector<Annotation> FlagHallucination(std::span<const Turn> turns,
                                          const Goal& goal,
                                          const DomainLexicon& lexicon) {
  std::vector<Annotation> out;
  for (const Turn& t : turns) {
    if (t.speaker != Speaker::kUser) continue;
    const std::string norm = NormalizeUtterance(t.text);
    for (const auto& [domain, keywords] : lexicon) {
      if (goal.HasDomain(domain)) continue;
      for (const std::string& kw : keywords) {
        if (internal::ContainsWord(norm, NormalizeUtterance(kw))) {
          out.push_back({t.index, TerminationKind::kHallucinationFlagged, domain, kw});
          break;
        }
      }
    }
  }
  return out;
}

namespace {

// One user turn from the completion provider. Empty output is malformed.
Turn GenerateUserTurn(std::span<const Exemplar> exemplars, const Goal& goal,
                      std::span<const Turn> history, CompletionProvider& completion,
                      const EngineConfig& config) {
  BuiltPrompt prompt =
      BuildPrompt(exemplars, goal, history, config.PromptBudget(), config.prompt);
  std::string raw = completion.Complete(prompt.text, config.completion);
  Turn turn = MakeUserTurn(std::move(raw), static_cast<int>(history.size()),
                           config.prompt.end_token);
  if (turn.text.empty() && !turn.ends_dialogue) {
    throw ProviderError(ProviderErrorKind::kMalformed,
                        "completion returned an empty user turn");
  }
  return turn;
}

std::string Describe(const Error& e) { return e.kind_name() + ": " + e.detail(); }

}  // namespace

Turn RunGoldTurn(std::span<const Turn> gold_history, const Goal& goal,
                 std::span<const Exemplar> exemplars, CompletionProvider& completion,
                 const EngineConfig& config) {
  if (!gold_history.empty() && gold_history.back().speaker != Speaker::kSystem) {
    throw std::invalid_argument("gold history must end with a system turn");
  }
  return GenerateUserTurn(exemplars, goal, gold_history, completion, config);
}

Transcript RunDialogue(const Goal& goal, std::span<const Exemplar> exemplars,
                       CompletionProvider& completion, TodProvider& tod,
                       const EngineConfig& config) {
  Transcript tr(goal);
  tr.started_at = config.clock();
  tr.provider_params = config.completion.ToRunParams();
  for (const Exemplar& ex : exemplars) tr.exemplar_ids.push_back(ex.id);

  auto finish = [&](TerminationKind kind, std::string detail) {
    tr.annotations = FlagHallucination(tr.turns, goal, config.lexicon);
    tr.Close({kind, std::move(detail)}, config.clock());
    return std::move(tr);
  };

  const SessionLimits& limits = config.limits;
  try {
    limits.Validate();
    for (int pair = 0; pair < limits.max_turn_pairs; ++pair) {
      Turn user = GenerateUserTurn(exemplars, goal, tr.turns, completion, config);
      const bool ended = user.ends_dialogue;
      tr.turns.push_back(std::move(user));
      if (ended) {
        DialogueResult r = EvaluateSuccess(tr.turns, goal, config.ontology);
        if (r.all_informed()) {
          return finish(TerminationKind::kEndTokenComplete, "");
        }
        std::vector<std::string> missing;
        for (const auto& [domain, ok] : r.inform) {
          if (!ok) missing.push_back(domain);
        }
        return finish(TerminationKind::kEndTokenPremature,
                      "uninformed: " + internal::Join(missing, ", "));
      }
      const Turn& last_user = tr.turns.back();
      std::string reply = tod.Respond(std::span<const Turn>(tr.turns).first(tr.turns.size() - 1),
                                      last_user.text);
      tr.turns.push_back(MakeSystemTurn(std::move(reply), static_cast<int>(tr.turns.size())));
      if (DetectLoop(tr.turns, limits.loop_window, limits.loop_repeats)) {
        return finish(TerminationKind::kLoopDetected,
                      "repeated at turn pair " + std::to_string(pair + 1));
      }
    }
    return finish(TerminationKind::kMaxTurnsExceeded,
                  "limit of " + std::to_string(limits.max_turn_pairs) + " turn pairs");
  } catch (const Error& e) {
    return finish(TerminationKind::kProviderError, Describe(e));
  } catch (const std::exception& e) {
    return finish(TerminationKind::kProviderError, e.what());
  }
}

// --------------------------------------------------------------------------
// Batch

std::uint64_t DialogueSeed(std::uint64_t seed, std::size_t index) {
  // splitmix64 finalizer.
  std::uint64_t z = seed + static_cast<std::uint64_t>(index) + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

nlohmann::ordered_json RunManifest::ToJson() const {
  nlohmann::ordered_json doc;
  doc["run_id"] = run_id;
  doc["goal_file"] = goal_file;
  doc["seed"] = seed;
  nlohmann::ordered_json params;
  params["temperature"] = provider_params.temperature;
  params["max_context"] = provider_params.max_context;
  params["seed"] = provider_params.seed ? nlohmann::ordered_json(*provider_params.seed)
                                        : nlohmann::ordered_json(nullptr);
  doc["provider_params"] = std::move(params);
  nlohmann::ordered_json refs = nlohmann::ordered_json::array();
  for (const TranscriptRef& r : transcripts) {
    refs.push_back({{"index", r.index},
                    {"goal_id", r.goal_id},
                    {"file", r.file},
                    {"line", r.line},
                    {"termination", r.termination}});
  }
  doc["transcripts"] = std::move(refs);
  doc["termination_counts"] = termination_counts;
  return doc;
}

RunManifest RunManifest::FromJson(const nlohmann::ordered_json& doc) {
  RunManifest m;
  m.run_id = doc.at("run_id").get<std::string>();
  m.goal_file = doc.value("goal_file", "");
  m.seed = doc.at("seed").get<std::uint64_t>();
  const auto& p = doc.at("provider_params");
  m.provider_params.temperature = p.at("temperature").get<double>();
  m.provider_params.max_context = p.at("max_context").get<int>();
  if (p.contains("seed") && !p.at("seed").is_null()) {
    m.provider_params.seed = p.at("seed").get<std::uint64_t>();
  }
  for (const auto& r : doc.at("transcripts")) {
    m.transcripts.push_back({r.at("index").get<std::size_t>(),
                             r.at("goal_id").get<std::string>(),
                             r.at("file").get<std::string>(),
                             r.at("line").get<std::size_t>(),
                             r.at("termination").get<std::string>()});
  }
  m.termination_counts =
      doc.at("termination_counts").get<std::map<std::string, int>>();
  return m;
}

namespace {

constexpr const char* kTranscriptFile = "transcripts.jsonl";
constexpr const char* kManifestFile = "manifest.json";

std::string RunId(std::span<const Goal> goals, std::uint64_t seed,
                  const BatchConfig& config) {
  std::string key = config.goal_file + "|" + std::to_string(seed) + "|" +
                    std::to_string(config.engine.completion.temperature) + "|" +
                    std::to_string(config.engine.completion.max_context) + "|" +
                    std::to_string(config.engine.limits.max_turn_pairs);
  for (const Goal& g : goals) key += "|" + SerializeGoal(g);
  return internal::Hex64(internal::Fnv1a64(key));
}

}  // namespace

BatchResult RunBatch(std::span<const Goal> goals, std::span<const Exemplar> pool,
                     std::uint64_t seed, const BatchConfig& config,
                     const ProviderFactory& providers) {
  if (!goals.empty() && pool.empty()) {
    throw std::invalid_argument("exemplar pool is empty");
  }
  const std::size_t k = std::min(config.exemplars_per_dialogue, pool.size());
  std::vector<std::optional<Transcript>> slots(goals.size());

  auto run_one = [&](std::size_t i) {
    const Goal& goal = goals[i];
    try {
      std::vector<Exemplar> ex = SelectExemplars(pool, k, DialogueSeed(seed, i));
      std::unique_ptr<CompletionProvider> completion = providers.completion(i);
      std::unique_ptr<TodProvider> tod = providers.tod(i);
      slots[i] = RunDialogue(goal, ex, *completion, *tod, config.engine);
    } catch (const std::exception& e) {
      Transcript t(goal);
      t.started_at = config.engine.clock();
      t.provider_params = config.engine.completion.ToRunParams();
      t.Close({TerminationKind::kProviderError, e.what()}, config.engine.clock());
      slots[i] = std::move(t);
    }
  };

  const std::size_t workers = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(std::max(config.parallelism, 1)),
                               goals.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < goals.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < goals.size();) run_one(i);
      });
    }
    for (auto& t : threads) t.join();
  }

  BatchResult out;
  RunManifest& m = out.manifest;
  m.run_id = RunId(goals, seed, config);
  m.goal_file = config.goal_file;
  m.seed = seed;
  m.provider_params = config.engine.completion.ToRunParams();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Transcript& t = *slots[i];
    const std::string kind = TerminationKindName(t.termination->kind);
    m.termination_counts[kind] += 1;
    m.transcripts.push_back({i, goals[i].source_id().value_or(std::to_string(i)),
                             kTranscriptFile, i + 1, kind});
    out.transcripts.push_back(std::move(t));
  }
  if (!config.output_dir.empty()) {
    WriteTranscripts(config.output_dir / kTranscriptFile, out.transcripts);
    WriteFileAtomic(config.output_dir / kManifestFile, m.ToJson().dump(2) + "\n");
  }
  return out;
}

}  // namespace todsim
