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

// File formats: goal files, dialogue/exemplar files, ontologies, transcript
// files, and the on-disk CoNLL-U parse cache.
//
// Goal files come in two shapes. The line-delimited form has one JSON object
// per line, either a bare goal ({"hotel": {"info": ...}}) or a record
// {"goal_id": ..., "goal": <object or Python-dict string>}. The bundle form
// is a single JSON object keyed by dialogue id whose values carry a raw
// MultiWOZ "goal" (and optionally a "log" of turns).

#ifndef TODSIM_CORPUS_H_
#define TODSIM_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "todsim/dialogue.h"
#include "todsim/error.h"
#include "todsim/goal.h"
#include "todsim/providers.h"
#include "todsim/success.h"

namespace todsim {

enum class CorpusErrorKind { kFileUnreadable, kPoolTooSmall, kMalformedFile };
const char* CorpusErrorKindName(CorpusErrorKind kind);
using CorpusError = KindError<CorpusErrorKind, CorpusErrorKindName>;

std::string ReadFile(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);

struct Reject {
  std::size_t record = 0;  // 1-based line or bundle position
  std::string key;         // goal id when known
  std::string reason;
};

struct GoalSet {
  std::vector<Goal> goals;
  std::vector<Reject> rejects;
};

// Converts one raw MultiWOZ goal: drops "message", "topic", "fail_info",
// book "invalid"/"pre_invoke" and empty domains.
Goal GoalFromMultiwoz(const nlohmann::ordered_json& raw);

GoalSet ParseGoals(std::string_view text);
// Throws CorpusError(kFileUnreadable).
GoalSet LoadGoals(const std::filesystem::path& path);

struct DialogueRecord {
  std::string id;
  Goal goal;
  std::vector<Turn> turns;
};

// A bundle with "log" entries, or transcript lines. Malformed records throw
// CorpusError(kMalformedFile).
std::vector<DialogueRecord> ParseDialogues(std::string_view text);
std::vector<DialogueRecord> LoadDialogues(const std::filesystem::path& path);

// Closes a dataset dialogue for use as an exemplar: a trailing system turn
// is dropped and the last user turn is marked as ending the dialogue.
Exemplar ToExemplar(const DialogueRecord& record,
                    std::string_view end_token = kDefaultEndToken);

struct ExemplarPool {
  std::vector<Exemplar> exemplars;
  std::string source;
};

ExemplarPool LoadExemplarPool(const std::filesystem::path& path);

// `k` distinct pool indices by partial Fisher-Yates over mt19937_64(seed).
std::vector<std::size_t> SampleIndices(std::size_t n, std::size_t k,
                                       std::uint64_t seed);

// Throws CorpusError(kPoolTooSmall) when pool.size() < k.
std::vector<Exemplar> SelectExemplars(std::span<const Exemplar> pool,
                                      std::size_t k, std::uint64_t seed);

Ontology LoadOntology(const std::filesystem::path& path);

// Transcript lines (dialogue-core schema). Blank lines are skipped.
std::vector<Transcript> ParseTranscripts(std::string_view text);
std::vector<Transcript> LoadTranscripts(const std::filesystem::path& path);
std::string TranscriptsToJsonl(std::span<const Transcript> transcripts);
void WriteTranscripts(const std::filesystem::path& path,
                      std::span<const Transcript> transcripts);

// CoNLL-U blocks on disk, one file per utterance named by its FNV-1a hash.
// Concurrent readers, exclusive writer.
class ParseCache {
 public:
  explicit ParseCache(std::filesystem::path dir);

  std::optional<std::string> Get(std::string_view utterance) const;
  void Put(std::string_view utterance, std::string_view conllu);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path PathFor(std::string_view utterance) const;

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
};

// One CoNLL-U sentence block per utterance, in input order, separated by
// blank lines. Cached utterances are served from `cache`; each distinct
// uncached utterance costs one POST {"text": ...} expecting
// {"conllu": "..."} holding exactly one sentence. Throws ProviderError.
std::string FetchParses(std::span<const std::string> utterances,
                        const Endpoint& parser, ParseCache& cache);

}  // namespace todsim

#endif  // TODSIM_CORPUS_H_
