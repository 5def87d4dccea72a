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

// Transcript data model: turns, terminations, exemplars, and their
// line-delimited JSON persistence.

#ifndef TODSIM_DIALOGUE_H_
#define TODSIM_DIALOGUE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "todsim/error.h"
#include "todsim/goal.h"

namespace todsim {

inline constexpr std::string_view kDefaultEndToken = "<end_dialog>";

enum class Speaker { kUser, kSystem };
const char* SpeakerName(Speaker speaker);  // "user" / "system"

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string text;      // end token stripped
  std::string raw_text;  // as produced
  int index = 0;
  bool ends_dialogue = false;

  friend bool operator==(const Turn&, const Turn&) = default;
};

Turn MakeUserTurn(std::string raw, int index,
                  std::string_view end_token = kDefaultEndToken);
Turn MakeSystemTurn(std::string text, int index);

// True if turns alternate User/System starting with User and indices count
// up from 0.
bool IsWellFormedHistory(std::span<const Turn> turns);

enum class TerminationKind {
  kEndTokenComplete,
  kEndTokenPremature,
  kLoopDetected,
  kMaxTurnsExceeded,
  kProviderError,
  kHallucinationFlagged,
  // Human2Bot sessions closed by the annotator; detail is the outcome.
  kHumanClosed,
};
const char* TerminationKindName(TerminationKind kind);
std::optional<TerminationKind> TerminationKindFromName(std::string_view name);

struct TerminationReason {
  TerminationKind kind = TerminationKind::kMaxTurnsExceeded;
  std::string detail;

  friend bool operator==(const TerminationReason&,
                         const TerminationReason&) = default;
};

// Advisory finding attached to a transcript (e.g. a hallucinated domain).
struct Annotation {
  int turn_index = 0;
  TerminationKind kind = TerminationKind::kHallucinationFlagged;
  std::string domain;
  std::string keyword;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// Sampling parameters recorded with every transcript.
struct RunParams {
  double temperature = 0.5;
  int max_context = 2048;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const RunParams&, const RunParams&) = default;
};

struct Transcript {
  Goal goal;
  std::vector<Turn> turns;
  std::optional<TerminationReason> termination;
  std::vector<std::string> exemplar_ids;
  RunParams provider_params;
  std::string started_at;
  std::string finished_at;
  std::vector<Annotation> annotations;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  explicit Transcript(Goal g) : goal(std::move(g)) {}

  // Sets the termination; throws std::logic_error if already closed.
  void Close(TerminationReason reason, std::string finished);
  bool closed() const { return termination.has_value(); }

  int user_turn_count() const;
};

// A complete goal + dialogue pair for in-context learning. The final user
// turn carries the end token.
struct Exemplar {
  std::string id;
  Goal goal;
  std::vector<Turn> turns;
};

// Validates the exemplar invariant; throws std::invalid_argument.
Exemplar MakeExemplar(std::string id, Goal goal, std::vector<Turn> turns);

struct EndTokenResult {
  bool is_end = false;
  std::string cleaned;
};

// Detects and strips every occurrence of `end_token` together with the
// whitespace around it.
EndTokenResult DetectEndToken(std::string_view text,
                              std::string_view end_token = kDefaultEndToken);

// Lowercases, turns punctuation into spaces, collapses whitespace.
std::string NormalizeUtterance(std::string_view text);

// Persistence: one JSON object per line,
//   {goal_id, goal, turns[{speaker,text,raw_text}], termination,
//    provider_params, exemplar_ids, timestamps, annotations, metadata}
nlohmann::ordered_json TranscriptToJson(const Transcript& transcript);
Transcript TranscriptFromJson(const nlohmann::ordered_json& doc,
                              std::string_view end_token = kDefaultEndToken);
std::string TranscriptToLine(const Transcript& transcript);

nlohmann::ordered_json TurnsToJson(std::span<const Turn> turns);
std::vector<Turn> TurnsFromJson(const nlohmann::ordered_json& doc,
                                std::string_view end_token = kDefaultEndToken);

}  // namespace todsim

#endif  // TODSIM_DIALOGUE_H_
