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

#ifndef TODSIM_PROMPT_H_
#define TODSIM_PROMPT_H_

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "todsim/dialogue.h"
#include "todsim/error.h"
#include "todsim/goal.h"
#include "todsim/providers.h"

namespace todsim {

enum class PromptErrorKind { kBudgetExceeded, kInvalidInput };
const char* PromptErrorKindName(PromptErrorKind kind);
using PromptError = KindError<PromptErrorKind, PromptErrorKindName>;

// Layout of the in-context prompt. Each exemplar and the target are rendered
// as
//
//   Goal:
//   - hotel info type hotel.
//   ...
//   Conversation:
//   User: ...
//   System: ...
//
// separated by a blank line; the target block ends with the bare user cue.
struct PromptTemplate {
  std::string goal_label = "Goal:";
  std::string conversation_label = "Conversation:";
  std::string user_prefix = "User: ";
  std::string system_prefix = "System: ";
  std::string block_separator = "\n\n";
  std::string end_token = std::string(kDefaultEndToken);
  bool emit_reqt = true;
  double tokens_per_word = kDefaultTokensPerWord;

  // The trailing cue: user_prefix without trailing whitespace.
  std::string UserCue() const;
  static PromptTemplate FromJson(const nlohmann::json& doc);
};

struct BuiltPrompt {
  std::string text;
  std::size_t exemplars_used = 0;
  std::size_t history_turns_dropped = 0;
  int estimated_tokens = 0;
};

// Builds the prompt for the next user turn. When the estimate exceeds
// `budget`, the second exemplar is dropped first, then the oldest
// (user, system) history pairs, never fewer than the two most recent pairs.
//
// Throws PromptError: kInvalidInput for anything but 1-2 exemplars or a
// history that does not alternate or does not end with a system turn;
// kBudgetExceeded when nothing more can be dropped.
BuiltPrompt BuildPrompt(std::span<const Exemplar> exemplars, const Goal& goal,
                        std::span<const Turn> history, int budget,
                        const PromptTemplate& tmpl = {});

// Renders one "Goal: ... Conversation: ..." block without the trailing cue.
std::string RenderDialogueBlock(const Goal& goal, std::span<const Turn> turns,
                                const PromptTemplate& tmpl);

}  // namespace todsim

#endif  // TODSIM_PROMPT_H_
