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

#include "todsim/prompt.h"

#include "text_util.h"

namespace todsim {

const char* PromptErrorKindName(PromptErrorKind kind) {
  switch (kind) {
    case PromptErrorKind::kBudgetExceeded:
      return "BudgetExceeded";
    case PromptErrorKind::kInvalidInput:
      return "InvalidInput";
  }
  return "PromptError";
}

std::string PromptTemplate::UserCue() const {
  std::string cue = user_prefix;
  while (!cue.empty() && internal::IsSpace(cue.back())) cue.pop_back();
  return cue;
}

PromptTemplate PromptTemplate::FromJson(const nlohmann::json& doc) {
  PromptTemplate t;
  t.goal_label = doc.value("goal_label", t.goal_label);
  t.conversation_label = doc.value("conversation_label", t.conversation_label);
  t.user_prefix = doc.value("user_prefix", t.user_prefix);
  t.system_prefix = doc.value("system_prefix", t.system_prefix);
  t.block_separator = doc.value("block_separator", t.block_separator);
  t.end_token = doc.value("end_token", t.end_token);
  t.emit_reqt = doc.value("emit_reqt", t.emit_reqt);
  t.tokens_per_word = doc.value("tokens_per_word", t.tokens_per_word);
  return t;
}

std::string RenderDialogueBlock(const Goal& goal, std::span<const Turn> turns,
                                const PromptTemplate& tmpl) {
  std::string out = tmpl.goal_label + "\n";
  out += RenderParsedLogical(goal, {.emit_reqt = tmpl.emit_reqt});
  out += "\n" + tmpl.conversation_label;
  for (const Turn& t : turns) {
    out += "\n";
    out += t.speaker == Speaker::kUser ? tmpl.user_prefix : tmpl.system_prefix;
    out += t.text;
    if (t.ends_dialogue) {
      if (!t.text.empty()) out += " ";
      out += tmpl.end_token;
    }
  }
  return out;
}

namespace {

std::string Assemble(std::span<const Exemplar> exemplars, const Goal& goal,
                     std::span<const Turn> history, const PromptTemplate& tmpl) {
  std::string out;
  for (const Exemplar& ex : exemplars) {
    out += RenderDialogueBlock(ex.goal, ex.turns, tmpl);
    out += tmpl.block_separator;
  }
  out += RenderDialogueBlock(goal, history, tmpl);
  out += "\n" + tmpl.UserCue();
  return out;
}

}  // namespace

BuiltPrompt BuildPrompt(std::span<const Exemplar> exemplars, const Goal& goal,
                        std::span<const Turn> history, int budget,
                        const PromptTemplate& tmpl) {
  if (exemplars.empty() || exemplars.size() > 2) {
    throw PromptError(PromptErrorKind::kInvalidInput,
                      "expected 1 or 2 exemplars, got " +
                          std::to_string(exemplars.size()));
  }
  if (!IsWellFormedHistory(history) || history.size() % 2 != 0) {
    throw PromptError(PromptErrorKind::kInvalidInput,
                      "history must alternate from the user and end with a "
                      "system turn");
  }

  std::span<const Exemplar> ex = exemplars;
  std::span<const Turn> hist = history;
  BuiltPrompt out;
  auto build = [&] {
    out.text = Assemble(ex, goal, hist, tmpl);
    out.estimated_tokens = EstimateTokens(out.text, tmpl.tokens_per_word);
    return out.estimated_tokens <= budget;
  };

  bool fits = build();
  if (!fits && ex.size() == 2) {
    ex = ex.first(1);
    fits = build();
  }
  while (!fits && hist.size() > 4) {
    hist = hist.subspan(2);
    fits = build();
  }
  if (!fits) {
    throw PromptError(PromptErrorKind::kBudgetExceeded,
                      "prompt estimate " + std::to_string(out.estimated_tokens) +
                          " exceeds budget " + std::to_string(budget));
  }
  out.exemplars_used = ex.size();
  out.history_turns_dropped = history.size() - hist.size();
  return out;
}

}  // namespace todsim
