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

// Goal-success evaluation in the MultiWOZ style: per-domain Inform, dialogue
// Success, corpus BLEU, the combined score, and the per-intent report.

#ifndef TODSIM_SUCCESS_H_
#define TODSIM_SUCCESS_H_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "todsim/dialogue.h"
#include "todsim/diversity.h"
#include "todsim/error.h"
#include "todsim/goal.h"

namespace todsim {

enum class EvalErrorKind { kUnknownDomain, kLengthMismatch, kEmptyReferences };
const char* EvalErrorKindName(EvalErrorKind kind);
using EvalError = KindError<EvalErrorKind, EvalErrorKindName>;

struct DomainOntology {
  std::vector<SlotMap> entities;
  std::vector<std::string> requestables;
  // Words that signal the dialogue is about this domain.
  std::vector<std::string> keywords;
  // Known surface values per informable slot, used to spot offers that
  // contradict the goal.
  std::map<std::string, std::vector<std::string>> values;
};

// Domain -> keyword list; also drives hallucination flagging.
using DomainLexicon = std::map<std::string, std::vector<std::string>>;

// Keywords for the seven MultiWOZ domains.
const DomainLexicon& DefaultDomainLexicon();

class Ontology {
 public:
  Ontology() = default;

  // {domain: {entities:[{slot:value}], requestables:[slot], keywords:[...],
  //  values:{slot:[...]}}, "placeholders": {slot: "[value_x]"}}
  static Ontology FromJson(const nlohmann::json& doc);
  // The seven MultiWOZ domains with requestables and keywords but no
  // entity records, so only delexicalized offers count.
  static Ontology DefaultMultiwoz();

  void AddDomain(std::string name, DomainOntology domain);
  void SetPlaceholder(std::string slot, std::string placeholder);

  const DomainOntology* Find(std::string_view domain) const;
  const std::map<std::string, DomainOntology, std::less<>>& domains() const {
    return domains_;
  }

  // Explicit mapping or "[value_<lowercased slot>]".
  std::string Placeholder(std::string_view slot) const;

  // Reqt slots of `goal` that resolve to neither a requestable nor a
  // placeholder mapping. Throws EvalError(kUnknownDomain).
  std::vector<std::string> UnresolvedReqt(const Goal& goal) const;

  DomainLexicon Lexicon() const;

 private:
  std::map<std::string, DomainOntology, std::less<>> domains_;
  std::map<std::string, std::string, std::less<>> placeholders_;
};

using InformFlags = std::vector<std::pair<std::string, bool>>;

struct DialogueResult {
  InformFlags inform;
  bool success = false;
  std::map<std::string, std::optional<std::string>> matched_entity;
  std::map<std::string, std::set<std::string>> provided_reqt;

  bool all_informed() const;
  std::optional<bool> informed(std::string_view domain) const;
};

// A domain is informed when some system turn attributed to it offers an
// entity (a lexical entity-name match or a "[value_name]"/"[value_id]"
// placeholder) and nothing mentioned in that turn contradicts the goal's
// info constraints. Turns are attributed to the most recently mentioned
// domain. Throws EvalError(kUnknownDomain).
InformFlags EvaluateInform(std::span<const Turn> turns, const Goal& goal,
                           const Ontology& ontology);

// Success = every domain informed and every reqt slot surfaced by a system
// turn of that domain (placeholder or the matched entity's value).
DialogueResult EvaluateSuccess(std::span<const Turn> turns, const Goal& goal,
                               const Ontology& ontology);

// Mean of success flags, in [0, 1]; 0 for no dialogues.
double GoalSuccessRate(std::span<const DialogueResult> results);

// Corpus BLEU-4 in [0, 100] over whitespace tokens, uniform weights,
// brevity penalty exp(1 - r/c) when c < r. Zero matches at orders 2-4 are
// smoothed to 1 / (total + 1); zero unigram matches give 0.
// Throws EvalError: kLengthMismatch, kEmptyReferences.
double CorpusBleu(std::span<const std::string> candidates,
                  std::span<const std::string> references);

// (inform + success) / 2 + bleu, all on a 0-100 scale.
double CombinedScore(double inform_pct, double success_pct, double bleu);

// Everything the report needs about one evaluated dialogue.
struct DialogueEvaluation {
  int intents = 1;
  DialogueResult result;
  int num_turns = 0;  // user turns
  std::vector<std::string> bleu_candidates;
  std::vector<std::string> bleu_references;
  std::vector<std::string> user_utterances;
  std::vector<DependencyTree> trees;
};

struct ReportRow {
  std::string label;  // intent count or "All"
  int num_dialogs = 0;
  int num_turns = 0;
  double inform_pct = 0.0;
  double success_pct = 0.0;
  std::optional<double> bleu;
  std::optional<double> combo;
  std::optional<double> mtld;
  std::optional<double> mean_dep;
  std::optional<double> std_dep;
};

struct EvaluationReport {
  std::vector<ReportRow> rows;

  nlohmann::ordered_json ToJson() const;
  std::string ToTable() const;
  const ReportRow* Find(std::string_view label) const;
};

// Rows per intent count, ascending, followed by an "All" row. Empty input
// yields no rows (the table prints its header only).
EvaluationReport AggregateByIntent(std::span<const DialogueEvaluation> dialogues,
                                   const MtldOptions& mtld = {});

// Convenience form pairing results with their goals; no BLEU or diversity.
EvaluationReport AggregateByIntent(std::span<const DialogueResult> results,
                                   std::span<const Goal> goals);

}  // namespace todsim

#endif  // TODSIM_SUCCESS_H_
