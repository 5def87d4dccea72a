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

#ifndef TODSIM_GOAL_H_
#define TODSIM_GOAL_H_

#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "todsim/error.h"

namespace todsim {

enum class GoalErrorKind {
  kMalformedGoal,
  kEmptyGoal,
  kUnknownSection,
  kMissingTemplate,
};
const char* GoalErrorKindName(GoalErrorKind kind);
using GoalError = KindError<GoalErrorKind, GoalErrorKindName>;

// Slot -> value pairs in source order.
using SlotMap = std::vector<std::pair<std::string, std::string>>;

// Returns the value bound to `slot`, if any.
const std::string* FindSlot(const SlotMap& slots, std::string_view slot);

// Constraints for one domain of a goal. `fail_book` holds fallback values
// that replace `book` entries when the primary booking fails, so every
// fail_book key must also be a book key.
struct DomainGoal {
  SlotMap info;
  SlotMap book;
  SlotMap fail_book;
  std::vector<std::string> reqt;

  friend bool operator==(const DomainGoal&, const DomainGoal&) = default;
};

// A conversational goal: one or more domains, each with its own constraints.
// Immutable once built; construction validates every invariant and throws
// GoalError on violation.
class Goal {
 public:
  using Domains = std::vector<std::pair<std::string, DomainGoal>>;

  Goal(Domains domains, std::optional<std::string> source_id = std::nullopt);

  const Domains& domains() const { return domains_; }
  const std::optional<std::string>& source_id() const { return source_id_; }

  const DomainGoal* Find(std::string_view domain) const;
  bool HasDomain(std::string_view domain) const {
    return Find(domain) != nullptr;
  }
  std::vector<std::string> DomainNames() const;

  Goal WithSourceId(std::string id) const;

  friend bool operator==(const Goal&, const Goal&) = default;

 private:
  Domains domains_;
  std::optional<std::string> source_id_;
};

// Parses a logical-form goal, e.g.
//   {"hotel": {"info": {"type": "hotel"}, "book": {"stay": "3"}}}
// Single-quoted (Python repr) documents are accepted as well.
Goal ParseGoal(std::string_view text);

// Builds a goal from an already-parsed logical-form object.
Goal GoalFromJson(const nlohmann::ordered_json& doc);
nlohmann::ordered_json GoalToJson(const Goal& goal);

// Compact double-quoted logical form; ParseGoal(SerializeGoal(g)) == g up to
// source_id.
std::string SerializeGoal(const Goal& goal);

// Rewrites single-quoted strings as JSON strings and Python literals
// (True/False/None) as JSON literals. Double-quoted strings pass through.
std::string NormalizeGoalQuotes(std::string_view text);

struct ParsedLogicalOptions {
  // Adds "- {domain} reqt {slot}." lines after each domain's constraints.
  bool emit_reqt = false;
};

// One "- {domain} {section} {slot} {value}." line per constraint, source
// order, newline-joined.
std::string RenderParsedLogical(const Goal& goal,
                                const ParsedLogicalOptions& options = {});

// Sentence templates used by RenderNaturalLanguage, per domain.
//
// Info phrases are grouped into sentences of the form
// "{subject} {phrase} and {phrase}." Groups are emitted in ascending group
// order; inside a group phrases follow template order. Book and fail_book
// patterns are tried in order and the first whose {slot} placeholders match
// the section's slot set exactly is used; otherwise the generic lead is
// extended with "{slot} {value}" pairs.
struct InfoPhrase {
  std::string slot;
  std::string value;  // empty matches any value
  std::string phrase;  // may contain {value}
  int group = 0;
};

struct DomainTemplates {
  std::string intro;
  std::string subject;
  std::vector<InfoPhrase> info;
  std::string info_fallback;  // may contain {slot} and {value}
  std::vector<std::string> book;
  std::string book_lead;
  std::vector<std::string> fail_book;
  std::string fail_book_lead;
  std::string reqt;  // contains {slots}
};

class NlTemplates {
 public:
  NlTemplates() = default;
  explicit NlTemplates(std::map<std::string, DomainTemplates> domains)
      : domains_(std::make_move_iterator(domains.begin()),
                 std::make_move_iterator(domains.end())) {}

  // Templates for the seven MultiWOZ domains.
  static const NlTemplates& Default();
  static NlTemplates FromJson(const nlohmann::json& doc);

  const DomainTemplates* Find(std::string_view domain) const;

 private:
  std::map<std::string, DomainTemplates, std::less<>> domains_;
};

// Instruction text for human annotators or NL-grounded prompts. Throws
// GoalError(kMissingTemplate) when a non-empty section has no template.
std::string RenderNaturalLanguage(
    const Goal& goal, const NlTemplates& templates = NlTemplates::Default());

// One intent per top-level domain.
int CountIntents(const Goal& goal);

}  // namespace todsim

#endif  // TODSIM_GOAL_H_
