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

#include "todsim/success.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "text_util.h"

namespace todsim {

const char* EvalErrorKindName(EvalErrorKind kind) {
  switch (kind) {
    case EvalErrorKind::kUnknownDomain:
      return "UnknownDomain";
    case EvalErrorKind::kLengthMismatch:
      return "LengthMismatch";
    case EvalErrorKind::kEmptyReferences:
      return "EmptyReferences";
  }
  return "EvalError";
}

const DomainLexicon& DefaultDomainLexicon() {
  static const DomainLexicon* const kLexicon = new DomainLexicon{
      {"attraction",
       {"attraction", "attractions", "cinema", "museum", "college", "park",
        "theatre", "nightclub", "architecture", "swimming pool",
        "entertainment", "boat", "concert hall", "sightseeing"}},
      {"hospital", {"hospital"}},
      {"hotel",
       {"hotel", "hotels", "guesthouse", "guest house", "place to stay",
        "lodging"}},
      {"police", {"police"}},
      {"restaurant",
       {"restaurant", "restaurants", "food", "dine", "dining", "eat",
        "table for"}},
      {"taxi", {"taxi", "cab"}},
      {"train", {"train", "trains"}},
  };
  return *kLexicon;
}

// --------------------------------------------------------------------------
// Ontology

void Ontology::AddDomain(std::string name, DomainOntology domain) {
  domains_[std::move(name)] = std::move(domain);
}

void Ontology::SetPlaceholder(std::string slot, std::string placeholder) {
  placeholders_[std::move(slot)] = std::move(placeholder);
}

const DomainOntology* Ontology::Find(std::string_view domain) const {
  auto it = domains_.find(domain);
  return it == domains_.end() ? nullptr : &it->second;
}

std::string Ontology::Placeholder(std::string_view slot) const {
  auto it = placeholders_.find(slot);
  if (it != placeholders_.end()) return it->second;
  return "[value_" + internal::Lower(slot) + "]";
}

std::vector<std::string> Ontology::UnresolvedReqt(const Goal& goal) const {
  std::vector<std::string> out;
  for (const auto& [name, d] : goal.domains()) {
    const DomainOntology* dom = Find(name);
    if (dom == nullptr) {
      throw EvalError(EvalErrorKind::kUnknownDomain,
                      "domain '" + name + "' is not in the ontology");
    }
    for (const auto& slot : d.reqt) {
      bool requestable = false;
      for (const auto& r : dom->requestables) requestable |= r == slot;
      if (!requestable && placeholders_.find(slot) == placeholders_.end()) {
        out.push_back(name + "." + slot);
      }
    }
  }
  return out;
}

DomainLexicon Ontology::Lexicon() const {
  DomainLexicon out;
  for (const auto& [name, d] : domains_) out[name] = d.keywords;
  return out;
}

Ontology Ontology::FromJson(const nlohmann::json& doc) {
  Ontology o;
  for (const auto& [name, body] : doc.items()) {
    if (name == "placeholders") {
      for (const auto& [slot, ph] : body.items()) {
        o.SetPlaceholder(slot, ph.get<std::string>());
      }
      continue;
    }
    DomainOntology d;
    if (body.contains("entities")) {
      for (const auto& ent : body.at("entities")) {
        SlotMap record;
        for (const auto& [slot, value] : ent.items()) {
          record.emplace_back(slot, value.is_string() ? value.get<std::string>()
                                                      : value.dump());
        }
        d.entities.push_back(std::move(record));
      }
    }
    d.requestables = body.value("requestables", std::vector<std::string>{});
    if (body.contains("keywords")) {
      d.keywords = body.at("keywords").get<std::vector<std::string>>();
    } else {
      const auto& lex = DefaultDomainLexicon();
      if (auto it = lex.find(name); it != lex.end()) d.keywords = it->second;
    }
    if (body.contains("values")) {
      d.values = body.at("values")
                     .get<std::map<std::string, std::vector<std::string>>>();
    }
    o.AddDomain(name, std::move(d));
  }
  return o;
}

Ontology Ontology::DefaultMultiwoz() {
  Ontology o;
  const std::map<std::string, std::vector<std::string>> requestables = {
      {"attraction", {"address", "area", "entrance fee", "name", "phone",
                      "postcode", "type"}},
      {"hospital", {"address", "department", "phone", "postcode"}},
      {"hotel", {"address", "area", "internet", "name", "parking", "phone",
                 "postcode", "pricerange", "stars", "type"}},
      {"police", {"address", "name", "phone", "postcode"}},
      {"restaurant", {"address", "area", "food", "name", "phone", "postcode",
                      "pricerange"}},
      {"taxi", {"car type", "phone"}},
      {"train", {"arriveBy", "duration", "leaveAt", "price", "trainID"}},
  };
  for (const auto& [name, req] : requestables) {
    DomainOntology d;
    d.requestables = req;
    d.keywords = DefaultDomainLexicon().at(name);
    o.AddDomain(name, std::move(d));
  }
  o.SetPlaceholder("leaveAt", "[value_leave]");
  o.SetPlaceholder("arriveBy", "[value_arrive]");
  o.SetPlaceholder("trainID", "[value_id]");
  o.SetPlaceholder("entrance fee", "[value_price]");
  o.SetPlaceholder("car type", "[value_car]");
  return o;
}

// --------------------------------------------------------------------------
// Inform / Success

bool DialogueResult::all_informed() const {
  for (const auto& [domain, flag] : inform) {
    if (!flag) return false;
  }
  return true;
}

std::optional<bool> DialogueResult::informed(std::string_view domain) const {
  for (const auto& [name, flag] : inform) {
    if (name == domain) return flag;
  }
  return std::nullopt;
}

namespace {

std::optional<std::size_t> LastWordPos(std::string_view haystack,
                                       std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  std::optional<std::size_t> found;
  std::size_t pos = 0;
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
  };
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    const std::size_t end = pos + needle.size();
    if ((pos == 0 || !is_word(haystack[pos - 1])) &&
        (end == haystack.size() || !is_word(haystack[end]))) {
      found = pos;
    }
    ++pos;
  }
  return found;
}

// Most recently mentioned ontology domain in `turn`, by keyword position or
// a domain-specific placeholder such as "[hotel_name]".
std::optional<std::string> MentionedDomain(const Turn& turn,
                                           const Ontology& ontology) {
  const std::string norm = NormalizeUtterance(turn.text);
  const std::string lower = internal::Lower(turn.text);
  std::optional<std::string> best;
  long long best_pos = -1;
  for (const auto& [name, d] : ontology.domains()) {
    for (const auto& kw : d.keywords) {
      if (auto p = LastWordPos(norm, NormalizeUtterance(kw))) {
        if (static_cast<long long>(*p) > best_pos) {
          best_pos = static_cast<long long>(*p);
          best = name;
        }
      }
    }
    if (lower.find("[" + name + "_") != std::string::npos && best_pos < 0) {
      best = name;
    }
  }
  return best;
}

// Domain each turn is about, carried forward from the last mention.
std::vector<std::optional<std::string>> AttributeTurns(std::span<const Turn> turns,
                                                       const Ontology& ontology) {
  std::vector<std::optional<std::string>> out;
  std::optional<std::string> active;
  for (const Turn& t : turns) {
    if (auto d = MentionedDomain(t, ontology)) active = d;
    out.push_back(active);
  }
  return out;
}

const std::string* EntityName(const SlotMap& entity) {
  for (const char* key : {"name", "id", "trainID", "trainid"}) {
    if (const std::string* v = FindSlot(entity, key)) return v;
  }
  return nullptr;
}

struct Offer {
  std::string domain;
  std::string label;                // placeholder or entity name
  const SlotMap* entity = nullptr;  // lexical match only
};

std::vector<Offer> OffersIn(const Turn& turn,
                            const std::optional<std::string>& active,
                            const Goal& goal, const Ontology& ontology) {
  std::vector<Offer> offers;
  const std::string lower = internal::Lower(turn.text);
  const std::string norm = NormalizeUtterance(turn.text);
  for (const auto& [name, d] : goal.domains()) {
    const DomainOntology* dom = ontology.Find(name);
    for (const auto& entity : dom->entities) {
      const std::string* ent_name = EntityName(entity);
      if (ent_name && internal::ContainsWord(norm, NormalizeUtterance(*ent_name))) {
        offers.push_back({name, *ent_name, &entity});
      }
    }
    for (const char* suffix : {"_name]", "_id]"}) {
      std::string ph = "[" + name + suffix;
      if (lower.find(ph) != std::string::npos) offers.push_back({name, ph, nullptr});
    }
  }
  if (active) {
    for (const char* ph : {"[value_name]", "[value_id]"}) {
      if (lower.find(ph) != std::string::npos) {
        offers.push_back({*active, ph, nullptr});
      }
    }
  }
  return offers;
}

bool Contradicts(const Offer& offer, const Turn& turn, const Goal& goal,
                 const Ontology& ontology) {
  const DomainGoal* dg = goal.Find(offer.domain);
  if (dg == nullptr) return false;
  const DomainOntology* dom = ontology.Find(offer.domain);
  const std::string norm = NormalizeUtterance(turn.text);
  for (const auto& [slot, goal_value] : dg->info) {
    if (goal_value == "dontcare") continue;
    const std::string want = NormalizeUtterance(goal_value);
    if (offer.entity != nullptr) {
      if (const std::string* v = FindSlot(*offer.entity, slot)) {
        if (NormalizeUtterance(*v) != want) return true;
      }
    }
    if (internal::ContainsWord(norm, want)) continue;
    std::vector<std::string> vocab;
    if (auto it = dom->values.find(slot); it != dom->values.end()) vocab = it->second;
    for (const auto& entity : dom->entities) {
      if (const std::string* v = FindSlot(entity, slot)) vocab.push_back(*v);
    }
    for (const auto& v : vocab) {
      const std::string other = NormalizeUtterance(v);
      if (other != want && internal::ContainsWord(norm, other)) return true;
    }
  }
  return false;
}

void CheckDomains(const Goal& goal, const Ontology& ontology) {
  for (const auto& [name, d] : goal.domains()) {
    if (ontology.Find(name) == nullptr) {
      throw EvalError(EvalErrorKind::kUnknownDomain,
                      "domain '" + name + "' is not in the ontology");
    }
  }
}

}  // namespace

DialogueResult EvaluateSuccess(std::span<const Turn> turns, const Goal& goal,
                               const Ontology& ontology) {
  CheckDomains(goal, ontology);
  DialogueResult result;
  const auto attributed = AttributeTurns(turns, ontology);

  std::map<std::string, bool> informed;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const Turn& t = turns[i];
    if (t.speaker != Speaker::kSystem) continue;
    for (const Offer& offer : OffersIn(t, attributed[i], goal, ontology)) {
      if (!goal.HasDomain(offer.domain) || informed[offer.domain]) continue;
      if (Contradicts(offer, t, goal, ontology)) continue;
      informed[offer.domain] = true;
      result.matched_entity[offer.domain] = offer.label;
    }
  }

  for (const auto& [name, d] : goal.domains()) {
    const bool ok = informed[name];
    result.inform.emplace_back(name, ok);
    if (!result.matched_entity.count(name)) result.matched_entity[name] = std::nullopt;

    const DomainOntology* dom = ontology.Find(name);
    const SlotMap* entity = nullptr;
    if (const auto& label = result.matched_entity[name]) {
      for (const auto& e : dom->entities) {
        const std::string* n = EntityName(e);
        if (n && *n == *label) entity = &e;
      }
    }
    std::set<std::string>& provided = result.provided_reqt[name];
    for (const auto& slot : d.reqt) {
      const std::string generic = internal::Lower(ontology.Placeholder(slot));
      const std::string specific = "[" + name + "_" + internal::Lower(slot) + "]";
      for (std::size_t i = 0; i < turns.size(); ++i) {
        const Turn& t = turns[i];
        if (t.speaker != Speaker::kSystem) continue;
        const std::string lower = internal::Lower(t.text);
        bool hit = lower.find(specific) != std::string::npos ||
                   (attributed[i] == name && lower.find(generic) != std::string::npos);
        if (!hit && entity != nullptr) {
          if (const std::string* v = FindSlot(*entity, slot)) {
            hit = internal::ContainsWord(NormalizeUtterance(t.text),
                                         NormalizeUtterance(*v));
          }
        }
        if (hit) {
          provided.insert(slot);
          break;
        }
      }
    }
  }

  result.success = result.all_informed();
  for (const auto& [name, d] : goal.domains()) {
    if (result.provided_reqt[name].size() != std::set<std::string>(d.reqt.begin(), d.reqt.end()).size()) {
      result.success = false;
    }
  }
  return result;
}

InformFlags EvaluateInform(std::span<const Turn> turns, const Goal& goal,
                           const Ontology& ontology) {
  return EvaluateSuccess(turns, goal, ontology).inform;
}

double GoalSuccessRate(std::span<const DialogueResult> results) {
  if (results.empty()) return 0.0;
  double n = 0;
  for (const auto& r : results) n += r.success ? 1.0 : 0.0;
  return n / static_cast<double>(results.size());
}

// --------------------------------------------------------------------------
// BLEU

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts CountNgrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += '\x1f';
      key += toks[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double CorpusBleu(std::span<const std::string> candidates,
                  std::span<const std::string> references) {
  if (candidates.size() != references.size()) {
    throw EvalError(EvalErrorKind::kLengthMismatch,
                    std::to_string(candidates.size()) + " candidates vs " +
                        std::to_string(references.size()) + " references");
  }
  if (references.empty()) {
    throw EvalError(EvalErrorKind::kEmptyReferences, "no references");
  }
  constexpr std::size_t kMaxOrder = 4;
  std::array<long long, kMaxOrder> matches{};
  std::array<long long, kMaxOrder> totals{};
  long long cand_len = 0;
  long long ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto cand = internal::SplitWhitespace(candidates[i]);
    const auto ref = internal::SplitWhitespace(references[i]);
    cand_len += static_cast<long long>(cand.size());
    ref_len += static_cast<long long>(ref.size());
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      NgramCounts c = CountNgrams(cand, n);
      NgramCounts r = CountNgrams(ref, n);
      for (const auto& [gram, count] : c) {
        auto it = r.find(gram);
        if (it != r.end()) matches[n - 1] += std::min(count, it->second);
      }
      if (cand.size() >= n) totals[n - 1] += static_cast<long long>(cand.size() - n + 1);
    }
  }
  if (cand_len == 0 || matches[0] == 0) return 0.0;
  double log_precision = 0.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    double p = matches[n] == 0
                   ? 1.0 / static_cast<double>(totals[n] + 1)
                   : static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    log_precision += std::log(p);
  }
  double bp = cand_len < ref_len
                  ? std::exp(1.0 - static_cast<double>(ref_len) /
                                       static_cast<double>(cand_len))
                  : 1.0;
  return 100.0 * bp * std::exp(log_precision / static_cast<double>(kMaxOrder));
}

double CombinedScore(double inform_pct, double success_pct, double bleu) {
  return (inform_pct + success_pct) / 2.0 + bleu;
}

// --------------------------------------------------------------------------
// Report

namespace {

ReportRow BuildRow(std::string label,
                   const std::vector<const DialogueEvaluation*>& group,
                   const MtldOptions& mtld) {
  ReportRow row;
  row.label = std::move(label);
  row.num_dialogs = static_cast<int>(group.size());
  int informed = 0;
  int succeeded = 0;
  std::vector<std::string> cands;
  std::vector<std::string> refs;
  std::vector<std::string> utterances;
  std::vector<DependencyTree> trees;
  for (const DialogueEvaluation* d : group) {
    row.num_turns += d->num_turns;
    informed += d->result.all_informed() ? 1 : 0;
    succeeded += d->result.success ? 1 : 0;
    cands.insert(cands.end(), d->bleu_candidates.begin(), d->bleu_candidates.end());
    refs.insert(refs.end(), d->bleu_references.begin(), d->bleu_references.end());
    utterances.insert(utterances.end(), d->user_utterances.begin(),
                      d->user_utterances.end());
    trees.insert(trees.end(), d->trees.begin(), d->trees.end());
  }
  if (!group.empty()) {
    row.inform_pct = 100.0 * informed / static_cast<double>(group.size());
    row.success_pct = 100.0 * succeeded / static_cast<double>(group.size());
  }
  if (!refs.empty() && cands.size() == refs.size()) {
    row.bleu = CorpusBleu(cands, refs);
    row.combo = CombinedScore(row.inform_pct, row.success_pct, *row.bleu);
  }
  DiversityReport div = ComputeDiversity(utterances, trees, mtld);
  row.mtld = div.mtld;
  row.mean_dep = div.mean_dep;
  row.std_dep = div.std_dep;
  return row;
}

}  // namespace

EvaluationReport AggregateByIntent(std::span<const DialogueEvaluation> dialogues,
                                   const MtldOptions& mtld) {
  EvaluationReport report;
  if (dialogues.empty()) return report;
  std::map<int, std::vector<const DialogueEvaluation*>> groups;
  std::vector<const DialogueEvaluation*> all;
  for (const auto& d : dialogues) {
    groups[d.intents].push_back(&d);
    all.push_back(&d);
  }
  for (const auto& [intents, group] : groups) {
    report.rows.push_back(BuildRow(std::to_string(intents), group, mtld));
  }
  report.rows.push_back(BuildRow("All", all, mtld));
  return report;
}

EvaluationReport AggregateByIntent(std::span<const DialogueResult> results,
                                   std::span<const Goal> goals) {
  if (results.size() != goals.size()) {
    throw EvalError(EvalErrorKind::kLengthMismatch,
                    "results and goals are not aligned");
  }
  std::vector<DialogueEvaluation> evals;
  evals.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    DialogueEvaluation e;
    e.intents = CountIntents(goals[i]);
    e.result = results[i];
    evals.push_back(std::move(e));
  }
  return AggregateByIntent(evals);
}

const ReportRow* EvaluationReport::Find(std::string_view label) const {
  for (const auto& row : rows) {
    if (row.label == label) return &row;
  }
  return nullptr;
}

nlohmann::ordered_json EvaluationReport::ToJson() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["intents"] = r.label;
    row["num_dialogs"] = r.num_dialogs;
    row["num_turns"] = r.num_turns;
    row["inform"] = r.inform_pct;
    row["success"] = r.success_pct;
    row["bleu"] = opt(r.bleu);
    row["combo"] = opt(r.combo);
    row["mtld"] = opt(r.mtld);
    row["mean_dep"] = opt(r.mean_dep);
    row["std_dep"] = opt(r.std_dep);
    arr.push_back(std::move(row));
  }
  return nlohmann::ordered_json{{"rows", std::move(arr)}};
}

std::string EvaluationReport::ToTable() const {
  static const std::array<const char*, 10> kHeader = {
      "Num. Intents", "Num Dialogs", "Num Turns", "Inform", "Success",
      "BLEU", "Combo Score", "MTLD", "Avg Dep Len", "Std Dep Len"};
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << *v;
    return os.str();
  };
  std::vector<std::array<std::string, 10>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.label, std::to_string(r.num_dialogs),
                     std::to_string(r.num_turns), fmt(r.inform_pct),
                     fmt(r.success_pct), fmt(r.bleu), fmt(r.combo), fmt(r.mtld),
                     fmt(r.mean_dep), fmt(r.std_dep)});
  }
  std::array<std::size_t, 10> width{};
  for (std::size_t c = 0; c < kHeader.size(); ++c) {
    width[c] = std::string_view(kHeader[c]).size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t c = 0; c < kHeader.size(); ++c) {
    os << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << kHeader[c];
  }
  os << "\n";
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << row[c];
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace todsim
