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

#include "todsim/goal.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "text_util.h"

namespace todsim {

using internal::ReplaceAll;

const char* GoalErrorKindName(GoalErrorKind kind) {
  switch (kind) {
    case GoalErrorKind::kMalformedGoal:
      return "MalformedGoal";
    case GoalErrorKind::kEmptyGoal:
      return "EmptyGoal";
    case GoalErrorKind::kUnknownSection:
      return "UnknownSection";
    case GoalErrorKind::kMissingTemplate:
      return "MissingTemplate";
  }
  return "GoalError";
}

const std::string* FindSlot(const SlotMap& slots, std::string_view slot) {
  for (const auto& [name, value] : slots) {
    if (name == slot) return &value;
  }
  return nullptr;
}

namespace {

bool IsDomainToken(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-';
  });
}

void CheckSlots(std::string_view domain, std::string_view section,
                const SlotMap& slots) {
  for (const auto& [slot, value] : slots) {
    if (slot.empty() || value.empty()) {
      throw GoalError(GoalErrorKind::kMalformedGoal,
                      std::string(domain) + "." + std::string(section) +
                          ": empty slot name or value");
    }
  }
}

}  // namespace

Goal::Goal(Domains domains, std::optional<std::string> source_id)
    : domains_(std::move(domains)), source_id_(std::move(source_id)) {
  if (domains_.empty()) {
    throw GoalError(GoalErrorKind::kEmptyGoal, "goal has no domains");
  }
  std::set<std::string_view> seen;
  for (const auto& [name, d] : domains_) {
    if (!IsDomainToken(name)) {
      throw GoalError(GoalErrorKind::kMalformedGoal,
                      "domain name must be a lowercase token: '" + name + "'");
    }
    if (!seen.insert(name).second) {
      throw GoalError(GoalErrorKind::kMalformedGoal,
                      "duplicate domain '" + name + "'");
    }
    CheckSlots(name, "info", d.info);
    CheckSlots(name, "book", d.book);
    CheckSlots(name, "fail_book", d.fail_book);
    for (const auto& slot : d.reqt) {
      if (slot.empty()) {
        throw GoalError(GoalErrorKind::kMalformedGoal,
                        name + ".reqt: empty slot name");
      }
    }
    for (const auto& [slot, value] : d.fail_book) {
      if (FindSlot(d.book, slot) == nullptr) {
        throw GoalError(GoalErrorKind::kMalformedGoal,
                        name + ".fail_book." + slot + " has no book entry");
      }
    }
  }
}

const DomainGoal* Goal::Find(std::string_view domain) const {
  for (const auto& [name, d] : domains_) {
    if (name == domain) return &d;
  }
  return nullptr;
}

std::vector<std::string> Goal::DomainNames() const {
  std::vector<std::string> out;
  out.reserve(domains_.size());
  for (const auto& entry : domains_) out.push_back(entry.first);
  return out;
}

Goal Goal::WithSourceId(std::string id) const {
  Goal copy = *this;
  copy.source_id_ = std::move(id);
  return copy;
}

std::string NormalizeGoalQuotes(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  std::size_t i = 0;
  auto ident_at = [&](std::string_view word) {
    if (text.substr(i, word.size()) != word) return false;
    auto is_ident = [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    bool left = i == 0 || !is_ident(text[i - 1]);
    std::size_t end = i + word.size();
    bool right = end >= text.size() || !is_ident(text[end]);
    return left && right;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '"') {
      out += c;
      ++i;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\' && i + 1 < text.size()) out += text[i++];
        out += text[i++];
      }
      if (i < text.size()) out += text[i++];
    } else if (c == '\'') {
      out += '"';
      ++i;
      while (i < text.size() && text[i] != '\'') {
        if (text[i] == '\\' && i + 1 < text.size()) {
          char next = text[i + 1];
          if (next == '\'') {
            out += '\'';
          } else {
            out += '\\';
            out += next;
          }
          i += 2;
          continue;
        }
        if (text[i] == '"') out += '\\';
        out += text[i++];
      }
      if (i < text.size()) ++i;
      out += '"';
    } else if (ident_at("True")) {
      out += "true";
      i += 4;
    } else if (ident_at("False")) {
      out += "false";
      i += 5;
    } else if (ident_at("None")) {
      out += "null";
      i += 4;
    } else {
      out += c;
      ++i;
    }
  }
  return out;
}

namespace {

std::string ScalarText(const nlohmann::ordered_json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream os;
    os << v.get<double>();
    return os.str();
  }
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  throw GoalError(GoalErrorKind::kMalformedGoal,
                  where + ": expected a scalar value");
}

SlotMap ReadSlots(const nlohmann::ordered_json& section, const std::string& where) {
  if (!section.is_object()) {
    throw GoalError(GoalErrorKind::kMalformedGoal, where + ": expected a map");
  }
  SlotMap out;
  for (const auto& [slot, value] : section.items()) {
    out.emplace_back(slot, ScalarText(value, where + "." + slot));
  }
  return out;
}

}  // namespace

Goal GoalFromJson(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) {
    throw GoalError(GoalErrorKind::kMalformedGoal,
                    "goal document must be a map of domains");
  }
  if (doc.empty()) {
    throw GoalError(GoalErrorKind::kEmptyGoal, "goal has no domains");
  }
  Goal::Domains domains;
  for (const auto& [name, body] : doc.items()) {
    if (!body.is_object()) {
      throw GoalError(GoalErrorKind::kMalformedGoal,
                      "domain '" + name + "' must be a map");
    }
    DomainGoal d;
    for (const auto& [section, value] : body.items()) {
      const std::string where = name + "." + section;
      if (section == "info") {
        d.info = ReadSlots(value, where);
      } else if (section == "book") {
        d.book = ReadSlots(value, where);
      } else if (section == "fail_book") {
        d.fail_book = ReadSlots(value, where);
      } else if (section == "reqt") {
        if (!value.is_array()) {
          throw GoalError(GoalErrorKind::kMalformedGoal,
                          where + ": expected a list");
        }
        for (const auto& slot : value) d.reqt.push_back(ScalarText(slot, where));
      } else {
        throw GoalError(GoalErrorKind::kUnknownSection,
                        "domain '" + name + "' has unknown section '" +
                            section + "'");
      }
    }
    domains.emplace_back(name, std::move(d));
  }
  return Goal(std::move(domains));
}

Goal ParseGoal(std::string_view text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(NormalizeGoalQuotes(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw GoalError(GoalErrorKind::kMalformedGoal, e.what());
  }
  return GoalFromJson(doc);
}

nlohmann::ordered_json GoalToJson(const Goal& goal) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  auto slots = [](const SlotMap& m) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m) o[k] = v;
    return o;
  };
  for (const auto& [name, d] : goal.domains()) {
    nlohmann::ordered_json body = nlohmann::ordered_json::object();
    if (!d.info.empty()) body["info"] = slots(d.info);
    if (!d.book.empty()) body["book"] = slots(d.book);
    if (!d.fail_book.empty()) body["fail_book"] = slots(d.fail_book);
    if (!d.reqt.empty()) body["reqt"] = d.reqt;
    doc[name] = std::move(body);
  }
  return doc;
}

std::string SerializeGoal(const Goal& goal) { return GoalToJson(goal).dump(); }

std::string RenderParsedLogical(const Goal& goal,
                                const ParsedLogicalOptions& options) {
  std::vector<std::string> lines;
  auto emit = [&](const std::string& domain, std::string_view section,
                  const SlotMap& slots) {
    for (const auto& [slot, value] : slots) {
      lines.push_back("- " + domain + " " + std::string(section) + " " + slot +
                      " " + value + ".");
    }
  };
  for (const auto& [name, d] : goal.domains()) {
    emit(name, "info", d.info);
    emit(name, "book", d.book);
    emit(name, "fail_book", d.fail_book);
    if (options.emit_reqt) {
      for (const auto& slot : d.reqt) {
        lines.push_back("- " + name + " reqt " + slot + ".");
      }
    }
  }
  return internal::Join(lines, "\n");
}

int CountIntents(const Goal& goal) {
  return static_cast<int>(goal.domains().size());
}

// ---------------------------------------------------------------------------
// Natural-language rendering.

const DomainTemplates* NlTemplates::Find(std::string_view domain) const {
  auto it = domains_.find(domain);
  return it == domains_.end() ? nullptr : &it->second;
}

namespace {

std::string Fill(std::string pattern, const std::string& domain,
                 const SlotMap& slots) {
  pattern = ReplaceAll(std::move(pattern), "{domain}", domain);
  for (const auto& [slot, value] : slots) {
    pattern = ReplaceAll(std::move(pattern), "{" + slot + "}", value);
  }
  return pattern;
}

std::set<std::string> Placeholders(std::string_view pattern) {
  std::set<std::string> out;
  std::size_t pos = 0;
  while ((pos = pattern.find('{', pos)) != std::string_view::npos) {
    std::size_t end = pattern.find('}', pos);
    if (end == std::string_view::npos) break;
    std::string name(pattern.substr(pos + 1, end - pos - 1));
    if (name != "domain") out.insert(name);
    pos = end + 1;
  }
  return out;
}

std::string Sentence(std::string s) {
  if (!s.empty() && s.back() != '.' && s.back() != '?' && s.back() != '!') {
    s += '.';
  }
  return s;
}

// Picks the first pattern whose placeholder set equals the slot set;
// falls back to "{lead} {slot} {value} and ...".
std::string RenderSection(const std::vector<std::string>& patterns,
                          const std::string& lead, const std::string& domain,
                          std::string_view section, const SlotMap& slots) {
  std::set<std::string> keys;
  for (const auto& entry : slots) keys.insert(entry.first);
  for (const auto& pattern : patterns) {
    if (Placeholders(pattern) == keys) {
      return Sentence(Fill(pattern, domain, slots));
    }
  }
  if (lead.empty()) {
    throw GoalError(GoalErrorKind::kMissingTemplate,
                    "no " + std::string(section) + " template for domain '" +
                        domain + "'");
  }
  std::vector<std::string> parts;
  for (const auto& [slot, value] : slots) parts.push_back(slot + " " + value);
  return Sentence(Fill(lead, domain, {}) + " " + internal::Join(parts, " and "));
}

}  // namespace

std::string RenderNaturalLanguage(const Goal& goal,
                                  const NlTemplates& templates) {
  std::vector<std::string> sentences;
  for (const auto& [name, d] : goal.domains()) {
    const DomainTemplates* t = templates.Find(name);
    if (t == nullptr) {
      throw GoalError(GoalErrorKind::kMissingTemplate,
                      "no templates for domain '" + name + "'");
    }
    if (!t->intro.empty()) sentences.push_back(t->intro);

    if (!d.info.empty()) {
      // (group, template position, source position, phrase)
      std::vector<std::tuple<int, std::size_t, std::size_t, std::string>> phrases;
      for (std::size_t src = 0; src < d.info.size(); ++src) {
        const auto& [slot, value] = d.info[src];
        bool matched = false;
        for (std::size_t k = 0; k < t->info.size(); ++k) {
          const InfoPhrase& p = t->info[k];
          if (p.slot == slot && (p.value.empty() || p.value == value)) {
            phrases.emplace_back(p.group, k, src,
                                 ReplaceAll(p.phrase, "{value}", value));
            matched = true;
            break;
          }
        }
        if (matched) continue;
        if (t->info_fallback.empty()) {
          throw GoalError(GoalErrorKind::kMissingTemplate,
                          "no info template for " + name + "." + slot);
        }
        std::string phrase = ReplaceAll(t->info_fallback, "{slot}", slot);
        phrases.emplace_back(1 << 20, t->info.size(), src,
                             ReplaceAll(std::move(phrase), "{value}", value));
      }
      std::stable_sort(phrases.begin(), phrases.end(),
                       [](const auto& a, const auto& b) {
                         return std::tie(std::get<0>(a), std::get<1>(a),
                                         std::get<2>(a)) <
                                std::tie(std::get<0>(b), std::get<1>(b),
                                         std::get<2>(b));
                       });
      std::size_t i = 0;
      while (i < phrases.size()) {
        std::vector<std::string> group;
        int id = std::get<0>(phrases[i]);
        while (i < phrases.size() && std::get<0>(phrases[i]) == id) {
          group.push_back(std::get<3>(phrases[i]));
          ++i;
        }
        sentences.push_back(Sentence(t->subject + " " +
                                     internal::Join(group, " and ")));
      }
    }
    if (!d.book.empty()) {
      sentences.push_back(RenderSection(t->book, t->book_lead, name, "book", d.book));
    }
    if (!d.fail_book.empty()) {
      sentences.push_back(RenderSection(t->fail_book, t->fail_book_lead, name,
                                        "fail_book", d.fail_book));
    }
    if (!d.reqt.empty()) {
      if (t->reqt.empty()) {
        throw GoalError(GoalErrorKind::kMissingTemplate,
                        "no reqt template for domain '" + name + "'");
      }
      sentences.push_back(Sentence(
          ReplaceAll(t->reqt, "{slots}", internal::JoinNatural(d.reqt))));
    }
  }
  return internal::Join(sentences, " ");
}

NlTemplates NlTemplates::FromJson(const nlohmann::json& doc) {
  std::map<std::string, DomainTemplates> out;
  for (const auto& [name, body] : doc.items()) {
    DomainTemplates t;
    t.intro = body.value("intro", "");
    t.subject = body.value("subject", "The " + name);
    if (body.contains("info")) {
      for (const auto& p : body.at("info")) {
        t.info.push_back({p.at("slot").get<std::string>(), p.value("value", ""),
                          p.at("phrase").get<std::string>(), p.value("group", 0)});
      }
    }
    t.info_fallback = body.value("info_fallback", "");
    t.book = body.value("book", std::vector<std::string>{});
    t.book_lead = body.value("book_lead", "");
    t.fail_book = body.value("fail_book", std::vector<std::string>{});
    t.fail_book_lead = body.value("fail_book_lead", "");
    t.reqt = body.value("reqt", "");
    out.emplace(name, std::move(t));
  }
  return NlTemplates(std::move(out));
}

const NlTemplates& NlTemplates::Default() {
  static const NlTemplates* const kDefault = [] {
    const std::string kFallback = "should have {slot} {value}";
    const std::string kReqt = "Make sure to get the {slots}.";
    const std::string kFailLead = "If the booking fails how about";
    std::map<std::string, DomainTemplates> m;

    m["hotel"] = DomainTemplates{
        "You are looking for a place to stay.",
        "The hotel",
        {
            {"pricerange", "", "should be in the {value} price range", 0},
            {"area", "", "should be in the {value}", 0},
            {"stars", "", "should have a star of {value}", 0},
            {"type", "", "should be in the type of {value}", 0},
            {"name", "", "should be called {value}", 0},
            {"parking", "yes", "should include free parking", 1},
            {"parking", "no", "does not need to include free parking", 1},
            {"internet", "yes", "should include free wifi", 1},
            {"internet", "no", "does not need to include free wifi", 1},
        },
        kFallback,
        {
            "Once you find the hotel you want to book it for {people} people "
            "and {stay} nights starting from {day}.",
            "Once you find the hotel you want to book it for {stay} nights "
            "starting from {day}.",
        },
        "Once you find the hotel you want to book it with",
        {
            "If the booking fails how about {stay} nights.",
            "If the booking fails how about {day}.",
        },
        kFailLead,
        kReqt,
    };
    m["restaurant"] = DomainTemplates{
        "You are looking for a place to dine.",
        "The restaurant",
        {
            {"pricerange", "", "should be in the {value} price range", 0},
            {"food", "", "should serve {value} food", 0},
            {"area", "", "should be in the {value}", 0},
            {"name", "", "should be called {value}", 0},
        },
        kFallback,
        {
            "Once you find the restaurant you want to book a table for "
            "{people} people at {time} on {day}.",
        },
        "Once you find the restaurant you want to book a table with",
        {
            "If the booking fails how about {time}.",
            "If the booking fails how about {day}.",
        },
        kFailLead,
        kReqt,
    };
    m["attraction"] = DomainTemplates{
        "You are looking for a particular attraction.",
        "The attraction",
        {
            {"type", "", "should be in the type of {value}", 0},
            {"area", "", "should be in the {value}", 0},
            {"name", "", "should be called {value}", 0},
        },
        kFallback,
        {},
        "Once you find the attraction you want to book it with",
        {},
        kFailLead,
        kReqt,
    };
    m["train"] = DomainTemplates{
        "You are looking for a train.",
        "The train",
        {
            {"departure", "", "should depart from {value}", 0},
            {"destination", "", "should go to {value}", 0},
            {"day", "", "should leave on {value}", 1},
            {"leaveAt", "", "should leave after {value}", 1},
            {"arriveBy", "", "should arrive by {value}", 1},
        },
        kFallback,
        {"Once you find the train you want to make a booking for {people} "
         "people."},
        "Once you find the train you want to make a booking with",
        {},
        kFailLead,
        kReqt,
    };
    m["taxi"] = DomainTemplates{
        "You want to book a taxi.",
        "The taxi",
        {
            {"departure", "", "should depart from {value}", 0},
            {"destination", "", "should go to {value}", 0},
            {"leaveAt", "", "should leave after {value}", 1},
            {"arriveBy", "", "should arrive by {value}", 1},
        },
        kFallback,
        {},
        "Once you find the taxi you want to book it with",
        {},
        kFailLead,
        kReqt,
    };
    m["hospital"] = DomainTemplates{
        "You got injured and are looking for a hospital nearby.",
        "The hospital",
        {{"department", "", "should have the {value} department", 0}},
        kFallback,
        {},
        "You want to book it with",
        {},
        kFailLead,
        kReqt,
    };
    m["police"] = DomainTemplates{
        "You were robbed and are looking for help.",
        "The police station",
        {},
        kFallback,
        {},
        "You want to book it with",
        {},
        kFailLead,
        kReqt,
    };
    return new NlTemplates(std::move(m));
  }();
  return *kDefault;
}

}  // namespace todsim
