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

#include "todsim/dialogue.h"

#include <cctype>
#include <stdexcept>

#include "text_util.h"

namespace todsim {

const char* SpeakerName(Speaker speaker) {
  return speaker == Speaker::kUser ? "user" : "system";
}

Turn MakeUserTurn(std::string raw, int index, std::string_view end_token) {
  EndTokenResult r = DetectEndToken(raw, end_token);
  Turn t;
  t.speaker = Speaker::kUser;
  t.text = std::move(r.cleaned);
  t.raw_text = std::move(raw);
  t.index = index;
  t.ends_dialogue = r.is_end;
  return t;
}

Turn MakeSystemTurn(std::string text, int index) {
  Turn t;
  t.speaker = Speaker::kSystem;
  t.text = text;
  t.raw_text = std::move(text);
  t.index = index;
  return t;
}

bool IsWellFormedHistory(std::span<const Turn> turns) {
  for (std::size_t i = 0; i < turns.size(); ++i) {
    Speaker expected = i % 2 == 0 ? Speaker::kUser : Speaker::kSystem;
    if (turns[i].speaker != expected) return false;
    if (turns[i].index != static_cast<int>(i)) return false;
  }
  return true;
}

const char* TerminationKindName(TerminationKind kind) {
  switch (kind) {
    case TerminationKind::kEndTokenComplete:
      return "EndTokenComplete";
    case TerminationKind::kEndTokenPremature:
      return "EndTokenPremature";
    case TerminationKind::kLoopDetected:
      return "LoopDetected";
    case TerminationKind::kMaxTurnsExceeded:
      return "MaxTurnsExceeded";
    case TerminationKind::kProviderError:
      return "ProviderError";
    case TerminationKind::kHallucinationFlagged:
      return "HallucinationFlagged";
    case TerminationKind::kHumanClosed:
      return "HumanClosed";
  }
  return "Unknown";
}

std::optional<TerminationKind> TerminationKindFromName(std::string_view name) {
  for (auto kind : {TerminationKind::kEndTokenComplete,
                    TerminationKind::kEndTokenPremature,
                    TerminationKind::kLoopDetected,
                    TerminationKind::kMaxTurnsExceeded,
                    TerminationKind::kProviderError,
                    TerminationKind::kHallucinationFlagged,
                    TerminationKind::kHumanClosed}) {
    if (name == TerminationKindName(kind)) return kind;
  }
  return std::nullopt;
}

void Transcript::Close(TerminationReason reason, std::string finished) {
  if (termination.has_value()) {
    throw std::logic_error("transcript already closed");
  }
  termination = std::move(reason);
  finished_at = std::move(finished);
}

int Transcript::user_turn_count() const {
  int n = 0;
  for (const auto& t : turns) n += t.speaker == Speaker::kUser;
  return n;
}

Exemplar MakeExemplar(std::string id, Goal goal, std::vector<Turn> turns) {
  if (turns.empty()) {
    throw std::invalid_argument("exemplar '" + id + "' has no turns");
  }
  if (!IsWellFormedHistory(turns)) {
    throw std::invalid_argument("exemplar '" + id +
                                "' turns do not alternate from the user");
  }
  const Turn& last = turns.back();
  if (last.speaker != Speaker::kUser || !last.ends_dialogue) {
    throw std::invalid_argument("exemplar '" + id +
                                "' must end with an end-token user turn");
  }
  return Exemplar{std::move(id), std::move(goal), std::move(turns)};
}

EndTokenResult DetectEndToken(std::string_view text, std::string_view end_token) {
  EndTokenResult r;
  if (end_token.empty()) {
    r.cleaned = std::string(internal::Trim(text));
    return r;
  }
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = text.find(end_token, pos);
    std::string_view piece = text.substr(
        pos, hit == std::string_view::npos ? std::string_view::npos : hit - pos);
    piece = internal::Trim(piece);
    if (!piece.empty()) {
      if (!out.empty()) out += ' ';
      out += piece;
    }
    if (hit == std::string_view::npos) break;
    r.is_end = true;
    pos = hit + end_token.size();
  }
  r.cleaned = std::move(out);
  return r;
}

std::string NormalizeUtterance(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c) || std::ispunct(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

nlohmann::ordered_json TurnsToJson(std::span<const Turn> turns) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& t : turns) {
    arr.push_back({{"speaker", SpeakerName(t.speaker)},
                   {"text", t.text},
                   {"raw_text", t.raw_text},
                   {"ends_dialogue", t.ends_dialogue}});
  }
  return arr;
}

std::vector<Turn> TurnsFromJson(const nlohmann::ordered_json& doc,
                                std::string_view end_token) {
  std::vector<Turn> out;
  int index = 0;
  for (const auto& item : doc) {
    std::string speaker = item.at("speaker").get<std::string>();
    std::string raw = item.contains("raw_text")
                          ? item.at("raw_text").get<std::string>()
                          : item.at("text").get<std::string>();
    if (speaker == "user") {
      Turn t = MakeUserTurn(raw, index, end_token);
      if (item.contains("text")) t.text = item.at("text").get<std::string>();
      if (item.contains("ends_dialogue")) {
        t.ends_dialogue = item.at("ends_dialogue").get<bool>();
      }
      out.push_back(std::move(t));
    } else if (speaker == "system") {
      Turn t = MakeSystemTurn(raw, index);
      if (item.contains("text")) t.text = item.at("text").get<std::string>();
      out.push_back(std::move(t));
    } else {
      throw std::invalid_argument("unknown speaker '" + speaker + "'");
    }
    ++index;
  }
  return out;
}

nlohmann::ordered_json TranscriptToJson(const Transcript& tr) {
  nlohmann::ordered_json doc;
  doc["goal_id"] = tr.goal.source_id() ? nlohmann::ordered_json(*tr.goal.source_id())
                                       : nlohmann::ordered_json(nullptr);
  doc["goal"] = GoalToJson(tr.goal);
  doc["turns"] = TurnsToJson(tr.turns);
  if (tr.termination) {
    doc["termination"] = {{"kind", TerminationKindName(tr.termination->kind)},
                          {"detail", tr.termination->detail}};
  } else {
    doc["termination"] = nullptr;
  }
  nlohmann::ordered_json params;
  params["temperature"] = tr.provider_params.temperature;
  params["max_context"] = tr.provider_params.max_context;
  params["seed"] = tr.provider_params.seed
                       ? nlohmann::ordered_json(*tr.provider_params.seed)
                       : nlohmann::ordered_json(nullptr);
  doc["provider_params"] = std::move(params);
  doc["exemplar_ids"] = tr.exemplar_ids;
  doc["timestamps"] = {{"started", tr.started_at}, {"finished", tr.finished_at}};
  nlohmann::ordered_json ann = nlohmann::ordered_json::array();
  for (const auto& a : tr.annotations) {
    ann.push_back({{"turn", a.turn_index},
                   {"kind", TerminationKindName(a.kind)},
                   {"domain", a.domain},
                   {"keyword", a.keyword}});
  }
  doc["annotations"] = std::move(ann);
  doc["metadata"] = tr.metadata;
  return doc;
}

std::string TranscriptToLine(const Transcript& transcript) {
  return TranscriptToJson(transcript).dump();
}

Transcript TranscriptFromJson(const nlohmann::ordered_json& doc,
                              std::string_view end_token) {
  Goal goal = GoalFromJson(doc.at("goal"));
  if (doc.contains("goal_id") && doc.at("goal_id").is_string()) {
    goal = goal.WithSourceId(doc.at("goal_id").get<std::string>());
  }
  Transcript tr(std::move(goal));
  tr.turns = TurnsFromJson(doc.at("turns"), end_token);
  if (doc.contains("termination") && doc.at("termination").is_object()) {
    const auto& term = doc.at("termination");
    auto kind = TerminationKindFromName(term.at("kind").get<std::string>());
    if (!kind) {
      throw std::invalid_argument("unknown termination kind " +
                                  term.at("kind").dump());
    }
    tr.termination = TerminationReason{*kind, term.value("detail", "")};
  }
  if (doc.contains("provider_params")) {
    const auto& p = doc.at("provider_params");
    tr.provider_params.temperature = p.value("temperature", 0.5);
    tr.provider_params.max_context = p.value("max_context", 2048);
    if (p.contains("seed") && p.at("seed").is_number_integer()) {
      tr.provider_params.seed = p.at("seed").get<std::uint64_t>();
    }
  }
  if (doc.contains("exemplar_ids")) {
    tr.exemplar_ids = doc.at("exemplar_ids").get<std::vector<std::string>>();
  }
  if (doc.contains("timestamps")) {
    tr.started_at = doc.at("timestamps").value("started", "");
    tr.finished_at = doc.at("timestamps").value("finished", "");
  }
  if (doc.contains("annotations")) {
    for (const auto& a : doc.at("annotations")) {
      Annotation ann;
      ann.turn_index = a.value("turn", 0);
      ann.kind = TerminationKindFromName(a.value("kind", ""))
                     .value_or(TerminationKind::kHallucinationFlagged);
      ann.domain = a.value("domain", "");
      ann.keyword = a.value("keyword", "");
      tr.annotations.push_back(std::move(ann));
    }
  }
  if (doc.contains("metadata") && doc.at("metadata").is_object()) {
    tr.metadata = doc.at("metadata");
  }
  return tr;
}

}  // namespace todsim
