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

#include "todsim/corpus.h"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <system_error>

#include "text_util.h"

namespace todsim {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const char* CorpusErrorKindName(CorpusErrorKind kind) {
  switch (kind) {
    case CorpusErrorKind::kFileUnreadable:
      return "FileUnreadable";
    case CorpusErrorKind::kPoolTooSmall:
      return "PoolTooSmall";
    case CorpusErrorKind::kMalformedFile:
      return "MalformedFile";
  }
  return "CorpusError";
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusError(CorpusErrorKind::kFileUnreadable,
                      "cannot read " + path.string());
  }
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) {
    throw CorpusError(CorpusErrorKind::kFileUnreadable,
                      "error while reading " + path.string());
  }
  return os.str();
}

void WriteFileAtomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static std::atomic<std::uint64_t> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw CorpusError(CorpusErrorKind::kFileUnreadable,
                        "cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw CorpusError(CorpusErrorKind::kFileUnreadable,
                        "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw CorpusError(CorpusErrorKind::kFileUnreadable,
                      "cannot replace " + path.string());
  }
}

// --------------------------------------------------------------------------
// Goals

namespace {

std::string Scalar(const ordered_json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

ordered_json CleanSlots(const ordered_json& slots, bool is_book) {
  ordered_json out = ordered_json::object();
  if (!slots.is_object()) return out;
  for (const auto& [k, v] : slots.items()) {
    if (is_book && (k == "invalid" || k == "pre_invoke")) continue;
    if (v.is_object() || v.is_array()) continue;
    out[k] = Scalar(v);
  }
  return out;
}

bool LooksLikeBundle(const ordered_json& doc) {
  if (!doc.is_object() || doc.empty()) return false;
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_object() || !v.contains("goal")) return false;
  }
  return true;
}

std::optional<ordered_json> ParseWhole(std::string_view text) {
  std::string_view t = internal::Trim(text);
  if (t.empty() || (t.front() != '{' && t.front() != '[')) return std::nullopt;
  try {
    return ordered_json::parse(t);
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;
  }
}

Goal GoalFromField(const ordered_json& field) {
  if (field.is_string()) return ParseGoal(field.get<std::string>());
  return GoalFromJson(field);
}

std::optional<std::string> IdFrom(const ordered_json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return Scalar(doc.at(key));
}

}  // namespace

Goal GoalFromMultiwoz(const ordered_json& raw) {
  if (!raw.is_object()) {
    throw GoalError(GoalErrorKind::kMalformedGoal, "goal must be an object");
  }
  ordered_json clean = ordered_json::object();
  for (const auto& [domain, body] : raw.items()) {
    if (!body.is_object() || body.empty()) continue;  // topic, message, ...
    ordered_json d = ordered_json::object();
    if (body.contains("info")) {
      ordered_json s = CleanSlots(body.at("info"), false);
      if (!s.empty()) d["info"] = std::move(s);
    }
    if (body.contains("book")) {
      ordered_json s = CleanSlots(body.at("book"), true);
      if (!s.empty()) d["book"] = std::move(s);
    }
    if (body.contains("fail_book")) {
      ordered_json s = CleanSlots(body.at("fail_book"), true);
      if (!s.empty()) d["fail_book"] = std::move(s);
    }
    if (body.contains("reqt") && body.at("reqt").is_array() &&
        !body.at("reqt").empty()) {
      ordered_json r = ordered_json::array();
      for (const auto& slot : body.at("reqt")) r.push_back(Scalar(slot));
      d["reqt"] = std::move(r);
    }
    if (!d.empty()) clean[domain] = std::move(d);
  }
  return GoalFromJson(clean);
}

GoalSet ParseGoals(std::string_view text) {
  GoalSet set;
  if (auto whole = ParseWhole(text); whole && LooksLikeBundle(*whole)) {
    std::size_t pos = 0;
    for (const auto& [key, entry] : whole->items()) {
      ++pos;
      try {
        set.goals.push_back(GoalFromMultiwoz(entry.at("goal")).WithSourceId(key));
      } catch (const std::exception& e) {
        set.rejects.push_back({pos, key, e.what()});
      }
    }
    return set;
  }

  std::size_t line_no = 0;
  for (const std::string& line : internal::SplitLines(text)) {
    ++line_no;
    if (internal::Trim(line).empty()) continue;
    std::optional<std::string> id;
    try {
      ordered_json doc;
      try {
        doc = ordered_json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        set.goals.push_back(ParseGoal(line));
        continue;
      }
      if (doc.is_object() && doc.contains("goal")) {
        id = IdFrom(doc, "goal_id");
        Goal g = GoalFromField(doc.at("goal"));
        set.goals.push_back(id ? g.WithSourceId(*id) : std::move(g));
      } else {
        set.goals.push_back(GoalFromJson(doc));
      }
    } catch (const std::exception& e) {
      set.rejects.push_back({line_no, id.value_or(""), e.what()});
    }
  }
  return set;
}

GoalSet LoadGoals(const fs::path& path) { return ParseGoals(ReadFile(path)); }

// --------------------------------------------------------------------------
// Dialogues and exemplars

namespace {

std::vector<Turn> TurnsFromLog(const ordered_json& log) {
  std::vector<Turn> turns;
  for (const auto& entry : log) {
    const std::string text =
        entry.is_string() ? entry.get<std::string>() : entry.at("text").get<std::string>();
    const int index = static_cast<int>(turns.size());
    turns.push_back(index % 2 == 0 ? MakeUserTurn(text, index)
                                   : MakeSystemTurn(text, index));
  }
  return turns;
}

}  // namespace

std::vector<DialogueRecord> ParseDialogues(std::string_view text) {
  std::vector<DialogueRecord> out;
  auto whole = ParseWhole(text);
  if (whole && LooksLikeBundle(*whole)) {
    for (const auto& [key, entry] : whole->items()) {
      try {
        DialogueRecord rec{key, GoalFromMultiwoz(entry.at("goal")).WithSourceId(key), {}};
        if (entry.contains("log")) {
          rec.turns = TurnsFromLog(entry.at("log"));
        } else if (entry.contains("turns")) {
          rec.turns = TurnsFromJson(entry.at("turns"));
        }
        out.push_back(std::move(rec));
      } catch (const std::exception& e) {
        throw CorpusError(CorpusErrorKind::kMalformedFile,
                          "dialogue '" + key + "': " + e.what());
      }
    }
    return out;
  }
  std::size_t line_no = 0;
  for (const std::string& line : internal::SplitLines(text)) {
    ++line_no;
    if (internal::Trim(line).empty()) continue;
    try {
      ordered_json doc = ordered_json::parse(line);
      Transcript t = TranscriptFromJson(doc);
      std::string id = t.goal.source_id().value_or("line-" + std::to_string(line_no));
      out.push_back({std::move(id), std::move(t.goal), std::move(t.turns)});
    } catch (const std::exception& e) {
      throw CorpusError(CorpusErrorKind::kMalformedFile,
                        "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DialogueRecord> LoadDialogues(const fs::path& path) {
  return ParseDialogues(ReadFile(path));
}

Exemplar ToExemplar(const DialogueRecord& record, std::string_view end_token) {
  std::vector<Turn> turns = record.turns;
  if (!turns.empty() && turns.back().speaker == Speaker::kSystem) turns.pop_back();
  if (!turns.empty() && !turns.back().ends_dialogue) {
    Turn& last = turns.back();
    last.ends_dialogue = true;
    last.raw_text = last.text.empty() ? std::string(end_token)
                                      : last.text + " " + std::string(end_token);
  }
  return MakeExemplar(record.id, record.goal, std::move(turns));
}

ExemplarPool LoadExemplarPool(const fs::path& path) {
  ExemplarPool pool;
  pool.source = path.string();
  for (const DialogueRecord& rec : LoadDialogues(path)) {
    try {
      pool.exemplars.push_back(ToExemplar(rec));
    } catch (const std::invalid_argument& e) {
      throw CorpusError(CorpusErrorKind::kMalformedFile, e.what());
    }
  }
  return pool;
}

std::vector<std::size_t> SampleIndices(std::size_t n, std::size_t k,
                                       std::uint64_t seed) {
  if (k > n) {
    throw CorpusError(CorpusErrorKind::kPoolTooSmall,
                      "need " + std::to_string(k) + " items, pool has " +
                          std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::vector<Exemplar> SelectExemplars(std::span<const Exemplar> pool,
                                      std::size_t k, std::uint64_t seed) {
  std::vector<Exemplar> out;
  for (std::size_t i : SampleIndices(pool.size(), k, seed)) out.push_back(pool[i]);
  return out;
}

Ontology LoadOntology(const fs::path& path) {
  try {
    return Ontology::FromJson(nlohmann::json::parse(ReadFile(path)));
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(CorpusErrorKind::kMalformedFile,
                      path.string() + ": " + e.what());
  }
}

// --------------------------------------------------------------------------
// Transcripts

std::vector<Transcript> ParseTranscripts(std::string_view text) {
  std::vector<Transcript> out;
  std::size_t line_no = 0;
  for (const std::string& line : internal::SplitLines(text)) {
    ++line_no;
    if (internal::Trim(line).empty()) continue;
    try {
      out.push_back(TranscriptFromJson(ordered_json::parse(line)));
    } catch (const std::exception& e) {
      throw CorpusError(CorpusErrorKind::kMalformedFile,
                        "transcript line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Transcript> LoadTranscripts(const fs::path& path) {
  return ParseTranscripts(ReadFile(path));
}

std::string TranscriptsToJsonl(std::span<const Transcript> transcripts) {
  std::string out;
  for (const Transcript& t : transcripts) {
    out += TranscriptToLine(t);
    out += '\n';
  }
  return out;
}

void WriteTranscripts(const fs::path& path, std::span<const Transcript> transcripts) {
  WriteFileAtomic(path, TranscriptsToJsonl(transcripts));
}

// --------------------------------------------------------------------------
// Parse cache

ParseCache::ParseCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

fs::path ParseCache::PathFor(std::string_view utterance) const {
  return dir_ / (internal::Hex64(internal::Fnv1a64(utterance)) + ".conllu");
}

std::optional<std::string> ParseCache::Get(std::string_view utterance) const {
  std::shared_lock lock(mu_);
  fs::path p = PathFor(utterance);
  std::error_code ec;
  if (!fs::exists(p, ec)) return std::nullopt;
  try {
    return ReadFile(p);
  } catch (const CorpusError&) {
    return std::nullopt;
  }
}

void ParseCache::Put(std::string_view utterance, std::string_view conllu) {
  std::unique_lock lock(mu_);
  WriteFileAtomic(PathFor(utterance), conllu);
}

namespace {

// Trims trailing blank lines; rejects responses with more than one sentence.
std::string SingleBlock(const std::string& conllu, std::string_view utterance) {
  std::vector<std::string> lines = internal::SplitLines(conllu);
  while (!lines.empty() && internal::Trim(lines.back()).empty()) lines.pop_back();
  std::size_t start = 0;
  while (start < lines.size() && internal::Trim(lines[start]).empty()) ++start;
  if (start == lines.size()) {
    throw ProviderError(ProviderErrorKind::kMalformed,
                        "empty parse for '" + std::string(utterance) + "'");
  }
  std::string out;
  for (std::size_t i = start; i < lines.size(); ++i) {
    if (internal::Trim(lines[i]).empty()) {
      throw ProviderError(ProviderErrorKind::kMalformed,
                          "parser returned several sentences for '" +
                              std::string(utterance) + "'");
    }
    out += lines[i];
    out += '\n';
  }
  return out;
}

}  // namespace

std::string FetchParses(std::span<const std::string> utterances,
                        const Endpoint& parser, ParseCache& cache) {
  std::map<std::string, std::string, std::less<>> blocks;
  for (const std::string& u : utterances) {
    if (blocks.count(u)) continue;
    if (auto hit = cache.Get(u)) {
      blocks.emplace(u, *hit);
      continue;
    }
    const std::string body = nlohmann::json{{"text", u}}.dump();
    std::string response = WithRetries(parser.retry, [&] { return PostJson(parser, body); });
    std::string conllu;
    try {
      conllu = nlohmann::json::parse(response).at("conllu").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(ProviderErrorKind::kMalformed,
                          std::string("parser response: ") + e.what());
    }
    std::string block = SingleBlock(conllu, u);
    cache.Put(u, block);
    blocks.emplace(u, std::move(block));
  }
  std::string out;
  for (const std::string& u : utterances) {
    out += blocks.at(u);
    out += '\n';
  }
  return out;
}

}  // namespace todsim
