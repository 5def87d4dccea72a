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

// Synthetic goals with matching scripted user and system turns, plus helpers
// that write them out as CLI inputs.

#ifndef TODSIM_TESTS_SUPPORT_SCENARIOS_H_
#define TODSIM_TESTS_SUPPORT_SCENARIOS_H_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "support/worked_examples.h"
#include "todsim/corpus.h"
#include "todsim/dialogue.h"
#include "todsim/goal.h"

namespace todsim::testing {

// Alternating user/system turns; stops after a user turn that carries the
// end token.
inline std::vector<Turn> Interleave(const std::vector<std::string>& user,
                                    const std::vector<std::string>& system) {
  std::vector<Turn> turns;
  for (std::size_t k = 0; k < user.size(); ++k) {
    turns.push_back(MakeUserTurn(user[k], static_cast<int>(turns.size())));
    if (turns.back().ends_dialogue || k >= system.size()) break;
    turns.push_back(MakeSystemTurn(system[k], static_cast<int>(turns.size())));
  }
  return turns;
}

inline std::vector<Turn> Interleave(const ScriptedDialogue& d) {
  return Interleave(d.user, d.system);
}

struct DomainScene {
  const char* domain;
  const char* info;  // JSON object body
  const char* reqt;  // JSON array
  const char* ask;
  const char* offer;
};

inline const std::vector<DomainScene>& Scenes() {
  static const std::vector<DomainScene> kScenes = {
      {"restaurant", R"({"food": "italian", "area": "centre"})", R"(["phone"])",
       "i want a restaurant serving italian food in the centre.",
       "[value_name] is an italian restaurant in the centre . the phone is [value_phone] ."},
      {"hotel", R"({"pricerange": "cheap", "type": "guesthouse"})", R"(["address"])",
       "i also need a cheap guesthouse to stay at.",
       "[value_name] is a cheap guesthouse at [value_address] . would you like to book it ?"},
      {"attraction", R"({"type": "museum"})", R"(["postcode"])",
       "can you find me a museum to visit?",
       "[value_name] is a museum , the postcode is [value_postcode] ."},
      {"train", R"({"departure": "cambridge", "destination": "ely", "day": "monday"})",
       R"(["duration"])", "i need a train from cambridge to ely on monday.",
       "[value_id] leaves at [value_leave] and takes [value_duration] ."},
  };
  return kScenes;
}

struct Scenario {
  std::string goal_id;
  Goal goal;
  std::vector<std::string> user;
  std::vector<std::string> system;
};

// Dialogue i has 1 + i % 3 intents. Every fifth multi-intent dialogue ends
// after the first domain.
inline Scenario MakeScenario(std::size_t i) {
  const auto& scenes = Scenes();
  const std::size_t intents = 1 + i % 3;
  nlohmann::ordered_json goal = nlohmann::ordered_json::object();
  std::vector<std::string> user;
  std::vector<std::string> system;
  for (std::size_t k = 0; k < intents; ++k) {
    const DomainScene& s = scenes[(i + k) % scenes.size()];
    goal[s.domain] = {{"info", nlohmann::ordered_json::parse(s.info)},
                      {"reqt", nlohmann::ordered_json::parse(s.reqt)}};
    if (i % 5 == 4 && k > 0) continue;
    user.push_back(s.ask);
    system.push_back(s.offer);
  }
  user.push_back(i % 2 == 0 ? "thanks, that is all. <end_dialog>"
                            : "great, thank you very much! <end_dialog>");
  std::string id = "SIM" + std::to_string(1000 + i);
  return {id, GoalFromJson(goal).WithSourceId(id), user, system};
}

inline std::vector<Exemplar> SmokeExemplars() {
  std::vector<Exemplar> out;
  auto build = [](const std::string& id, const ScriptedDialogue& d) {
    std::vector<Turn> turns;
    for (std::size_t k = 0; k < d.user.size(); ++k) {
      turns.push_back(MakeUserTurn(d.user[k], static_cast<int>(turns.size())));
      if (turns.back().ends_dialogue) break;
      turns.push_back(MakeSystemTurn(d.system[k], static_cast<int>(turns.size())));
    }
    return MakeExemplar(id, ParseGoal(d.goal).WithSourceId(id), std::move(turns));
  };
  out.push_back(build("EX-TRAIN", SuccessfulDialogue()));
  out.push_back(build("EX-HOTEL", PrematureDialogue()));
  ScriptedDialogue food{
      "{'restaurant': {'info': {'food': 'chinese', 'area': 'south'}, 'reqt': ['phone']}}",
      {"i am looking for a chinese restaurant in the south.", "what is their phone number?",
       "that is all, thanks. <end_dialog>"},
      {"[value_name] serves chinese food in the south . shall i book it ?",
       "the phone number is [value_phone] ."}};
  out.push_back(build("EX-FOOD", food));
  return out;
}

struct SmokeInputs {
  std::filesystem::path goals;
  std::filesystem::path exemplars;
  std::filesystem::path script;
};

// goals.jsonl, exemplars.jsonl (transcript lines) and script.json for
// `n` scenarios under `dir`.
inline SmokeInputs WriteSmokeInputs(const std::filesystem::path& dir, std::size_t n) {
  std::filesystem::create_directories(dir);
  SmokeInputs in{dir / "goals.jsonl", dir / "exemplars.jsonl", dir / "script.json"};
  std::ofstream goals(in.goals);
  nlohmann::json script = {{"completion", nlohmann::json::array()},
                           {"tod", nlohmann::json::array()}};
  for (std::size_t i = 0; i < n; ++i) {
    Scenario s = MakeScenario(i);
    nlohmann::ordered_json rec;
    rec["goal_id"] = s.goal_id;
    rec["goal"] = GoalToJson(s.goal);
    goals << rec.dump() << "\n";
    script["completion"].push_back(s.user);
    script["tod"].push_back(s.system);
  }
  std::ofstream ex(in.exemplars);
  for (const Exemplar& e : SmokeExemplars()) {
    Transcript t(e.goal);
    t.turns = e.turns;
    t.Close({TerminationKind::kEndTokenComplete, ""}, "1970-01-01T00:00:00Z");
    ex << TranscriptToLine(t) << "\n";
  }
  std::ofstream(in.script) << script.dump(2) << "\n";
  return in;
}

}  // namespace todsim::testing

#endif  // TODSIM_TESTS_SUPPORT_SCENARIOS_H_
