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

#include <gtest/gtest.h>

#include "todsim/providers.h"

namespace todsim {
namespace {

Exemplar SmallExemplar(const std::string& id, const std::string& words) {
  Goal g = ParseGoal("{'taxi': {'info': {'destination': 'station'}}}");
  return MakeExemplar(id, g, {MakeUserTurn(words, 0), MakeSystemTurn("ok", 1),
                              MakeUserTurn("bye <end_dialog>", 2)});
}

std::vector<Turn> History(int pairs) {
  std::vector<Turn> out;
  for (int i = 0; i < pairs; ++i) {
    out.push_back(MakeUserTurn("user says " + std::to_string(i), 2 * i));
    out.push_back(MakeSystemTurn("system says " + std::to_string(i), 2 * i + 1));
  }
  return out;
}

const Goal& Target() {
  static const Goal g =
      ParseGoal("{'train': {'info': {'day': 'friday'}, 'reqt': ['duration']}}");
  return g;
}

TEST(BuildPromptTest, ExactLayout) {
  std::vector<Exemplar> ex = {SmallExemplar("e1", "a cab please")};
  std::vector<Turn> hist = {MakeUserTurn("a train on friday", 0),
                            MakeSystemTurn("[value_id] leaves at [value_leave] .", 1)};
  BuiltPrompt p = BuildPrompt(ex, Target(), hist, 10000);
  EXPECT_EQ(p.text,
            "Goal:\n- taxi info destination station.\nConversation:\n"
            "User: a cab please\nSystem: ok\nUser: bye <end_dialog>\n\n"
            "Goal:\n- train info day friday.\n- train reqt duration.\nConversation:\n"
            "User: a train on friday\nSystem: [value_id] leaves at [value_leave] .\nUser:");
  EXPECT_EQ(p.exemplars_used, 1u);
  EXPECT_EQ(p.history_turns_dropped, 0u);
  EXPECT_EQ(p.estimated_tokens, EstimateTokens(p.text));
}

TEST(BuildPromptTest, ReqtSwitchOff) {
  std::vector<Exemplar> ex = {SmallExemplar("e1", "hi")};
  PromptTemplate t;
  t.emit_reqt = false;
  BuiltPrompt p = BuildPrompt(ex, Target(), {}, 10000, t);
  EXPECT_EQ(p.text.find("reqt"), std::string::npos);
}

TEST(BuildPromptTest, DropsSecondExemplarFirst) {
  std::vector<Exemplar> ex = {SmallExemplar("e1", "short"),
                              SmallExemplar("e2", std::string(200, 'x') + " many more words here")};
  std::vector<Turn> hist = History(3);
  BuiltPrompt full = BuildPrompt(ex, Target(), hist, 100000);
  ASSERT_EQ(full.exemplars_used, 2u);
  BuiltPrompt one = BuildPrompt({ex.data(), 1}, Target(), hist, 100000);
  BuiltPrompt p = BuildPrompt(ex, Target(), hist, one.estimated_tokens);
  EXPECT_EQ(p.exemplars_used, 1u);
  EXPECT_EQ(p.history_turns_dropped, 0u);
  EXPECT_EQ(p.text, one.text);
}

TEST(BuildPromptTest, DropsOldestPairsButKeepsTwo) {
  std::vector<Exemplar> ex = {SmallExemplar("e1", "short")};
  std::vector<Turn> hist = History(6);
  std::vector<Turn> last_two(hist.end() - 4, hist.end());
  for (std::size_t i = 0; i < last_two.size(); ++i) last_two[i].index = static_cast<int>(i);
  // Budget that only fits the two most recent pairs.
  BuiltPrompt minimal = BuildPrompt(ex, Target(), last_two, 100000);
  BuiltPrompt p = BuildPrompt(ex, Target(), hist, minimal.estimated_tokens);
  EXPECT_EQ(p.history_turns_dropped, 8u);
  EXPECT_EQ(p.text, minimal.text);
  EXPECT_EQ(p.text.find("user says 3"), std::string::npos);
  EXPECT_NE(p.text.find("user says 4"), std::string::npos);
  try {
    BuildPrompt(ex, Target(), hist, minimal.estimated_tokens - 1);
    FAIL();
  } catch (const PromptError& e) {
    EXPECT_EQ(e.kind(), PromptErrorKind::kBudgetExceeded);
  }
}

TEST(BuildPromptTest, RejectsBadInput) {
  std::vector<Exemplar> none;
  EXPECT_THROW(BuildPrompt(none, Target(), {}, 1000), PromptError);
  std::vector<Exemplar> three(3, SmallExemplar("e", "x"));
  EXPECT_THROW(BuildPrompt(three, Target(), {}, 1000), PromptError);
  std::vector<Exemplar> ex = {SmallExemplar("e1", "x")};
  std::vector<Turn> dangling = {MakeUserTurn("hi", 0)};
  EXPECT_THROW(BuildPrompt(ex, Target(), dangling, 1000), PromptError);
}

TEST(PromptTemplateTest, FromJsonOverridesLabels) {
  PromptTemplate t = PromptTemplate::FromJson(
      nlohmann::json{{"user_prefix", "Customer: "}, {"system_prefix", "Agent: "}});
  EXPECT_EQ(t.UserCue(), "Customer:");
  std::vector<Exemplar> ex = {SmallExemplar("e1", "x")};
  BuiltPrompt p = BuildPrompt(ex, Target(), {}, 10000, t);
  EXPECT_NE(p.text.find("Agent: ok"), std::string::npos);
  EXPECT_EQ(p.text.substr(p.text.size() - 9), "Customer:");
}

}  // namespace
}  // namespace todsim
