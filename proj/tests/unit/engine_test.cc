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

#include "todsim/engine.h"

#include <unistd.h>

#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "support/worked_examples.h"
#include "support/scenarios.h"
#include "todsim/corpus.h"

namespace todsim {
namespace {

using testing::Interleave;
using testing::ScriptedDialogue;

EngineConfig FixedConfig() {
  EngineConfig c;
  c.clock = EpochClock;
  return c;
}

std::vector<Exemplar> TwoExemplars() {
  std::vector<Exemplar> all = testing::SmokeExemplars();
  return {all[0], all[2]};
}

struct Replay {
  Transcript transcript;
  std::size_t completion_calls;
  std::size_t tod_calls;
};

Replay RunScripted(const ScriptedDialogue& d, const EngineConfig& config = FixedConfig()) {
  ScriptedCompletion completion(d.user);
  ScriptedTod tod(d.system);
  std::vector<Exemplar> ex = TwoExemplars();
  Transcript t = RunDialogue(ParseGoal(d.goal), ex, completion, tod, config);
  return {std::move(t), completion.calls(), tod.calls()};
}

TEST(RunDialogueTest, SuccessfulDialogue) {
  Replay r = RunScripted(testing::SuccessfulDialogue());
  const Transcript& t = r.transcript;
  ASSERT_TRUE(t.closed());
  EXPECT_EQ(t.termination->kind, TerminationKind::kEndTokenComplete);
  EXPECT_EQ(t.user_turn_count(), 5);
  EXPECT_EQ(t.turns.size(), 9u);
  EXPECT_EQ(t.turns.back().text, "thank you.");
  EXPECT_EQ(t.turns.back().raw_text, "thank you. <end_dialog>");
  EXPECT_TRUE(t.turns.back().ends_dialogue);
  EXPECT_EQ(r.tod_calls, 4u);
  EXPECT_EQ(t.exemplar_ids, (std::vector<std::string>{"EX-TRAIN", "EX-FOOD"}));
  EXPECT_EQ(t.started_at, "1970-01-01T00:00:00Z");
  EXPECT_TRUE(t.annotations.empty());
  EXPECT_TRUE(IsWellFormedHistory(t.turns));
}

TEST(RunDialogueTest, ConversationalLoop) {
  Replay r = RunScripted(testing::LoopDialogue());
  EXPECT_EQ(r.transcript.termination->kind, TerminationKind::kLoopDetected);
  EXPECT_EQ(r.transcript.termination->detail, "repeated at turn pair 10");
  EXPECT_EQ(r.transcript.turns.size(), 20u);
}

TEST(RunDialogueTest, LoopCaughtEarlierWithLongerCap) {
  ScriptedDialogue d = testing::LoopDialogue();
  d.user.push_back("extra");
  d.system.push_back("extra");
  EngineConfig c = FixedConfig();
  c.limits.max_turn_pairs = 20;
  c.limits.loop_repeats = 1;
  Replay r = RunScripted(d, c);
  EXPECT_EQ(r.transcript.termination->kind, TerminationKind::kLoopDetected);
  // Pairs 7-8 already repeat pairs 5-6.
  EXPECT_EQ(r.transcript.termination->detail, "repeated at turn pair 8");
}

TEST(RunDialogueTest, PrematureTermination) {
  Replay r = RunScripted(testing::PrematureDialogue());
  const Transcript& t = r.transcript;
  EXPECT_EQ(t.termination->kind, TerminationKind::kEndTokenPremature);
  EXPECT_EQ(t.termination->detail, "uninformed: train");
  EXPECT_EQ(t.user_turn_count(), 6);
  EXPECT_EQ(t.turns.back().text, "bye");
  EXPECT_EQ(r.tod_calls, 5u);
  DialogueResult res = EvaluateSuccess(t.turns, t.goal, Ontology::DefaultMultiwoz());
  EXPECT_EQ(res.informed("hotel"), true);
  EXPECT_EQ(res.informed("train"), false);
  EXPECT_FALSE(res.success);
}

TEST(RunDialogueTest, MaxTurns) {
  ScriptedDialogue d = testing::SuccessfulDialogue();
  d.user.pop_back();
  d.user.push_back("ok");
  d.system.push_back("anything else ?");
  EngineConfig c = FixedConfig();
  c.limits.max_turn_pairs = 3;
  Replay r = RunScripted(d, c);
  EXPECT_EQ(r.transcript.termination->kind, TerminationKind::kMaxTurnsExceeded);
  EXPECT_EQ(r.transcript.turns.size(), 6u);
}

TEST(RunDialogueTest, ProviderFailuresAreRecorded) {
  FailingCompletion completion(ProviderErrorKind::kTimeout, "no answer");
  ScriptedTod tod({"hello"});
  std::vector<Exemplar> ex = TwoExemplars();
  Goal goal = ParseGoal(testing::SuccessfulDialogue().goal);
  Transcript t = RunDialogue(goal, ex, completion, tod, FixedConfig());
  EXPECT_EQ(t.termination->kind, TerminationKind::kProviderError);
  EXPECT_EQ(t.termination->detail, "Timeout: no answer");
  EXPECT_TRUE(t.turns.empty());

  ScriptedCompletion talk({"i need a train", "more"});
  FailingTod down(ProviderErrorKind::kRemote, "503");
  t = RunDialogue(goal, ex, talk, down, FixedConfig());
  EXPECT_EQ(t.termination->detail, "Remote: 503");
  ASSERT_EQ(t.turns.size(), 1u);
  EXPECT_EQ(t.turns[0].text, "i need a train");
}

TEST(RunDialogueTest, EmptyCompletionIsMalformed) {
  ScriptedCompletion completion({"   "});
  ScriptedTod tod({"hello"});
  std::vector<Exemplar> ex = TwoExemplars();
  Transcript t = RunDialogue(ParseGoal(testing::SuccessfulDialogue().goal), ex,
                             completion, tod, FixedConfig());
  EXPECT_EQ(t.termination->kind, TerminationKind::kProviderError);
  EXPECT_EQ(t.termination->detail.rfind("Malformed:", 0), 0u);
}

TEST(RunDialogueTest, PromptTooLargeIsRecorded) {
  EngineConfig c = FixedConfig();
  c.completion.max_context = 100;
  Replay r = RunScripted(testing::SuccessfulDialogue(), c);
  EXPECT_EQ(r.transcript.termination->kind, TerminationKind::kProviderError);
  EXPECT_EQ(r.transcript.termination->detail.rfind("BudgetExceeded:", 0), 0u);
  EXPECT_EQ(r.completion_calls, 0u);
}

TEST(RunDialogueTest, PromptsSeeTheGrowingHistory) {
  ScriptedDialogue d = testing::SuccessfulDialogue();
  ScriptedCompletion completion(d.user);
  ScriptedTod tod(d.system);
  std::vector<Exemplar> ex = TwoExemplars();
  RunDialogue(ParseGoal(d.goal), ex, completion, tod, FixedConfig());
  std::vector<std::string> prompts = completion.prompts();
  ASSERT_EQ(prompts.size(), 5u);
  EXPECT_TRUE(prompts[0].ends_with("Conversation:\nUser:"));
  EXPECT_NE(prompts[1].find("System: " + d.system[0] + "\nUser:"), std::string::npos);
  EXPECT_NE(prompts[0].find("- train reqt duration."), std::string::npos);
}

std::vector<Turn> Pairs(const std::vector<std::pair<std::string, std::string>>& p) {
  std::vector<std::string> u, s;
  for (const auto& [a, b] : p) {
    u.push_back(a);
    s.push_back(b);
  }
  return Interleave(u, s);
}

TEST(DetectLoopTest, Windows) {
  auto turns = Pairs({{"a", "1"}, {"b", "2"}, {"a", "1"}, {"b", "2"}, {"A!", "1."}, {"b", "2"}});
  EXPECT_TRUE(DetectLoop(turns, 2, 2));
  EXPECT_FALSE(DetectLoop(std::span<const Turn>(turns).first(8), 2, 2));
  EXPECT_TRUE(DetectLoop(std::span<const Turn>(turns).first(8), 2, 1));
  EXPECT_FALSE(DetectLoop(turns, 1, 1));
  auto same = Pairs({{"x", "y"}, {"x", "y"}});
  EXPECT_TRUE(DetectLoop(same, 1, 1));
  EXPECT_FALSE(DetectLoop(same, 1, 2));
  // A dangling user turn is not a pair.
  std::vector<Turn> dangling = same;
  dangling.push_back(MakeUserTurn("x", 4));
  EXPECT_TRUE(DetectLoop(dangling, 1, 1));
  EXPECT_FALSE(DetectLoop(same, 0, 1));
}

TEST(FlagHallucinationTest, OffGoalDomains) {
  Goal goal = ParseGoal("{'train': {'info': {'day': 'friday'}}}");
  auto turns = Interleave({"a train on friday", "also book me a hotel and a taxi"},
                          {"[value_id] leaves at [value_leave] .", "ok"});
  std::vector<Annotation> notes = FlagHallucination(turns, goal, DefaultDomainLexicon());
  ASSERT_EQ(notes.size(), 2u);
  std::set<std::string> domains = {notes[0].domain, notes[1].domain};
  EXPECT_EQ(domains, (std::set<std::string>{"hotel", "taxi"}));
  EXPECT_EQ(notes[0].turn_index, 2);
  EXPECT_EQ(notes[0].kind, TerminationKind::kHallucinationFlagged);
  // System turns never count, nor do partial words.
  auto quiet = Interleave({"a train on friday", "hotelier"}, {"a hotel ?", "ok"});
  EXPECT_TRUE(FlagHallucination(quiet, goal, DefaultDomainLexicon()).empty());
}

TEST(RunGoldTurnTest, NextUserTurn) {
  ScriptedDialogue d = testing::SuccessfulDialogue();
  std::vector<Turn> gold = Interleave(d);
  std::vector<Exemplar> ex = TwoExemplars();
  ScriptedCompletion completion({"i would like to leave at 20:30. System: sure"});
  Turn t = RunGoldTurn(std::span<const Turn>(gold).first(2), ParseGoal(d.goal), ex,
                       completion, FixedConfig());
  EXPECT_EQ(t.index, 2);
  EXPECT_EQ(t.speaker, Speaker::kUser);
  EXPECT_EQ(completion.calls(), 1u);
  EXPECT_THROW(RunGoldTurn(std::span<const Turn>(gold).first(1), ParseGoal(d.goal), ex,
                           completion, FixedConfig()),
               std::invalid_argument);
  FailingCompletion broken(ProviderErrorKind::kRemote, "down");
  EXPECT_THROW(RunGoldTurn({}, ParseGoal(d.goal), ex, broken, FixedConfig()), ProviderError);
}

TEST(SessionLimitsTest, Validate) {
  SessionLimits l;
  EXPECT_NO_THROW(l.Validate());
  l.loop_window = 0;
  EXPECT_THROW(l.Validate(), std::invalid_argument);
}

ProviderFactory ScenarioProviders() {
  return {
      [](std::size_t i) -> std::unique_ptr<CompletionProvider> {
        return std::make_unique<ScriptedCompletion>(testing::MakeScenario(i).user);
      },
      [](std::size_t i) -> std::unique_ptr<TodProvider> {
        return std::make_unique<ScriptedTod>(testing::MakeScenario(i).system);
      }};
}

std::vector<Goal> ScenarioGoals(std::size_t n) {
  std::vector<Goal> goals;
  for (std::size_t i = 0; i < n; ++i) goals.push_back(testing::MakeScenario(i).goal);
  return goals;
}

class BatchTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("todsim_engine_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(BatchTest, DeterministicAcrossRuns) {
  std::vector<Goal> goals = ScenarioGoals(10);
  std::vector<Exemplar> pool = testing::SmokeExemplars();
  BatchConfig c;
  c.engine.clock = EpochClock;
  c.goal_file = "goals.jsonl";
  std::string files[2][2];
  for (int run = 0; run < 2; ++run) {
    c.output_dir = dir_ / std::to_string(run);
    std::filesystem::create_directories(c.output_dir);
    BatchResult r = RunBatch(goals, pool, 42, c, ScenarioProviders());
    EXPECT_EQ(r.transcripts.size(), 10u);
    files[run][0] = ReadFile(c.output_dir / "transcripts.jsonl");
    files[run][1] = ReadFile(c.output_dir / "manifest.json");
  }
  EXPECT_EQ(files[0][0], files[1][0]);
  EXPECT_EQ(files[0][1], files[1][1]);

  RunManifest m = RunManifest::FromJson(nlohmann::ordered_json::parse(files[0][1]));
  EXPECT_EQ(m.seed, 42u);
  EXPECT_EQ(m.transcripts.size(), 10u);
  EXPECT_EQ(m.transcripts[3].goal_id, "SIM1003");
  EXPECT_EQ(m.transcripts[3].line, 4u);
  EXPECT_EQ(m.ToJson().dump(2) + "\n", files[0][1]);
  int total = 0;
  for (const auto& [kind, n] : m.termination_counts) total += n;
  EXPECT_EQ(total, 10);
  // Dialogues 4 and 9 stop after their first domain.
  EXPECT_EQ(m.transcripts[4].termination, "EndTokenPremature");
  EXPECT_EQ(m.transcripts[0].termination, "EndTokenComplete");
  EXPECT_EQ(ParseTranscripts(files[0][0]).size(), 10u);
}

TEST_F(BatchTest, SeedChangesExemplarsAndRunId) {
  std::vector<Goal> goals = ScenarioGoals(10);
  std::vector<Exemplar> pool = testing::SmokeExemplars();
  BatchConfig c;
  c.engine.clock = EpochClock;
  BatchResult a = RunBatch(goals, pool, 1, c, ScenarioProviders());
  BatchResult b = RunBatch(goals, pool, 2, c, ScenarioProviders());
  EXPECT_NE(a.manifest.run_id, b.manifest.run_id);
  bool differs = false;
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a.transcripts[i].exemplar_ids.size(), 2u);
    differs |= a.transcripts[i].exemplar_ids != b.transcripts[i].exemplar_ids;
  }
  EXPECT_TRUE(differs);
}

TEST_F(BatchTest, ParallelMatchesSerial) {
  std::vector<Goal> goals = ScenarioGoals(12);
  std::vector<Exemplar> pool = testing::SmokeExemplars();
  BatchConfig c;
  c.engine.clock = EpochClock;
  BatchResult serial = RunBatch(goals, pool, 5, c, ScenarioProviders());
  c.parallelism = 4;
  BatchResult parallel = RunBatch(goals, pool, 5, c, ScenarioProviders());
  EXPECT_EQ(TranscriptsToJsonl(serial.transcripts), TranscriptsToJsonl(parallel.transcripts));
  EXPECT_EQ(serial.manifest.ToJson(), parallel.manifest.ToJson());
}

TEST_F(BatchTest, EmptyInputsAndFailures) {
  std::vector<Goal> none;
  std::vector<Exemplar> pool = testing::SmokeExemplars();
  BatchConfig c;
  c.engine.clock = EpochClock;
  BatchResult r = RunBatch(none, pool, 1, c, ScenarioProviders());
  EXPECT_TRUE(r.transcripts.empty());
  EXPECT_TRUE(r.manifest.termination_counts.empty());

  std::vector<Goal> goals = ScenarioGoals(2);
  std::vector<Exemplar> empty_pool;
  EXPECT_THROW(RunBatch(goals, empty_pool, 1, c, ScenarioProviders()), std::invalid_argument);

  // A single-exemplar pool still runs with k = 1; a throwing factory is
  // recorded per dialogue.
  std::vector<Exemplar> small = {pool[0]};
  ProviderFactory broken = ScenarioProviders();
  broken.tod = [](std::size_t i) -> std::unique_ptr<TodProvider> {
    if (i == 1) throw std::runtime_error("tod unavailable");
    return std::make_unique<ScriptedTod>(testing::MakeScenario(i).system);
  };
  BatchResult mixed = RunBatch(goals, small, 1, c, broken);
  EXPECT_EQ(mixed.transcripts[0].exemplar_ids, std::vector<std::string>{"EX-TRAIN"});
  EXPECT_EQ(mixed.transcripts[1].termination->kind, TerminationKind::kProviderError);
  EXPECT_EQ(mixed.transcripts[1].termination->detail, "tod unavailable");
  EXPECT_EQ(mixed.manifest.termination_counts["ProviderError"], 1);
}

TEST(DialogueSeedTest, DistinctPerIndex) {
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < 1000; ++i) seen.insert(DialogueSeed(7, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(DialogueSeed(7, 3), DialogueSeed(7, 3));
  EXPECT_NE(DialogueSeed(7, 3), DialogueSeed(8, 3));
}

}  // namespace
}  // namespace todsim
