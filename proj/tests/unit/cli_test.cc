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

#include "cli.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "support/scenarios.h"
#include "todsim/corpus.h"

namespace todsim::cli {
namespace {

namespace fs = std::filesystem;

EnvLookup NoEnv() {
  return [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
}

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome RunCli(std::vector<std::string> args, const EnvLookup& env = NoEnv()) {
  args.insert(args.begin(), "todsim");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int status = Main(static_cast<int>(argv.size()), argv.data(), out, err, env);
  return {status, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("todsim_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    in_ = testing::WriteSmokeInputs(dir_ / "in", 3);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string P(const fs::path& p) const { return p.string(); }

  fs::path dir_;
  testing::SmokeInputs in_;
};

TEST_F(CliTest, SimulateThreeGoals) {
  Outcome r = RunCli({"simulate", "--goals", P(in_.goals), "--exemplars", P(in_.exemplars),
                   "--script", P(in_.script), "--seed", "7", "--output", P(dir_ / "run"),
                   "--fixed-timestamps"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find(": 3 dialogues"), std::string::npos);
  EXPECT_NE(r.out.find("EndTokenComplete: 3"), std::string::npos);
  EXPECT_NE(r.out.find("manifest.json"), std::string::npos);
  EXPECT_EQ(LoadTranscripts(dir_ / "run" / "transcripts.jsonl").size(), 3u);

  Outcome again = RunCli({"simulate", "--goals", P(in_.goals), "--exemplars", P(in_.exemplars),
                       "--script", P(in_.script), "--seed", "7", "--output",
                       P(dir_ / "run2"), "--fixed-timestamps"});
  ASSERT_EQ(again.status, 0);
  EXPECT_EQ(ReadFile(dir_ / "run" / "transcripts.jsonl"),
            ReadFile(dir_ / "run2" / "transcripts.jsonl"));
  auto m1 = nlohmann::json::parse(ReadFile(dir_ / "run" / "manifest.json"));
  auto m2 = nlohmann::json::parse(ReadFile(dir_ / "run2" / "manifest.json"));
  EXPECT_EQ(m1["run_id"], m2["run_id"]);
  EXPECT_EQ(m1["transcripts"], m2["transcripts"]);
}

TEST_F(CliTest, SimulateConfigErrors) {
  Outcome missing = RunCli({"simulate", "--goals", P(dir_ / "nope.jsonl"), "--exemplars",
                         P(in_.exemplars), "--script", P(in_.script), "--seed", "1"});
  EXPECT_EQ(missing.status, 2);
  EXPECT_NE(missing.err.find("nope.jsonl"), std::string::npos);

  Outcome no_seed = RunCli({"simulate", "--goals", P(in_.goals), "--exemplars",
                         P(in_.exemplars), "--script", P(in_.script)});
  EXPECT_EQ(no_seed.status, 2);
  EXPECT_NE(no_seed.err.find("--seed"), std::string::npos);

  Outcome no_provider = RunCli({"simulate", "--goals", P(in_.goals), "--exemplars",
                             P(in_.exemplars), "--seed", "1"});
  EXPECT_EQ(no_provider.status, 2);

  std::ofstream(dir_ / "bad.json") << R"({"goals": "x", "colour": "blue"})";
  Outcome bad_config = RunCli({"simulate", "--config", P(dir_ / "bad.json")});
  EXPECT_EQ(bad_config.status, 2);
  EXPECT_NE(bad_config.err.find("colour"), std::string::npos);
}

TEST_F(CliTest, ConfigLayering) {
  // The file caps dialogues at one turn pair; the command line lifts the cap.
  std::ofstream(dir_ / "c.json") << nlohmann::json{{"goals", P(in_.goals)},
                                                   {"exemplars", P(in_.exemplars)},
                                                   {"seed", 3},
                                                   {"max_turn_pairs", 1},
                                                   {"fixed_timestamps", true}}
                                        .dump();
  Outcome file_only = RunCli({"simulate", "--config", P(dir_ / "c.json"), "--script",
                           P(in_.script), "--output", P(dir_ / "a")});
  ASSERT_EQ(file_only.status, 0) << file_only.err;
  EXPECT_NE(file_only.out.find("MaxTurnsExceeded"), std::string::npos);
  Outcome cli_wins = RunCli({"simulate", "--config", P(dir_ / "c.json"), "--script",
                          P(in_.script), "--output", P(dir_ / "b"), "--max-turn-pairs", "10"});
  ASSERT_EQ(cli_wins.status, 0);
  EXPECT_EQ(cli_wins.out.find("MaxTurnsExceeded"), std::string::npos);

  RunConfig c = RunConfig::FromJson({{"completion_url", "http://file/x"}, {"tod_url", "http://file/t"}});
  c.ApplyEnv([](const std::string& k) -> std::optional<std::string> {
    if (k == "COMPLETION_URL") return "http://env/x";
    return std::nullopt;
  });
  EXPECT_EQ(c.completion_url, "http://env/x");
  EXPECT_EQ(c.tod_url, "http://file/t");
}

TEST_F(CliTest, EvaluateReport) {
  ASSERT_EQ(RunCli({"simulate", "--goals", P(in_.goals), "--exemplars", P(in_.exemplars),
                 "--script", P(in_.script), "--seed", "1", "--output", P(dir_ / "run")})
                .status,
            0);
  fs::path transcripts = dir_ / "run" / "transcripts.jsonl";
  Outcome r = RunCli({"evaluate", "--transcripts", P(transcripts), "--goals", P(in_.goals),
                   "--json", P(dir_ / "report.json")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("Combo Score"), std::string::npos);
  auto doc = nlohmann::json::parse(ReadFile(dir_ / "report.json"));
  ASSERT_EQ(doc["rows"].size(), 4u);
  EXPECT_EQ(doc["rows"][3]["intents"], "All");
  EXPECT_EQ(doc["rows"][3]["num_dialogs"], 3);
  EXPECT_DOUBLE_EQ(doc["rows"][3]["inform"].get<double>(), 100.0);
  EXPECT_DOUBLE_EQ(doc["rows"][3]["success"].get<double>(), 100.0);

  // Two goals for three transcripts.
  {
    std::istringstream goals(ReadFile(in_.goals));
    std::ofstream two(dir_ / "two.jsonl");
    std::string line;
    for (int i = 0; i < 2 && std::getline(goals, line); ++i) two << line << "\n";
  }
  Outcome mismatch = RunCli({"evaluate", "--transcripts", P(transcripts), "--goals",
                          P(dir_ / "two.jsonl")});
  EXPECT_EQ(mismatch.status, 1);
  EXPECT_NE(mismatch.err.find("mismatch"), std::string::npos);

  std::ofstream(dir_ / "empty.jsonl").close();
  Outcome empty = RunCli({"evaluate", "--transcripts", P(dir_ / "empty.jsonl")});
  EXPECT_EQ(empty.status, 0);
  EXPECT_EQ(empty.out.find("All"), std::string::npos);
  EXPECT_NE(empty.out.find("Num Dialogs"), std::string::npos);
}

TEST_F(CliTest, MetricsFromTextAndConllu) {
  std::ofstream(dir_ / "u.txt") << "a a a a\na a\n";
  std::ofstream(dir_ / "p.conllu")
      << "1\tdogs\t_\tNOUN\t_\t_\t2\t_\t_\t_\n2\tchase\t_\tVERB\t_\t_\t0\t_\t_\t_\n"
         "3\tcats\t_\tNOUN\t_\t_\t2\t_\t_\t_\n4\tquickly\t_\tADV\t_\t_\t2\t_\t_\t_\n\n";
  Outcome r = RunCli({"metrics", "--text", P(dir_ / "u.txt"), "--conllu", P(dir_ / "p.conllu"),
                   "--json", P(dir_ / "m.json")});
  ASSERT_EQ(r.status, 0) << r.err;
  auto doc = nlohmann::json::parse(ReadFile(dir_ / "m.json"));
  EXPECT_NEAR(doc["mtld"].get<double>(), 2.0, 1e-9);
  EXPECT_NEAR(doc["mean_dep"].get<double>(), 4.0 / 3.0, 1e-9);
  EXPECT_EQ(doc["utterances"], 2);
  EXPECT_NE(r.out.find("MTLD         2.00"), std::string::npos);

  EXPECT_EQ(RunCli({"metrics"}).status, 2);
}

TEST_F(CliTest, Gold) {
  // A gold file holding one dialogue with five user turns.
  std::vector<Transcript> all = LoadTranscripts(in_.exemplars);
  WriteTranscripts(dir_ / "gold_in.jsonl", std::span<const Transcript>(all).first(1));
  std::ofstream(dir_ / "gold_script.json")
      << nlohmann::json{{"completion", {{"generated turn"}}}}.dump();
  Outcome r = RunCli({"gold", "--dialogues", P(dir_ / "gold_in.jsonl"), "--exemplars",
                   P(in_.exemplars), "--script", P(dir_ / "gold_script.json"), "--output",
                   P(dir_ / "g")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("gold contexts: 5, generated: 5, errors: 0"), std::string::npos);
  std::istringstream lines(ReadFile(dir_ / "g" / "gold.jsonl"));
  int n = 0;
  for (std::string l; std::getline(lines, l); ++n) {
    auto rec = nlohmann::json::parse(l);
    EXPECT_EQ(rec["generated"], "generated turn");
    EXPECT_EQ(rec["turn_index"], 2 * n);
  }
  EXPECT_EQ(n, 5);

  std::ofstream(dir_ / "down.json") << R"({"completion": [[]]})";
  Outcome down = RunCli({"gold", "--dialogues", P(dir_ / "gold_in.jsonl"), "--exemplars",
                      P(in_.exemplars), "--script", P(dir_ / "down.json"), "--output",
                      P(dir_ / "g2")});
  EXPECT_EQ(down.status, 0);
  EXPECT_NE(down.out.find("errors: 5"), std::string::npos);
  EXPECT_NE(down.err.find("warning"), std::string::npos);

  std::ofstream(dir_ / "none.jsonl").close();
  Outcome empty = RunCli({"gold", "--dialogues", P(dir_ / "none.jsonl"), "--script",
                       P(dir_ / "gold_script.json"), "--output", P(dir_ / "g3")});
  EXPECT_EQ(empty.status, 0) << empty.err;
  EXPECT_EQ(ReadFile(dir_ / "g3" / "gold.jsonl"), "");
}

TEST_F(CliTest, ServePortConflict) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof(addr);
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), len), 0);
  ASSERT_EQ(::listen(fd, 1), 0);
  ASSERT_EQ(::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len), 0);
  int port = ntohs(addr.sin_port);
  std::ofstream(dir_ / "tod.json") << R"({"tod": [["hello"]]})";
  Outcome r = RunCli({"serve", "--goals", P(in_.goals), "--script", P(dir_ / "tod.json"),
                   "--port", std::to_string(port), "--output", P(dir_ / "srv")});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("cannot bind"), std::string::npos);
  ::close(fd);
}

std::string WaitForLine(const fs::path& file, const std::string& needle) {
  for (int i = 0; i < 200; ++i) {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    if (ss.str().find(needle) != std::string::npos) return ss.str();
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  }
  return "";
}

TEST_F(CliTest, ServeDrainsOnSigterm) {
  std::ofstream(dir_ / "tod.json") << R"({"tod": [["hello there"]]})";
  fs::path log = dir_ / "serve.log";
  pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    if (std::freopen(log.c_str(), "w", stdout) == nullptr) ::_exit(126);
    ::execl(TODSIM_CLI_BINARY, TODSIM_CLI_BINARY, "serve", "--goals", in_.goals.c_str(),
            "--script", (dir_ / "tod.json").c_str(), "--port", "0", "--output",
            (dir_ / "srv").c_str(), nullptr);
    ::_exit(127);
  }
  std::string banner = WaitForLine(log, "listening on http://127.0.0.1:");
  ASSERT_FALSE(banner.empty());
  int port = std::stoi(banner.substr(banner.rfind(':') + 1));

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/sessions", R"({"goal_id": "SIM1000", "annotator_id": "a"})",
                             "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  std::string id = nlohmann::json::parse(created->body)["session_id"];
  auto msg = client.Post("/sessions/" + id + "/message", R"({"text": "hi"})", "application/json");
  ASSERT_TRUE(msg);
  EXPECT_EQ(msg->status, 200);

  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  std::vector<Transcript> saved = LoadTranscripts(dir_ / "srv" / "human2bot.jsonl");
  ASSERT_EQ(saved.size(), 1u);
  EXPECT_EQ(saved[0].metadata["state"], "Abandoned");
  EXPECT_EQ(saved[0].turns.size(), 2u);
  EXPECT_NE(ReadFile(log).find("abandoned 1 open session"), std::string::npos);
}

}  // namespace
}  // namespace todsim::cli
