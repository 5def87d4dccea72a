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

// Session service for collecting human-to-bot dialogues: annotators get a
// goal and a complexity instruction, chat with a TOD endpoint, and close the
// session; closed sessions are appended to a transcript file.

#ifndef TODSIM_SERVICE_H_
#define TODSIM_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "todsim/dialogue.h"
#include "todsim/engine.h"
#include "todsim/error.h"
#include "todsim/goal.h"
#include "todsim/providers.h"

namespace todsim {

enum class ServiceErrorKind {
  kUnknownGoal,
  kUnknownSession,
  kSessionClosed,
  kInvalidRequest,
};
const char* ServiceErrorKindName(ServiceErrorKind kind);
using ServiceError = KindError<ServiceErrorKind, ServiceErrorKindName>;

enum class SessionState { kOpen, kCompleted, kAbandoned };
const char* SessionStateName(SessionState state);
std::optional<SessionState> SessionStateFromName(std::string_view name);

struct Session {
  std::string session_id;
  std::string goal_id;
  Goal goal;
  std::string nl_goal;
  std::vector<std::string> complexity_instructions;
  std::string annotator_id;
  std::vector<Turn> turns;
  SessionState state = SessionState::kOpen;
  std::string created_at;

  nlohmann::ordered_json ToJson() const;
};

// Instructions that make human dialogues harder for the TOD system.
const std::vector<std::string>& DefaultComplexityBank();

struct SessionStoreOptions {
  std::vector<std::string> instruction_bank = DefaultComplexityBank();
  std::size_t instructions_per_session = 1;
  std::uint64_t seed = 0;
  // Closed sessions are appended here, one transcript per line.
  std::filesystem::path transcript_path = "human2bot.jsonl";
  Clock clock = UtcNow;
};

struct StoredRef {
  std::string file;
  std::size_t line = 0;  // 1-based
};

class SessionStore {
 public:
  // Goal ids are each goal's source id, or its position when it has none.
  // `tod` must be safe to call from several threads.
  SessionStore(std::vector<Goal> goals, std::shared_ptr<TodProvider> tod,
               SessionStoreOptions options = {});

  // Throws ServiceError: kUnknownGoal, kInvalidRequest (empty annotator).
  Session Create(std::string_view goal_id, std::string_view annotator_id);

  // Appends the user turn and the system reply together, or nothing when the
  // TOD call fails (the ProviderError propagates). Throws ServiceError:
  // kUnknownSession, kSessionClosed, kInvalidRequest (empty text).
  std::string PostMessage(std::string_view session_id, std::string_view text);

  // Persists the transcript and closes the session. `outcome` must be
  // Completed or Abandoned. Throws ServiceError.
  StoredRef Complete(std::string_view session_id, SessionState outcome);

  Session Get(std::string_view session_id) const;

  struct GoalListing {
    std::string goal_id;
    std::string nl_goal;
    int intents = 0;
  };
  std::vector<GoalListing> Goals() const;

  // Abandons and persists every open session; returns how many.
  std::size_t Drain();

  std::size_t open_sessions() const;

 private:
  struct Slot {
    explicit Slot(Session s) : session(std::move(s)) {}
    std::mutex mu;  // serializes operations on one session
    Session session;
  };

  std::shared_ptr<Slot> Lookup(std::string_view session_id) const;
  StoredRef Persist(const Session& session);

  std::vector<std::pair<std::string, Goal>> goals_;
  std::shared_ptr<TodProvider> tod_;
  SessionStoreOptions options_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
  std::uint64_t next_session_ = 0;

  std::mutex file_mu_;
  std::size_t lines_written_ = 0;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // When non-empty, requests must send "Authorization: Bearer <token>".
  std::string token;
};

// HTTP front end:
//   POST /sessions                {goal_id, annotator_id} -> session
//   POST /sessions/{id}/message   {text} -> {reply}
//   POST /sessions/{id}/complete  {outcome} -> {state, transcript}
//   GET  /goals                   -> {goals: [{goal_id, nl_goal, intents}]}
//   GET  /sessions/{id}           -> session
// Errors are {kind, detail}.
class ServiceServer {
 public:
  ServiceServer(SessionStore& store, ServerOptions options);
  ~ServiceServer();

  ServiceServer(const ServiceServer&) = delete;
  ServiceServer& operator=(const ServiceServer&) = delete;

  // Binds the socket; throws std::runtime_error when the port is taken.
  // Returns the bound port.
  int Bind();
  // Serves until Stop(); blocks.
  void Serve();
  // Bind() then Serve() on a background thread.
  int Start();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace todsim

#endif  // TODSIM_SERVICE_H_
