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

#include "todsim/service.h"

#include <fstream>
#include <random>
#include <thread>

#include "httplib.h"
#include "text_util.h"
#include "todsim/corpus.h"

namespace todsim {

using nlohmann::ordered_json;

const char* ServiceErrorKindName(ServiceErrorKind kind) {
  switch (kind) {
    case ServiceErrorKind::kUnknownGoal:
      return "UnknownGoal";
    case ServiceErrorKind::kUnknownSession:
      return "UnknownSession";
    case ServiceErrorKind::kSessionClosed:
      return "SessionClosed";
    case ServiceErrorKind::kInvalidRequest:
      return "InvalidRequest";
  }
  return "ServiceError";
}

const char* SessionStateName(SessionState state) {
  switch (state) {
    case SessionState::kOpen:
      return "Open";
    case SessionState::kCompleted:
      return "Completed";
    case SessionState::kAbandoned:
      return "Abandoned";
  }
  return "Unknown";
}

std::optional<SessionState> SessionStateFromName(std::string_view name) {
  for (auto s : {SessionState::kOpen, SessionState::kCompleted, SessionState::kAbandoned}) {
    if (name == SessionStateName(s)) return s;
  }
  return std::nullopt;
}

ordered_json Session::ToJson() const {
  ordered_json doc;
  doc["session_id"] = session_id;
  doc["goal_id"] = goal_id;
  doc["goal"] = GoalToJson(goal);
  doc["nl_goal"] = nl_goal;
  doc["complexity_instructions"] = complexity_instructions;
  doc["annotator_id"] = annotator_id;
  doc["turns"] = TurnsToJson(turns);
  doc["state"] = SessionStateName(state);
  doc["created_at"] = created_at;
  return doc;
}

const std::vector<std::string>& DefaultComplexityBank() {
  static const std::vector<std::string>* const kBank = new std::vector<std::string>{
      "At some point, give two different values for the same slot.",
      "Change a slot value you already stated later in the conversation.",
      "Ask a question that is unrelated to your goal before continuing.",
      "Correct the system when it repeats back a detail you did not ask for.",
      "Answer a question with more detail than was asked for.",
      "Mention one constraint only after the system has made an offer.",
  };
  return *kBank;
}

// --------------------------------------------------------------------------
// SessionStore

SessionStore::SessionStore(std::vector<Goal> goals, std::shared_ptr<TodProvider> tod,
                           SessionStoreOptions options)
    : tod_(std::move(tod)), options_(std::move(options)) {
  for (std::size_t i = 0; i < goals.size(); ++i) {
    std::string id = goals[i].source_id().value_or(std::to_string(i));
    goals_.emplace_back(std::move(id), std::move(goals[i]));
  }
}

Session SessionStore::Create(std::string_view goal_id, std::string_view annotator_id) {
  if (internal::Trim(annotator_id).empty()) {
    throw ServiceError(ServiceErrorKind::kInvalidRequest, "annotator_id is empty");
  }
  const Goal* goal = nullptr;
  for (const auto& [id, g] : goals_) {
    if (id == goal_id) goal = &g;
  }
  if (goal == nullptr) {
    throw ServiceError(ServiceErrorKind::kUnknownGoal,
                       "no goal with id '" + std::string(goal_id) + "'");
  }

  std::unique_lock lock(sessions_mu_);
  const std::uint64_t n = next_session_++;
  std::vector<std::string> instructions;
  const auto& bank = options_.instruction_bank;
  if (!bank.empty()) {
    const std::size_t k = std::min(options_.instructions_per_session, bank.size());
    for (std::size_t i : SampleIndices(bank.size(), k, DialogueSeed(options_.seed, n))) {
      instructions.push_back(bank[i]);
    }
  }
  char id[24];
  std::snprintf(id, sizeof(id), "s%06llu", static_cast<unsigned long long>(n + 1));
  auto slot = std::make_shared<Slot>(Session{id, std::string(goal_id), *goal, RenderNaturalLanguage(*goal),
                  std::move(instructions), std::string(annotator_id), {},
                  SessionState::kOpen, options_.clock()});
  sessions_.emplace(id, slot);
  return slot->session;
}

std::shared_ptr<SessionStore::Slot> SessionStore::Lookup(std::string_view session_id) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw ServiceError(ServiceErrorKind::kUnknownSession,
                       "no session '" + std::string(session_id) + "'");
  }
  return it->second;
}

std::string SessionStore::PostMessage(std::string_view session_id, std::string_view text) {
  std::shared_ptr<Slot> slot = Lookup(session_id);
  std::lock_guard lock(slot->mu);
  Session& s = slot->session;
  if (s.state != SessionState::kOpen) {
    throw ServiceError(ServiceErrorKind::kSessionClosed,
                       "session '" + s.session_id + "' is " + SessionStateName(s.state));
  }
  const std::string trimmed(internal::Trim(text));
  if (trimmed.empty()) {
    throw ServiceError(ServiceErrorKind::kInvalidRequest, "message text is empty");
  }
  // Humans close sessions explicitly, so the end token is not interpreted.
  Turn user{Speaker::kUser, trimmed, trimmed, static_cast<int>(s.turns.size()), false};
  std::string reply = tod_->Respond(s.turns, user.text);
  Turn system = MakeSystemTurn(reply, user.index + 1);
  s.turns.push_back(std::move(user));
  s.turns.push_back(std::move(system));
  return reply;
}

StoredRef SessionStore::Persist(const Session& session) {
  Transcript t(session.goal);
  t.turns = session.turns;
  t.started_at = session.created_at;
  t.Close({TerminationKind::kHumanClosed, SessionStateName(session.state)},
          options_.clock());
  t.metadata["session_id"] = session.session_id;
  t.metadata["goal_id"] = session.goal_id;
  t.metadata["annotator_id"] = session.annotator_id;
  t.metadata["complexity_instructions"] = session.complexity_instructions;
  t.metadata["nl_goal"] = session.nl_goal;
  t.metadata["state"] = SessionStateName(session.state);
  if (!t.goal.source_id()) t.goal = t.goal.WithSourceId(session.goal_id);

  const std::string line = TranscriptToLine(t) + "\n";
  std::lock_guard lock(file_mu_);
  const auto& path = options_.transcript_path;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  if (!out) {
    throw CorpusError(CorpusErrorKind::kFileUnreadable,
                      "cannot append to " + path.string());
  }
  return {path.string(), ++lines_written_};
}

StoredRef SessionStore::Complete(std::string_view session_id, SessionState outcome) {
  if (outcome == SessionState::kOpen) {
    throw ServiceError(ServiceErrorKind::kInvalidRequest,
                       "outcome must be Completed or Abandoned");
  }
  std::shared_ptr<Slot> slot = Lookup(session_id);
  std::lock_guard lock(slot->mu);
  Session& s = slot->session;
  if (s.state != SessionState::kOpen) {
    throw ServiceError(ServiceErrorKind::kSessionClosed,
                       "session '" + s.session_id + "' is already " +
                           SessionStateName(s.state));
  }
  Session closed = s;
  closed.state = outcome;
  StoredRef ref = Persist(closed);
  s.state = outcome;
  return ref;
}

Session SessionStore::Get(std::string_view session_id) const {
  std::shared_ptr<Slot> slot = Lookup(session_id);
  std::lock_guard lock(slot->mu);
  return slot->session;
}

std::vector<SessionStore::GoalListing> SessionStore::Goals() const {
  std::vector<GoalListing> out;
  for (const auto& [id, g] : goals_) {
    out.push_back({id, RenderNaturalLanguage(g), CountIntents(g)});
  }
  return out;
}

std::size_t SessionStore::Drain() {
  std::vector<std::string> ids;
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& [id, slot] : sessions_) ids.push_back(id);
  }
  std::size_t n = 0;
  for (const std::string& id : ids) {
    try {
      Complete(id, SessionState::kAbandoned);
      ++n;
    } catch (const ServiceError&) {
      // Already closed.
    }
  }
  return n;
}

std::size_t SessionStore::open_sessions() const {
  std::shared_lock lock(sessions_mu_);
  std::size_t n = 0;
  for (const auto& [id, slot] : sessions_) {
    std::lock_guard l(slot->mu);
    n += slot->session.state == SessionState::kOpen;
  }
  return n;
}

// --------------------------------------------------------------------------
// HTTP

struct ServiceServer::Impl {
  SessionStore& store;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  Impl(SessionStore& s, ServerOptions o) : store(s), options(std::move(o)) {}
};

namespace {

int StatusFor(ServiceErrorKind kind) {
  switch (kind) {
    case ServiceErrorKind::kUnknownGoal:
    case ServiceErrorKind::kUnknownSession:
      return 404;
    case ServiceErrorKind::kSessionClosed:
      return 409;
    case ServiceErrorKind::kInvalidRequest:
      return 400;
  }
  return 500;
}

void Reply(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response& res, int status, std::string kind, std::string detail) {
  Reply(res, status, ordered_json{{"kind", std::move(kind)}, {"detail", std::move(detail)}});
}

nlohmann::json Body(const httplib::Request& req) {
  try {
    nlohmann::json doc = nlohmann::json::parse(req.body);
    if (!doc.is_object()) throw std::invalid_argument("body must be an object");
    return doc;
  } catch (const std::exception& e) {
    throw ServiceError(ServiceErrorKind::kInvalidRequest,
                       std::string("bad request body: ") + e.what());
  }
}

std::string Field(const nlohmann::json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    throw ServiceError(ServiceErrorKind::kInvalidRequest,
                       std::string("missing string field '") + key + "'");
  }
  return body.at(key).get<std::string>();
}

}  // namespace

ServiceServer::ServiceServer(SessionStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
  httplib::Server& srv = impl_->server;
  Impl* self = impl_.get();

  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.set_pre_routing_handler([self](const httplib::Request& req, httplib::Response& res) {
    if (self->options.token.empty() || req.method == "OPTIONS") {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    if (req.get_header_value("Authorization") != "Bearer " + self->options.token) {
      ReplyError(res, 401, "Unauthorized", "missing or wrong token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  // Wraps a handler with the shared error mapping.
  auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const ServiceError& e) {
        ReplyError(res, StatusFor(e.kind()), e.kind_name(), e.detail());
      } catch (const ProviderError& e) {
        const int status = e.kind() == ProviderErrorKind::kTimeout ? 504 : 502;
        ReplyError(res, status, "ProviderError", e.kind_name() + ": " + e.detail());
      } catch (const std::exception& e) {
        ReplyError(res, 500, "Internal", e.what());
      }
    };
  };

  srv.Post("/sessions", guarded([self](const httplib::Request& req, httplib::Response& res) {
             nlohmann::json body = Body(req);
             Session s = self->store.Create(Field(body, "goal_id"), Field(body, "annotator_id"));
             Reply(res, 201, s.ToJson());
           }));
  srv.Post(R"(/sessions/([^/]+)/message)",
           guarded([self](const httplib::Request& req, httplib::Response& res) {
             nlohmann::json body = Body(req);
             std::string reply = self->store.PostMessage(req.matches[1].str(), Field(body, "text"));
             Reply(res, 200, ordered_json{{"reply", reply}});
           }));
  srv.Post(R"(/sessions/([^/]+)/complete)",
           guarded([self](const httplib::Request& req, httplib::Response& res) {
             nlohmann::json body = Body(req);
             const std::string outcome = Field(body, "outcome");
             auto state = SessionStateFromName(outcome);
             if (!state || *state == SessionState::kOpen) {
               throw ServiceError(ServiceErrorKind::kInvalidRequest,
                                  "outcome must be Completed or Abandoned, got '" +
                                      outcome + "'");
             }
             StoredRef ref = self->store.Complete(req.matches[1].str(), *state);
             Reply(res, 200,
                   ordered_json{{"state", outcome},
                                {"transcript", {{"file", ref.file}, {"line", ref.line}}}});
           }));
  srv.Get("/goals", guarded([self](const httplib::Request&, httplib::Response& res) {
            ordered_json goals = ordered_json::array();
            for (const auto& g : self->store.Goals()) {
              goals.push_back(
                  {{"goal_id", g.goal_id}, {"nl_goal", g.nl_goal}, {"intents", g.intents}});
            }
            Reply(res, 200, ordered_json{{"goals", std::move(goals)}});
          }));
  srv.Get(R"(/sessions/([^/]+))",
          guarded([self](const httplib::Request& req, httplib::Response& res) {
            Reply(res, 200, self->store.Get(req.matches[1].str()).ToJson());
          }));
}

ServiceServer::~ServiceServer() { Stop(); }

int ServiceServer::Bind() {
  Impl& s = *impl_;
  // No SO_REUSEPORT: a port already in use must make the bind fail.
  s.server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (s.options.port == 0) {
    s.port = s.server.bind_to_any_port(s.options.host);
  } else {
    s.port = s.server.bind_to_port(s.options.host, s.options.port) ? s.options.port : -1;
  }
  if (s.port <= 0) {
    throw std::runtime_error("cannot bind " + s.options.host + ":" +
                             std::to_string(s.options.port));
  }
  return s.port;
}

void ServiceServer::Serve() { impl_->server.listen_after_bind(); }

int ServiceServer::Start() {
  int port = Bind();
  impl_->thread = std::thread([this] { Serve(); });
  impl_->server.wait_until_ready();
  return port;
}

void ServiceServer::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace todsim
