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

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "todsim/corpus.h"
#include "todsim/diversity.h"
#include "todsim/service.h"
#include "todsim/success.h"

namespace todsim::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

EnvLookup ProcessEnv() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
}

ProviderScript ProviderScript::FromJson(const nlohmann::json& doc) {
  ProviderScript s;
  if (doc.contains("completion")) {
    s.completion = doc.at("completion").get<std::vector<std::vector<std::string>>>();
  }
  if (doc.contains("tod")) {
    s.tod = doc.at("tod").get<std::vector<std::vector<std::string>>>();
  }
  return s;
}

RunConfig RunConfig::FromJson(const nlohmann::json& doc) {
  RunConfig c;
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, v] : doc.items()) {
    if (key == "completion_url") c.completion_url = v.get<std::string>();
    else if (key == "completion_token") c.completion_token = v.get<std::string>();
    else if (key == "tod_url") c.tod_url = v.get<std::string>();
    else if (key == "tod_token") c.tod_token = v.get<std::string>();
    else if (key == "parser_url") c.parser_url = v.get<std::string>();
    else if (key == "temperature") c.completion.temperature = v.get<double>();
    else if (key == "max_context") c.completion.max_context = v.get<int>();
    else if (key == "max_turn_pairs") c.limits.max_turn_pairs = v.get<int>();
    else if (key == "loop_window") c.limits.loop_window = v.get<int>();
    else if (key == "loop_repeats") c.limits.loop_repeats = v.get<int>();
    else if (key == "generation_reserve") c.generation_reserve = v.get<int>();
    else if (key == "goals") c.goals = v.get<std::string>();
    else if (key == "exemplars") c.exemplars = v.get<std::string>();
    else if (key == "ontology") c.ontology = v.get<std::string>();
    else if (key == "script") c.script = v.get<std::string>();
    else if (key == "output") c.output = v.get<std::string>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "parallelism") c.parallelism = v.get<int>();
    else if (key == "fixed_timestamps") c.fixed_timestamps = v.get<bool>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  return c;
}

void RunConfig::ApplyEnv(const EnvLookup& env) {
  if (auto v = env("COMPLETION_URL")) completion_url = *v;
  if (auto v = env("COMPLETION_TOKEN")) completion_token = *v;
  if (auto v = env("TOD_URL")) tod_url = *v;
  if (auto v = env("PARSER_URL")) parser_url = *v;
}

namespace {

// Raised for invalid configuration or unreadable inputs; exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Command-line values; unset members leave lower layers untouched.
struct Overrides {
  std::string config;
  std::optional<std::string> completion_url, tod_url, parser_url;
  std::optional<double> temperature;
  std::optional<int> max_context, max_turn_pairs, parallelism;
  std::optional<std::string> goals, exemplars, ontology, script, output;
  std::optional<std::uint64_t> seed;
  bool fixed_timestamps = false;
};

RunConfig Resolve(const Overrides& o, const EnvLookup& env) {
  RunConfig c;
  if (!o.config.empty()) {
    if (!fs::exists(o.config)) throw ConfigError("config file not found: " + o.config);
    try {
      c = RunConfig::FromJson(nlohmann::json::parse(ReadFile(o.config)));
    } catch (const std::exception& e) {
      throw ConfigError("config " + o.config + ": " + e.what());
    }
  }
  c.ApplyEnv(env);
  if (o.completion_url) c.completion_url = *o.completion_url;
  if (o.tod_url) c.tod_url = *o.tod_url;
  if (o.parser_url) c.parser_url = *o.parser_url;
  if (o.temperature) c.completion.temperature = *o.temperature;
  if (o.max_context) c.completion.max_context = *o.max_context;
  if (o.max_turn_pairs) c.limits.max_turn_pairs = *o.max_turn_pairs;
  if (o.parallelism) c.parallelism = *o.parallelism;
  if (o.goals) c.goals = *o.goals;
  if (o.exemplars) c.exemplars = *o.exemplars;
  if (o.ontology) c.ontology = *o.ontology;
  if (o.script) c.script = *o.script;
  if (o.output) c.output = *o.output;
  if (o.seed) c.seed = *o.seed;
  if (o.fixed_timestamps) c.fixed_timestamps = true;
  try {
    c.completion.Validate();
    c.limits.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  return c;
}

void RequirePath(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what + " path");
  if (!fs::exists(path)) {
    throw ConfigError(std::string(what) + " file not found: " + path);
  }
}

// A fresh "<prefix>-<UTC stamp>[-n]" directory under runs/ unless the
// caller chose one.
fs::path OutputDir(const RunConfig& c, const char* prefix) {
  if (!c.output.empty()) return c.output;
  std::string stamp = UtcNow();
  std::erase(stamp, ':');
  std::erase(stamp, '-');
  fs::path base = fs::path("runs") / (std::string(prefix) + "-" + stamp);
  fs::path dir = base;
  for (int n = 2; fs::exists(dir); ++n) dir = base.string() + "-" + std::to_string(n);
  return dir;
}

std::optional<ProviderScript> LoadScript(const RunConfig& c) {
  if (c.script.empty()) return std::nullopt;
  RequirePath(c.script, "script");
  try {
    return ProviderScript::FromJson(nlohmann::json::parse(ReadFile(c.script)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("script " + c.script + ": " + e.what());
  }
}

const std::vector<std::string>& Pick(const std::vector<std::vector<std::string>>& lists,
                                     std::size_t index) {
  static const std::vector<std::string> kEmpty;
  return lists.empty() ? kEmpty : lists[index % lists.size()];
}

Endpoint MakeEndpoint(const std::string& url, const std::string& token) {
  Endpoint e;
  e.url = url;
  e.token = token;
  return e;
}

std::function<std::unique_ptr<CompletionProvider>(std::size_t)> CompletionFactory(
    const RunConfig& c, const std::optional<ProviderScript>& script) {
  if (script) {
    return [s = *script](std::size_t i) -> std::unique_ptr<CompletionProvider> {
      return std::make_unique<ScriptedCompletion>(Pick(s.completion, i));
    };
  }
  if (!c.completion_url.empty()) {
    Endpoint e = MakeEndpoint(c.completion_url, c.completion_token);
    return [e](std::size_t) -> std::unique_ptr<CompletionProvider> {
      return std::make_unique<HttpCompletion>(e);
    };
  }
  throw ConfigError("no completion provider: pass --script or set COMPLETION_URL");
}

std::function<std::unique_ptr<TodProvider>(std::size_t)> TodFactory(
    const RunConfig& c, const std::optional<ProviderScript>& script) {
  if (script) {
    return [s = *script](std::size_t i) -> std::unique_ptr<TodProvider> {
      return std::make_unique<ScriptedTod>(Pick(s.tod, i));
    };
  }
  if (!c.tod_url.empty()) {
    Endpoint e = MakeEndpoint(c.tod_url, c.tod_token);
    return [e](std::size_t) -> std::unique_ptr<TodProvider> {
      return std::make_unique<HttpTod>(e);
    };
  }
  throw ConfigError("no TOD provider: pass --script or set TOD_URL");
}

EngineConfig MakeEngine(const RunConfig& c, Ontology ontology) {
  EngineConfig e;
  e.completion = c.completion;
  e.completion.seed = c.seed;
  e.limits = c.limits;
  e.generation_reserve = c.generation_reserve;
  e.ontology = std::move(ontology);
  e.clock = c.fixed_timestamps ? Clock(EpochClock) : Clock(UtcNow);
  return e;
}

Ontology LoadOntologyOrDefault(const std::string& path) {
  if (path.empty()) return Ontology::DefaultMultiwoz();
  RequirePath(path, "ontology");
  return LoadOntology(path);
}

void WarnRejects(const GoalSet& set, const std::string& path, std::ostream& err) {
  for (const Reject& r : set.rejects) {
    err << "warning: " << path << " record " << r.record
        << (r.key.empty() ? "" : " (" + r.key + ")") << " rejected: " << r.reason << "\n";
  }
}

// ---------------------------------------------------------------- simulate

int Simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  RequirePath(c.goals, "goal");
  RequirePath(c.exemplars, "exemplar");
  if (!c.seed) throw ConfigError("simulate requires --seed");
  GoalSet goals = LoadGoals(c.goals);
  WarnRejects(goals, c.goals, err);
  ExemplarPool pool = LoadExemplarPool(c.exemplars);
  if (pool.exemplars.empty() && !goals.goals.empty()) {
    throw ConfigError("exemplar pool is empty: " + c.exemplars);
  }
  std::optional<ProviderScript> script = LoadScript(c);

  BatchConfig batch;
  batch.engine = MakeEngine(c, LoadOntologyOrDefault(c.ontology));
  batch.parallelism = c.parallelism;
  batch.goal_file = c.goals;
  batch.output_dir = OutputDir(c, "simulate");
  ProviderFactory providers{CompletionFactory(c, script), TodFactory(c, script)};

  BatchResult result = RunBatch(goals.goals, pool.exemplars, *c.seed, batch, providers);
  out << "run " << result.manifest.run_id << ": " << result.transcripts.size()
      << " dialogues\n";
  for (const auto& [kind, n] : result.manifest.termination_counts) {
    out << "  " << kind << ": " << n << "\n";
  }
  out << "manifest: " << (batch.output_dir / "manifest.json").string() << "\n";
  return 0;
}

// -------------------------------------------------------------------- gold

int Gold(const RunConfig& c, const std::string& dialogues_path, std::ostream& out,
         std::ostream& err) {
  RequirePath(dialogues_path, "gold dialogue");
  std::vector<DialogueRecord> dialogues = LoadDialogues(dialogues_path);
  const std::string pool_path = c.exemplars.empty() ? dialogues_path : c.exemplars;
  RequirePath(pool_path, "exemplar");
  ExemplarPool pool = LoadExemplarPool(pool_path);
  std::optional<ProviderScript> script = LoadScript(c);
  auto completion_for = CompletionFactory(c, script);
  EngineConfig engine = MakeEngine(c, Ontology::DefaultMultiwoz());
  const std::uint64_t seed = c.seed.value_or(0);

  fs::path dir = OutputDir(c, "gold");
  std::string lines;
  std::vector<std::string> cands;
  std::vector<std::string> refs;
  std::size_t contexts = 0;
  std::size_t failures = 0;
  for (const DialogueRecord& d : dialogues) {
    std::vector<Exemplar> candidates;
    for (const Exemplar& ex : pool.exemplars) {
      if (ex.id != d.id) candidates.push_back(ex);
    }
    for (std::size_t j = 0; j < d.turns.size(); j += 2) {
      const std::size_t ctx = contexts++;
      ordered_json rec;
      rec["dialogue_id"] = d.id;
      rec["turn_index"] = j;
      rec["reference"] = d.turns[j].text;
      try {
        if (candidates.empty()) throw ConfigError("no exemplars available");
        std::vector<Exemplar> ex = SelectExemplars(
            candidates, std::min<std::size_t>(2, candidates.size()), DialogueSeed(seed, ctx));
        std::unique_ptr<CompletionProvider> completion = completion_for(ctx);
        Turn t = RunGoldTurn(std::span<const Turn>(d.turns).first(j), d.goal, ex,
                             *completion, engine);
        rec["generated"] = t.text;
        rec["ends_dialogue"] = t.ends_dialogue;
        rec["error"] = nullptr;
        cands.push_back(t.text);
        refs.push_back(d.turns[j].text);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        ++failures;
        rec["generated"] = nullptr;
        rec["ends_dialogue"] = false;
        rec["error"] = e.kind_name() + ": " + e.detail();
      }
      lines += rec.dump() + "\n";
    }
  }
  WriteFileAtomic(dir / "gold.jsonl", lines);
  out << "gold contexts: " << contexts << ", generated: " << contexts - failures
      << ", errors: " << failures << "\n";
  if (!refs.empty()) {
    out << "BLEU: " << std::fixed << std::setprecision(2) << CorpusBleu(cands, refs) << "\n";
  }
  out << "output: " << (dir / "gold.jsonl").string() << "\n";
  if (failures > 0) {
    err << "warning: " << failures << " gold contexts failed; see error fields\n";
  }
  return 0;
}

// ---------------------------------------------------------------- evaluate

std::vector<std::string> UserUtterances(const Transcript& t) {
  std::vector<std::string> out;
  for (const Turn& turn : t.turns) {
    if (turn.speaker == Speaker::kUser && !turn.text.empty()) out.push_back(turn.text);
  }
  return out;
}

void EmitJson(const ordered_json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    WriteFileAtomic(path, doc.dump(2) + "\n");
    out << "json: " << path << "\n";
  }
}

struct EvaluateArgs {
  std::string transcripts;
  std::string conllu;
  std::string gold;
  std::string json;
};

int Evaluate(const RunConfig& c, const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  RequirePath(a.transcripts, "transcript");
  std::vector<Transcript> transcripts = LoadTranscripts(a.transcripts);
  if (!c.goals.empty()) {
    RequirePath(c.goals, "goal");
    GoalSet goals = LoadGoals(c.goals);
    WarnRejects(goals, c.goals, err);
    if (goals.goals.size() != transcripts.size()) {
      err << "error: transcript/goal count mismatch (" << transcripts.size() << " transcripts, "
          << goals.goals.size() << " goals)\n";
      return 1;
    }
    for (std::size_t i = 0; i < transcripts.size(); ++i) {
      if (SerializeGoal(goals.goals[i]) != SerializeGoal(transcripts[i].goal)) {
        err << "error: transcript " << i + 1 << " does not match goal " << i + 1 << "\n";
        return 1;
      }
    }
  }
  Ontology ontology = LoadOntologyOrDefault(c.ontology);

  std::vector<DialogueEvaluation> evals;
  std::size_t utterance_total = 0;
  for (const Transcript& t : transcripts) {
    DialogueEvaluation e;
    e.intents = CountIntents(t.goal);
    e.result = EvaluateSuccess(t.turns, t.goal, ontology);
    e.num_turns = t.user_turn_count();
    e.user_utterances = UserUtterances(t);
    utterance_total += e.user_utterances.size();
    evals.push_back(std::move(e));
  }

  if (!a.conllu.empty()) {
    RequirePath(a.conllu, "CoNLL-U");
    std::vector<DependencyTree> trees = ParseConllu(ReadFile(a.conllu));
    if (trees.size() != utterance_total) {
      err << "error: " << a.conllu << " has " << trees.size() << " sentences for "
          << utterance_total << " user utterances\n";
      return 1;
    }
    std::size_t next = 0;
    for (DialogueEvaluation& e : evals) {
      for (std::size_t k = 0; k < e.user_utterances.size(); ++k) {
        e.trees.push_back(trees[next++]);
      }
    }
  }

  if (!a.gold.empty()) {
    RequirePath(a.gold, "gold output");
    std::map<std::string, DialogueEvaluation*> by_id;
    for (std::size_t i = 0; i < transcripts.size(); ++i) {
      if (auto id = transcripts[i].goal.source_id()) by_id[*id] = &evals[i];
    }
    std::size_t unmatched = 0;
    for (const std::string& line : [&] {
           std::vector<std::string> ls;
           std::istringstream in(ReadFile(a.gold));
           for (std::string l; std::getline(in, l);) {
             if (!l.empty()) ls.push_back(l);
           }
           return ls;
         }()) {
      nlohmann::json rec = nlohmann::json::parse(line);
      if (!rec.at("error").is_null()) continue;
      auto it = by_id.find(rec.at("dialogue_id").get<std::string>());
      if (it == by_id.end()) {
        ++unmatched;
        continue;
      }
      it->second->bleu_candidates.push_back(rec.at("generated").get<std::string>());
      it->second->bleu_references.push_back(rec.at("reference").get<std::string>());
    }
    if (unmatched > 0) {
      err << "warning: " << unmatched << " gold records match no transcript\n";
    }
  }

  EvaluationReport report = AggregateByIntent(evals);
  out << report.ToTable();
  EmitJson(report.ToJson(), a.json, out);
  return 0;
}

// ----------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string transcripts;
  std::string text;
  std::string conllu;
  std::string cache_dir = ".todsim-cache/parses";
  std::string write_conllu;
  std::string json;
};

int Metrics(const RunConfig& c, const MetricsArgs& a, std::ostream& out, std::ostream&) {
  std::vector<std::string> utterances;
  if (!a.transcripts.empty()) {
    RequirePath(a.transcripts, "transcript");
    for (const Transcript& t : LoadTranscripts(a.transcripts)) {
      for (std::string& u : UserUtterances(t)) utterances.push_back(std::move(u));
    }
  } else if (!a.text.empty()) {
    RequirePath(a.text, "text");
    std::istringstream in(ReadFile(a.text));
    for (std::string l; std::getline(in, l);) {
      if (!l.empty()) utterances.push_back(l);
    }
  } else {
    throw ConfigError("metrics needs --transcripts or --text");
  }

  std::vector<DependencyTree> trees;
  if (!a.conllu.empty()) {
    RequirePath(a.conllu, "CoNLL-U");
    trees = ParseConllu(ReadFile(a.conllu));
  } else if (!c.parser_url.empty()) {
    ParseCache cache(a.cache_dir);
    std::string conllu = FetchParses(utterances, MakeEndpoint(c.parser_url, ""), cache);
    if (!a.write_conllu.empty()) WriteFileAtomic(a.write_conllu, conllu);
    trees = ParseConllu(conllu);
  }

  DiversityReport r = ComputeDiversity(utterances, trees);
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << *v;
    return os.str();
  };
  out << "Utterances   " << utterances.size() << "\n"
      << "Tokens       " << r.token_count << "\n"
      << "MTLD         " << fmt(r.mtld) << "\n"
      << "Avg Dep Len  " << fmt(r.mean_dep) << "\n"
      << "Std Dep Len  " << fmt(r.std_dep) << "\n"
      << "Edges        " << r.edge_count << "\n";
  ordered_json doc = r.ToJson();
  doc["utterances"] = utterances.size();
  EmitJson(doc, a.json, out);
  return 0;
}

// ------------------------------------------------------------------- serve

std::atomic<bool> g_stop_requested{false};

extern "C" void OnStopSignal(int) { g_stop_requested.store(true); }

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
};

int Serve(const RunConfig& c, const ServeArgs& a, std::ostream& out, std::ostream& err) {
  RequirePath(c.goals, "goal");
  GoalSet goals = LoadGoals(c.goals);
  WarnRejects(goals, c.goals, err);
  std::optional<ProviderScript> script = LoadScript(c);
  std::shared_ptr<TodProvider> tod;
  if (script) {
    // One shared script; replies are handed out in arrival order.
    std::vector<std::string> replies;
    for (const auto& list : script->tod) replies.insert(replies.end(), list.begin(), list.end());
    tod = std::make_shared<ScriptedTod>(std::move(replies));
  } else if (!c.tod_url.empty()) {
    tod = std::make_shared<HttpTod>(MakeEndpoint(c.tod_url, c.tod_token));
  } else {
    throw ConfigError("no TOD provider: pass --script or set TOD_URL");
  }

  SessionStoreOptions options;
  options.seed = c.seed.value_or(0);
  options.transcript_path = OutputDir(c, "serve") / "human2bot.jsonl";
  options.clock = c.fixed_timestamps ? Clock(EpochClock) : Clock(UtcNow);
  SessionStore store(goals.goals, tod, options);
  ServiceServer server(store, {a.host, a.port, a.token});
  int port = 0;
  try {
    port = server.Bind();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  g_stop_requested.store(false);
  auto old_int = std::signal(SIGINT, OnStopSignal);
  auto old_term = std::signal(SIGTERM, OnStopSignal);
  out << "listening on http://" << a.host << ":" << port << "\n" << std::flush;

  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done.load() && !g_stop_requested.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.Stop();
  });
  server.Serve();
  done.store(true);
  watcher.join();
  std::signal(SIGINT, old_int);
  std::signal(SIGTERM, old_term);

  std::size_t drained = store.Drain();
  out << "stopped; abandoned " << drained << " open session(s); transcripts: "
      << options.transcript_path.string() << "\n";
  return 0;
}

void AddCommon(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON config file");
  sub->add_option("--completion-url", o.completion_url, "Completion endpoint URL");
  sub->add_option("--tod-url", o.tod_url, "TOD endpoint URL");
  sub->add_option("--script", o.script, "Scripted provider replies (JSON)");
  sub->add_option("--temperature", o.temperature, "Sampling temperature");
  sub->add_option("--max-context", o.max_context, "Context window in tokens");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--output", o.output, "Output directory");
  sub->add_flag("--fixed-timestamps", o.fixed_timestamps,
                "Stamp transcripts with the epoch for reproducible output");
}

}  // namespace

int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
         const EnvLookup& env) {
  CLI::App app{"todsim: LLM user-simulator harness for task-oriented dialogue"};
  app.name("todsim");
  app.require_subcommand(1);
  Overrides o;

  CLI::App* simulate = app.add_subcommand("simulate", "Run simulated dialogues over a goal file");
  AddCommon(simulate, o);
  simulate->add_option("--goals", o.goals, "Goal file");
  simulate->add_option("--exemplars", o.exemplars, "Exemplar dialogue file");
  simulate->add_option("--ontology", o.ontology, "Ontology JSON");
  simulate->add_option("--max-turn-pairs", o.max_turn_pairs, "Turn-pair limit per dialogue");
  simulate->add_option("--parallelism", o.parallelism, "Concurrent dialogues");

  std::string gold_dialogues;
  CLI::App* gold = app.add_subcommand("gold", "Generate one user turn per gold context");
  AddCommon(gold, o);
  gold->add_option("--dialogues", gold_dialogues, "Gold dialogue file")->required();
  gold->add_option("--exemplars", o.exemplars, "Exemplar dialogue file");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Inform/Success/BLEU report per intent count");
  evaluate->add_option("--config", o.config, "JSON config file");
  evaluate->add_option("--transcripts", eval_args.transcripts, "Transcript JSONL")->required();
  evaluate->add_option("--goals", o.goals, "Goal file aligned with the transcripts");
  evaluate->add_option("--ontology", o.ontology, "Ontology JSON");
  evaluate->add_option("--conllu", eval_args.conllu, "Parses of the user turns, in order");
  evaluate->add_option("--gold", eval_args.gold, "Gold-mode output for BLEU");
  evaluate->add_option("--json", eval_args.json, "Write the structured report here");

  MetricsArgs metric_args;
  CLI::App* metrics = app.add_subcommand("metrics", "Lexical and syntactic diversity");
  metrics->add_option("--config", o.config, "JSON config file");
  metrics->add_option("--transcripts", metric_args.transcripts, "Transcript JSONL");
  metrics->add_option("--text", metric_args.text, "One utterance per line");
  metrics->add_option("--conllu", metric_args.conllu, "Dependency parses (CoNLL-U)");
  metrics->add_option("--parser-url", o.parser_url, "Parsing service URL");
  metrics->add_option("--cache-dir", metric_args.cache_dir, "Parse cache directory");
  metrics->add_option("--write-conllu", metric_args.write_conllu, "Save fetched parses here");
  metrics->add_option("--json", metric_args.json, "Write the structured report here");

  ServeArgs serve_args;
  CLI::App* serve = app.add_subcommand("serve", "Human2Bot collection service");
  AddCommon(serve, o);
  serve->add_option("--goals", o.goals, "Goal file")->required();
  serve->add_option("--host", serve_args.host, "Bind address");
  serve->add_option("--port", serve_args.port, "Port (0 = any free port)");
  serve->add_option("--token", serve_args.token, "Shared bearer token");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig c = Resolve(o, env);
    if (simulate->parsed()) return Simulate(c, out, err);
    if (gold->parsed()) return Gold(c, gold_dialogues, out, err);
    if (evaluate->parsed()) return Evaluate(c, eval_args, out, err);
    if (metrics->parsed()) return Metrics(c, metric_args, out, err);
    if (serve->parsed()) return Serve(c, serve_args, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.kind_name() << ": " << e.detail() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace todsim::cli
