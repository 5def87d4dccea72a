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

// The todsim command line: simulate, gold, evaluate, metrics, serve.

#ifndef TODSIM_TOOLS_CLI_H_
#define TODSIM_TOOLS_CLI_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "todsim/engine.h"
#include "todsim/providers.h"

namespace todsim::cli {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Reads the process environment.
EnvLookup ProcessEnv();

// Scripted provider replies, keyed by dialogue (or gold context) index
// modulo the list length:
//   {"completion": [["hi", "bye <end_dialog>"], ...], "tod": [["hello"], ...]}
struct ProviderScript {
  std::vector<std::vector<std::string>> completion;
  std::vector<std::vector<std::string>> tod;

  static ProviderScript FromJson(const nlohmann::json& doc);
};

// Settings shared by the subcommands. Layers apply in order file, then
// environment, then command-line flags.
struct RunConfig {
  std::string completion_url;
  std::string completion_token;
  std::string tod_url;
  std::string tod_token;
  std::string parser_url;

  CompletionParams completion;
  SessionLimits limits;
  int generation_reserve = 64;

  std::string goals;
  std::string exemplars;
  std::string ontology;
  std::string script;
  std::string output;
  std::optional<std::uint64_t> seed;
  int parallelism = 1;
  bool fixed_timestamps = false;

  // Unknown keys are rejected with std::invalid_argument.
  static RunConfig FromJson(const nlohmann::json& doc);
  // COMPLETION_URL, COMPLETION_TOKEN, TOD_URL, PARSER_URL.
  void ApplyEnv(const EnvLookup& env);
};

// Entry point; returns the process exit status.
int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
         const EnvLookup& env = ProcessEnv());

}  // namespace todsim::cli

#endif  // TODSIM_TOOLS_CLI_H_
