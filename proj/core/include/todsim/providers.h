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

// Contracts for the two external endpoints a simulation talks to: the
// text-completion model that plays the user, and the TOD system under test.
// Scripted implementations replay fixed utterances for deterministic runs;
// HTTP implementations speak the JSON wire formats below.
//
//   completion:  POST {prompt, temperature, max_tokens, stop[], seed?}
//                  -> {text}      (also accepts {choices:[{text}]})
//   tod:         POST {history:[{speaker,text}], user_utterance}
//                  -> {system_utterance}

#ifndef TODSIM_PROVIDERS_H_
#define TODSIM_PROVIDERS_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "todsim/dialogue.h"
#include "todsim/error.h"

namespace todsim {

enum class ProviderErrorKind { kTimeout, kContextOverflow, kRemote, kMalformed };
const char* ProviderErrorKindName(ProviderErrorKind kind);
using ProviderError = KindError<ProviderErrorKind, ProviderErrorKindName>;

inline constexpr double kDefaultTokensPerWord = 1.3;

// ceil(whitespace words * tokens_per_word). A tokenizer-free stand-in used
// to keep prompts inside the model's context window.
int EstimateTokens(std::string_view text,
                   double tokens_per_word = kDefaultTokensPerWord);

struct CompletionParams {
  double temperature = 0.5;
  int max_context = 2048;
  std::vector<std::string> stop_sequences = {"\nSystem:",
                                             std::string(kDefaultEndToken)};
  std::optional<std::uint64_t> seed;
  // Stop sequences that are kept in the output (the end token must survive
  // so the engine can see it).
  std::vector<std::string> inclusive_stops = {std::string(kDefaultEndToken)};
  double tokens_per_word = kDefaultTokensPerWord;

  // Throws std::invalid_argument unless temperature in [0,2] and
  // max_context > 0.
  void Validate() const;
  RunParams ToRunParams() const { return {temperature, max_context, seed}; }
};

// Cuts `text` at the earliest stop sequence. Inclusive stops are kept in the
// output, others are dropped. Result is whitespace-trimmed.
std::string ApplyStopSequences(std::string_view text,
                               const CompletionParams& params);

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  // Continuation of `prompt`, never including the prompt. Throws
  // ProviderError; kContextOverflow when the prompt does not fit.
  virtual std::string Complete(std::string_view prompt,
                               const CompletionParams& params) = 0;
};

class TodProvider {
 public:
  virtual ~TodProvider() = default;
  // One system utterance. Delexicalized "[value_*]" placeholders are returned
  // untouched. Throws ProviderError.
  virtual std::string Respond(std::span<const Turn> history,
                              std::string_view user_utterance) = 0;
};

// Throws kContextOverflow if the prompt estimate reaches max_context.
void CheckContextFits(std::string_view prompt, const CompletionParams& params);

// Replays `script` in order; throws kRemote once exhausted. Safe to share
// across threads (the cursor is mutex-guarded).
class ScriptedCompletion : public CompletionProvider {
 public:
  explicit ScriptedCompletion(std::vector<std::string> script)
      : script_(std::move(script)) {}

  std::string Complete(std::string_view prompt,
                       const CompletionParams& params) override;

  std::size_t calls() const;
  // Prompts seen so far, in call order.
  std::vector<std::string> prompts() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> script_;
  std::size_t cursor_ = 0;
  std::vector<std::string> prompts_;
};

class ScriptedTod : public TodProvider {
 public:
  explicit ScriptedTod(std::vector<std::string> script)
      : script_(std::move(script)) {}

  std::string Respond(std::span<const Turn> history,
                      std::string_view user_utterance) override;

  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> script_;
  std::size_t cursor_ = 0;
};

// Always throws the configured error. Useful for failure-path tests and for
// CLI runs with no endpoint configured.
class FailingCompletion : public CompletionProvider {
 public:
  FailingCompletion(ProviderErrorKind kind, std::string detail)
      : kind_(kind), detail_(std::move(detail)) {}
  std::string Complete(std::string_view, const CompletionParams&) override {
    throw ProviderError(kind_, detail_);
  }

 private:
  ProviderErrorKind kind_;
  std::string detail_;
};

class FailingTod : public TodProvider {
 public:
  FailingTod(ProviderErrorKind kind, std::string detail)
      : kind_(kind), detail_(std::move(detail)) {}
  std::string Respond(std::span<const Turn>, std::string_view) override {
    throw ProviderError(kind_, detail_);
  }

 private:
  ProviderErrorKind kind_;
  std::string detail_;
};

// Up to `max_retries` extra attempts after Timeout/Remote failures, sleeping
// base_delay * multiplier^attempt between them.
struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds base_delay{200};
  double multiplier = 2.0;

  std::chrono::milliseconds DelayFor(int retry) const;
  static bool Retryable(ProviderErrorKind kind) {
    return kind == ProviderErrorKind::kTimeout ||
           kind == ProviderErrorKind::kRemote;
  }
};

// Runs `call`, retrying per `policy`. `sleep` is injectable for tests.
std::string WithRetries(
    const RetryPolicy& policy, const std::function<std::string()>& call,
    const std::function<void(std::chrono::milliseconds)>& sleep = {});

struct Endpoint {
  std::string url;  // http://host[:port]/path
  std::string token;  // sent as "Authorization: Bearer <token>" when set
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
};

// Splits "http://host:port/path" into "http://host:port" and "/path".
// Throws std::invalid_argument for unsupported schemes.
std::pair<std::string, std::string> SplitUrl(std::string_view url);

class HttpCompletion : public CompletionProvider {
 public:
  explicit HttpCompletion(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string Complete(std::string_view prompt,
                       const CompletionParams& params) override;

 private:
  Endpoint endpoint_;
};

class HttpTod : public TodProvider {
 public:
  explicit HttpTod(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string Respond(std::span<const Turn> history,
                      std::string_view user_utterance) override;

 private:
  Endpoint endpoint_;
};

// One POST of a JSON body, mapping transport and status failures onto
// ProviderError kinds (no retries). Returns the response body.
std::string PostJson(const Endpoint& endpoint, const std::string& body);

}  // namespace todsim

#endif  // TODSIM_PROVIDERS_H_
