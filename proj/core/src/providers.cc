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

#include "todsim/providers.h"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "text_util.h"

namespace todsim {

const char* ProviderErrorKindName(ProviderErrorKind kind) {
  switch (kind) {
    case ProviderErrorKind::kTimeout:
      return "Timeout";
    case ProviderErrorKind::kContextOverflow:
      return "ContextOverflow";
    case ProviderErrorKind::kRemote:
      return "Remote";
    case ProviderErrorKind::kMalformed:
      return "Malformed";
  }
  return "ProviderError";
}

int EstimateTokens(std::string_view text, double tokens_per_word) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = internal::IsSpace(c);
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  // The epsilon keeps exact products such as 10 * 1.3 from rounding up.
  return static_cast<int>(
      std::ceil(static_cast<double>(words) * tokens_per_word - 1e-9));
}

void CompletionParams::Validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw std::invalid_argument("temperature must be in [0, 2]");
  }
  if (max_context <= 0) {
    throw std::invalid_argument("max_context must be positive");
  }
  if (!(tokens_per_word > 0.0)) {
    throw std::invalid_argument("tokens_per_word must be positive");
  }
}

std::string ApplyStopSequences(std::string_view text,
                               const CompletionParams& params) {
  std::size_t cut = text.size();
  for (const auto& stop : params.stop_sequences) {
    if (stop.empty()) continue;
    std::size_t hit = text.find(stop);
    if (hit == std::string_view::npos) continue;
    bool inclusive = false;
    for (const auto& keep : params.inclusive_stops) inclusive |= keep == stop;
    std::size_t end = inclusive ? hit + stop.size() : hit;
    cut = std::min(cut, end);
  }
  return std::string(internal::Trim(text.substr(0, cut)));
}

void CheckContextFits(std::string_view prompt, const CompletionParams& params) {
  int estimate = EstimateTokens(prompt, params.tokens_per_word);
  if (estimate >= params.max_context) {
    throw ProviderError(ProviderErrorKind::kContextOverflow,
                        "prompt estimate " + std::to_string(estimate) +
                            " tokens >= max_context " +
                            std::to_string(params.max_context));
  }
}

std::string ScriptedCompletion::Complete(std::string_view prompt,
                                         const CompletionParams& params) {
  if (prompt.empty()) {
    throw ProviderError(ProviderErrorKind::kMalformed, "empty prompt");
  }
  CheckContextFits(prompt, params);
  std::lock_guard<std::mutex> lock(mu_);
  prompts_.emplace_back(prompt);
  if (cursor_ >= script_.size()) {
    throw ProviderError(ProviderErrorKind::kRemote, "completion script exhausted");
  }
  return script_[cursor_++];
}

std::size_t ScriptedCompletion::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return prompts_.size();
}

std::vector<std::string> ScriptedCompletion::prompts() const {
  std::lock_guard<std::mutex> lock(mu_);
  return prompts_;
}

std::string ScriptedTod::Respond(std::span<const Turn> /*history*/,
                                 std::string_view user_utterance) {
  if (user_utterance.empty()) {
    throw ProviderError(ProviderErrorKind::kMalformed, "empty user utterance");
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (cursor_ >= script_.size()) {
    throw ProviderError(ProviderErrorKind::kRemote, "tod script exhausted");
  }
  return script_[cursor_++];
}

std::size_t ScriptedTod::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cursor_;
}

std::chrono::milliseconds RetryPolicy::DelayFor(int retry) const {
  double ms = static_cast<double>(base_delay.count()) *
              std::pow(multiplier, static_cast<double>(retry));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

std::string WithRetries(
    const RetryPolicy& policy, const std::function<std::string()>& call,
    const std::function<void(std::chrono::milliseconds)>& sleep) {
  for (int attempt = 0;; ++attempt) {
    try {
      return call();
    } catch (const ProviderError& e) {
      if (attempt >= policy.max_retries || !RetryPolicy::Retryable(e.kind())) {
        throw;
      }
      auto delay = policy.DelayFor(attempt);
      if (sleep) {
        sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

std::pair<std::string, std::string> SplitUrl(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (url.substr(0, kScheme.size()) != kScheme) {
    throw std::invalid_argument("only http:// endpoints are supported: " +
                                std::string(url));
  }
  std::size_t slash = url.find('/', kScheme.size());
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

}  // namespace todsim
