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

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "todsim/providers.h"

namespace todsim {

namespace {

ProviderErrorKind KindForTransport(httplib::Error err) {
  switch (err) {
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
    case httplib::Error::Write:
      return ProviderErrorKind::kTimeout;
    default:
      return ProviderErrorKind::kRemote;
  }
}

nlohmann::json ParseBody(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProviderError(ProviderErrorKind::kMalformed,
                        std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace

std::string PostJson(const Endpoint& endpoint, const std::string& body) {
  auto [base, path] = SplitUrl(endpoint.url);
  httplib::Client client(base);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!endpoint.token.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.token);
  }
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    throw ProviderError(KindForTransport(res.error()),
                        endpoint.url + ": " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status >= 200 && status < 300) return res->body;
  std::string detail = endpoint.url + ": HTTP " + std::to_string(status);
  if (!res->body.empty()) detail += " " + res->body.substr(0, 200);
  if (status == 413 ||
      (status == 400 && res->body.find("context") != std::string::npos)) {
    throw ProviderError(ProviderErrorKind::kContextOverflow, detail);
  }
  if (status == 408 || status == 504) {
    throw ProviderError(ProviderErrorKind::kTimeout, detail);
  }
  throw ProviderError(ProviderErrorKind::kRemote, detail);
}

std::string HttpCompletion::Complete(std::string_view prompt,
                                     const CompletionParams& params) {
  if (prompt.empty()) {
    throw ProviderError(ProviderErrorKind::kMalformed, "empty prompt");
  }
  CheckContextFits(prompt, params);
  nlohmann::json req;
  req["prompt"] = prompt;
  req["temperature"] = params.temperature;
  req["max_tokens"] =
      params.max_context - EstimateTokens(prompt, params.tokens_per_word);
  req["stop"] = params.stop_sequences;
  if (params.seed) req["seed"] = *params.seed;
  const std::string body = req.dump();

  std::string text = WithRetries(endpoint_.retry, [&] {
    nlohmann::json res = ParseBody(PostJson(endpoint_, body));
    if (res.contains("text") && res["text"].is_string()) {
      return res["text"].get<std::string>();
    }
    if (res.contains("choices") && res["choices"].is_array() &&
        !res["choices"].empty() && res["choices"][0].contains("text")) {
      return res["choices"][0]["text"].get<std::string>();
    }
    throw ProviderError(ProviderErrorKind::kMalformed,
                        "completion response has no text field");
  });
  return ApplyStopSequences(text, params);
}

std::string HttpTod::Respond(std::span<const Turn> history,
                             std::string_view user_utterance) {
  if (user_utterance.empty()) {
    throw ProviderError(ProviderErrorKind::kMalformed, "empty user utterance");
  }
  nlohmann::json req;
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : history) {
    turns.push_back({{"speaker", SpeakerName(t.speaker)}, {"text", t.text}});
  }
  req["history"] = std::move(turns);
  req["user_utterance"] = user_utterance;
  const std::string body = req.dump();
  return WithRetries(endpoint_.retry, [&] {
    nlohmann::json res = ParseBody(PostJson(endpoint_, body));
    if (!res.contains("system_utterance") ||
        !res["system_utterance"].is_string()) {
      throw ProviderError(ProviderErrorKind::kMalformed,
                          "tod response has no system_utterance field");
    }
    return res["system_utterance"].get<std::string>();
  });
}

}  // namespace todsim
