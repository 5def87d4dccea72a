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

#include "todsim/diversity.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <unordered_set>

#include "text_util.h"

namespace todsim {

const char* MetricErrorKindName(MetricErrorKind kind) {
  switch (kind) {
    case MetricErrorKind::kEmptyInput:
      return "EmptyInput";
    case MetricErrorKind::kUndefined:
      return "Undefined";
    case MetricErrorKind::kNoEdges:
      return "NoEdges";
    case MetricErrorKind::kMalformedConllu:
      return "MalformedConllu";
    case MetricErrorKind::kInvalidTree:
      return "InvalidTree";
  }
  return "MetricError";
}

namespace {

bool IsPlaceholderChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// "[value_name]" possibly wrapped in punctuation, e.g. "([value_name]),".
std::optional<std::string> ExtractPlaceholder(const std::string& token) {
  std::size_t open = token.find('[');
  if (open == std::string::npos) return std::nullopt;
  std::size_t close = token.find(']', open);
  if (close == std::string::npos || close == open + 1) return std::nullopt;
  for (std::size_t i = open + 1; i < close; ++i) {
    if (!IsPlaceholderChar(token[i])) return std::nullopt;
  }
  auto only_punct = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) {
      return std::ispunct(static_cast<unsigned char>(c)) != 0;
    });
  };
  if (!only_punct(std::string_view(token).substr(0, open)) ||
      !only_punct(std::string_view(token).substr(close + 1))) {
    return std::nullopt;
  }
  return token.substr(open, close - open + 1);
}

}  // namespace

TokenSequence Tokenize(std::string_view text) {
  TokenSequence out;
  for (std::string& raw : internal::SplitWhitespace(internal::Lower(text))) {
    if (auto ph = ExtractPlaceholder(raw)) {
      out.push_back(std::move(*ph));
      continue;
    }
    std::string word;
    for (char c : raw) {
      if (!std::ispunct(static_cast<unsigned char>(c))) word += c;
    }
    if (!word.empty()) out.push_back(std::move(word));
  }
  return out;
}

std::optional<double> MtldPass(std::span<const std::string> tokens,
                               double threshold) {
  double factors = 0.0;
  std::unordered_set<std::string_view> types;
  std::size_t count = 0;
  double ttr = 1.0;
  for (const std::string& tok : tokens) {
    types.insert(tok);
    ++count;
    ttr = static_cast<double>(types.size()) / static_cast<double>(count);
    if (ttr <= threshold) {
      factors += 1.0;
      types.clear();
      count = 0;
      ttr = 1.0;
    }
  }
  if (count > 0) factors += (1.0 - ttr) / (1.0 - threshold);
  if (factors <= 0.0) return std::nullopt;
  return static_cast<double>(tokens.size()) / factors;
}

double Mtld(std::span<const std::string> tokens, const MtldOptions& options) {
  if (tokens.empty()) {
    throw MetricError(MetricErrorKind::kEmptyInput, "MTLD of an empty sequence");
  }
  std::optional<double> forward = MtldPass(tokens, options.threshold);
  if (!options.bidirectional) {
    if (!forward) {
      throw MetricError(MetricErrorKind::kUndefined,
                        "no MTLD factor in the forward pass");
    }
    return *forward;
  }
  std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
  std::optional<double> backward = MtldPass(reversed, options.threshold);
  if (forward && backward) return (*forward + *backward) / 2.0;
  if (forward) return *forward;
  if (backward) return *backward;
  throw MetricError(MetricErrorKind::kUndefined,
                    "no MTLD factor in either direction");
}

DependencyTree::DependencyTree(std::vector<DependencyNode> nodes)
    : nodes_(std::move(nodes)) {
  if (nodes_.empty()) {
    throw MetricError(MetricErrorKind::kInvalidTree, "empty tree");
  }
  const int n = static_cast<int>(nodes_.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const DependencyNode& node = nodes_[static_cast<std::size_t>(i)];
    if (node.index != i + 1) {
      throw MetricError(MetricErrorKind::kInvalidTree,
                        "token indices must run 1.." + std::to_string(n));
    }
    if (node.head < 0 || node.head > n || node.head == node.index) {
      throw MetricError(MetricErrorKind::kInvalidTree,
                        "token " + std::to_string(node.index) +
                            " has invalid head " + std::to_string(node.head));
    }
    roots += node.head == 0;
  }
  if (roots != 1) {
    throw MetricError(MetricErrorKind::kInvalidTree,
                      "expected exactly one root, found " + std::to_string(roots));
  }
}

std::vector<int> DependencyDistances(std::span<const DependencyTree> trees) {
  std::vector<int> out;
  for (const DependencyTree& tree : trees) {
    for (const DependencyNode& node : tree.nodes()) {
      if (node.head == 0 || node.upos == "PUNCT") continue;
      out.push_back(std::abs(node.index - node.head));
    }
  }
  return out;
}

double MeanDependencyDistance(std::span<const DependencyTree> trees) {
  std::vector<int> d = DependencyDistances(trees);
  if (d.empty()) {
    throw MetricError(MetricErrorKind::kNoEdges, "no countable dependency edges");
  }
  double sum = 0.0;
  for (int x : d) sum += x;
  return sum / static_cast<double>(d.size());
}

double StdDependencyDistance(std::span<const DependencyTree> trees) {
  std::vector<int> d = DependencyDistances(trees);
  if (d.empty()) {
    throw MetricError(MetricErrorKind::kNoEdges, "no countable dependency edges");
  }
  double mean = 0.0;
  for (int x : d) mean += x;
  mean /= static_cast<double>(d.size());
  double ss = 0.0;
  for (int x : d) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(d.size()));
}

namespace {

bool ParseInt(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<DependencyTree> ParseConllu(std::string_view text) {
  std::vector<DependencyTree> trees;
  std::vector<DependencyNode> current;
  int line_no = 0;
  auto flush = [&] {
    if (current.empty()) return;
    try {
      trees.emplace_back(std::move(current));
    } catch (const MetricError& e) {
      throw MetricError(MetricErrorKind::kMalformedConllu,
                        "sentence ending at line " + std::to_string(line_no) +
                            ": " + e.detail());
    }
    current.clear();
  };
  for (const std::string& line : internal::SplitLines(text)) {
    ++line_no;
    if (internal::Trim(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string_view> cols;
    std::string_view rest = line;
    while (true) {
      std::size_t tab = rest.find('\t');
      cols.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (cols.size() != 10) {
      throw MetricError(MetricErrorKind::kMalformedConllu,
                        "line " + std::to_string(line_no) + ": expected 10 columns, got " +
                            std::to_string(cols.size()));
    }
    std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos ||
        id.find('.') != std::string_view::npos) {
      continue;
    }
    DependencyNode node;
    if (!ParseInt(id, node.index)) {
      throw MetricError(MetricErrorKind::kMalformedConllu,
                        "line " + std::to_string(line_no) + ": non-numeric ID '" +
                            std::string(id) + "'");
    }
    if (!ParseInt(cols[6], node.head)) {
      throw MetricError(MetricErrorKind::kMalformedConllu,
                        "line " + std::to_string(line_no) + ": non-numeric HEAD '" +
                            std::string(cols[6]) + "'");
    }
    node.form = std::string(cols[1]);
    node.upos = std::string(cols[3]);
    current.push_back(std::move(node));
  }
  flush();
  return trees;
}

nlohmann::ordered_json DiversityReport::ToJson() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json doc;
  doc["mtld"] = opt(mtld);
  doc["mean_dep"] = opt(mean_dep);
  doc["std_dep"] = opt(std_dep);
  doc["token_count"] = token_count;
  doc["edge_count"] = edge_count;
  return doc;
}

DiversityReport ComputeDiversity(std::span<const std::string> utterances,
                                 std::span<const DependencyTree> trees,
                                 const MtldOptions& options) {
  DiversityReport report;
  TokenSequence all;
  for (const std::string& u : utterances) {
    TokenSequence t = Tokenize(u);
    all.insert(all.end(), std::make_move_iterator(t.begin()),
               std::make_move_iterator(t.end()));
  }
  report.token_count = all.size();
  if (!all.empty()) {
    try {
      report.mtld = Mtld(all, options);
    } catch (const MetricError&) {
      // Undefined for very short all-unique text; reported as null.
    }
  }
  report.edge_count = DependencyDistances(trees).size();
  if (report.edge_count > 0) {
    report.mean_dep = MeanDependencyDistance(trees);
    report.std_dep = StdDependencyDistance(trees);
  }
  return report;
}

}  // namespace todsim
