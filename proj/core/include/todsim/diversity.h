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

// Lexical (MTLD) and syntactic (dependency distance) diversity metrics.

#ifndef TODSIM_DIVERSITY_H_
#define TODSIM_DIVERSITY_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "todsim/error.h"

namespace todsim {

enum class MetricErrorKind {
  kEmptyInput,
  kUndefined,
  kNoEdges,
  kMalformedConllu,
  kInvalidTree,
};
const char* MetricErrorKindName(MetricErrorKind kind);
using MetricError = KindError<MetricErrorKind, MetricErrorKindName>;

using TokenSequence = std::vector<std::string>;

// Lowercase, strip punctuation, split on whitespace. Delexicalized
// placeholders such as "[value_reference]" survive as single tokens.
TokenSequence Tokenize(std::string_view text);

inline constexpr double kMtldThreshold = 0.72;

struct MtldOptions {
  double threshold = kMtldThreshold;
  bool bidirectional = true;
};

// Mean factor length of a single pass: a factor closes whenever the running
// type-token ratio drops to `threshold`; the leftover run contributes
// (1 - ttr) / (1 - threshold). Returns nullopt when the factor count is 0.
std::optional<double> MtldPass(std::span<const std::string> tokens,
                               double threshold);

// Throws MetricError: kEmptyInput for no tokens, kUndefined when no pass
// yields a factor.
double Mtld(std::span<const std::string> tokens, const MtldOptions& options = {});

struct DependencyNode {
  int index = 0;  // 1-based position
  int head = 0;   // 0 = root
  std::string upos;
  std::string form;
};

// One sentence. Construction validates: indices 1..n contiguous, exactly one
// root, heads in [0, n] and never self-referencing.
class DependencyTree {
 public:
  explicit DependencyTree(std::vector<DependencyNode> nodes);
  const std::vector<DependencyNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<DependencyNode> nodes_;
};

// |index - head| for every non-root, non-PUNCT edge, pooled over trees.
std::vector<int> DependencyDistances(std::span<const DependencyTree> trees);

// Throw MetricError(kNoEdges) when no edge qualifies.
double MeanDependencyDistance(std::span<const DependencyTree> trees);
double StdDependencyDistance(std::span<const DependencyTree> trees);  // population

// CoNLL-U: ten tab-separated columns, "#" comments, blank-line separated
// sentences; multiword ranges ("3-4") and empty nodes ("5.1") are skipped.
std::vector<DependencyTree> ParseConllu(std::string_view text);

struct DiversityReport {
  std::optional<double> mtld;
  std::optional<double> mean_dep;
  std::optional<double> std_dep;
  std::size_t token_count = 0;
  std::size_t edge_count = 0;

  nlohmann::ordered_json ToJson() const;
};

// MTLD over the concatenated token stream of `utterances`; dependency
// metrics over `trees`. Undefined metrics are left empty.
DiversityReport ComputeDiversity(std::span<const std::string> utterances,
                                 std::span<const DependencyTree> trees,
                                 const MtldOptions& options = {});

}  // namespace todsim

#endif  // TODSIM_DIVERSITY_H_
