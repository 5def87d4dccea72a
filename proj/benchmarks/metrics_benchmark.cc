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

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "support/scenarios.h"
#include "todsim/diversity.h"
#include "todsim/prompt.h"
#include "todsim/success.h"

namespace todsim {
namespace {

std::vector<std::string> RandomTokens(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(rng() % vocab));
  return out;
}

void BM_Mtld(benchmark::State& state) {
  auto toks = RandomTokens(static_cast<std::size_t>(state.range(0)), 500, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Mtld(toks));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Mtld)->Range(1 << 10, 1 << 16);

void BM_CorpusBleu(benchmark::State& state) {
  std::vector<std::string> hyps, refs;
  for (int i = 0; i < state.range(0); ++i) {
    auto h = RandomTokens(12, 60, 2 * i), r = RandomTokens(12, 60, 2 * i + 1);
    std::string hs, rs;
    for (std::size_t k = 0; k < h.size(); ++k) {
      hs += h[k] + " ";
      rs += r[k] + " ";
    }
    hyps.push_back(hs);
    refs.push_back(rs);
  }
  for (auto _ : state) benchmark::DoNotOptimize(CorpusBleu(hyps, refs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CorpusBleu)->Range(64, 8192);

void BM_BuildPrompt(benchmark::State& state) {
  std::vector<Exemplar> pool = testing::SmokeExemplars();
  std::vector<Exemplar> ex = {pool[0], pool[1]};
  testing::Scenario s = testing::MakeScenario(2);
  std::vector<Turn> history;
  for (int i = 0; i < state.range(0); ++i) {
    history.push_back(MakeUserTurn("i need a cheap place to stay in the north", 2 * i));
    history.push_back(MakeSystemTurn("[value_name] is a cheap guesthouse .", 2 * i + 1));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildPrompt(ex, s.goal, history, 2048 - 64));
  }
}
BENCHMARK(BM_BuildPrompt)->DenseRange(2, 20, 6);

void BM_EvaluateSuccess(benchmark::State& state) {
  testing::Scenario s = testing::MakeScenario(2);
  std::vector<Turn> turns = testing::Interleave(s.user, s.system);
  Ontology o = Ontology::DefaultMultiwoz();
  for (auto _ : state) benchmark::DoNotOptimize(EvaluateSuccess(turns, s.goal, o));
}
BENCHMARK(BM_EvaluateSuccess);

}  // namespace
}  // namespace todsim

BENCHMARK_MAIN();
