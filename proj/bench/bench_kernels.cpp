/*
 * Copyright 2026 The serp-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "serp_audit/kernels.hpp"
#include "serp_audit/rng.hpp"

using namespace serp_audit;
using namespace serp_audit::kernels;

namespace {

std::vector<std::int64_t> doubled_ranks(std::size_t n) {
  std::vector<std::int64_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<std::int64_t>(2 * (i + 1));
  return r;
}

struct ScoringInput {
  LabelMap labels;
  std::vector<std::vector<std::string>> serps;
  std::vector<SerpSlice> slices;
};

// Shaped like one audit run: 23,040 pages of 50 results over a shared pool.
const ScoringInput& scoring_input() {
  static const ScoringInput input = [] {
    ScoringInput in;
    Rng rng(derive_seed(99, "bench-scoring"));
    in.serps.resize(23'040);
    for (auto& serp : in.serps) {
      for (int r = 0; r < 50; ++r) {
        auto id = "v" + std::to_string(rng.below(40'000));
        in.labels.emplace(id, kAllLabels[rng.below(7)]);
        serp.push_back(std::move(id));
      }
    }
    in.slices.assign(in.serps.begin(), in.serps.end());
    return in;
  }();
  return input;
}

void BM_ExhaustiveSerial(benchmark::State& state) {
  const auto ranks = doubled_ranks(static_cast<std::size_t>(state.range(0)));
  const auto k = ranks.size() / 2;
  for (auto _ : state) benchmark::DoNotOptimize(exhaustive_rank_sum_serial(ranks, k, 20));
}

void BM_ExhaustiveParallel(benchmark::State& state) {
  const auto ranks = doubled_ranks(static_cast<std::size_t>(state.range(0)));
  const auto k = ranks.size() / 2;
  for (auto _ : state) benchmark::DoNotOptimize(exhaustive_rank_sum_parallel(ranks, k, 20));
}

void BM_MonteCarloSerial(benchmark::State& state) {
  const auto ranks = doubled_ranks(60);
  for (auto _ : state) {
    benchmark::DoNotOptimize(monte_carlo_rank_sum_serial(
        ranks, 30, 100, static_cast<std::uint64_t>(state.range(0)), 7));
  }
}

void BM_MonteCarloParallel(benchmark::State& state) {
  const auto ranks = doubled_ranks(60);
  for (auto _ : state) {
    benchmark::DoNotOptimize(monte_carlo_rank_sum_parallel(
        ranks, 30, 100, static_cast<std::uint64_t>(state.range(0)), 7));
  }
}

void BM_ScoreSerial(benchmark::State& state) {
  const auto& in = scoring_input();
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_serps_serial(in.slices, in.labels, 10, StancePolicy::Default));
  }
}

void BM_ScoreParallel(benchmark::State& state) {
  const auto& in = scoring_input();
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_serps_parallel(in.slices, in.labels, 10, StancePolicy::Default));
  }
}

}  // namespace

BENCHMARK(BM_ExhaustiveSerial)->Arg(16)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExhaustiveParallel)->Arg(16)->Arg(20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MonteCarloSerial)->Arg(200'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloParallel)->Arg(200'000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
