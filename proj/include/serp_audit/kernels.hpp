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

#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a serial twin with the
// same contract; the twins are what the tests compare against and what the
// benchmarks time. Results never depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "serp_audit/metrics.hpp"
#include "serp_audit/model.hpp"

namespace serp_audit::kernels {

struct PermutationCount {
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
};

// Ranks are passed doubled (2 * midrank) so every sum is an exact integer.
// An assignment is extreme when |2 R_a - n_a (N + 1)| >= observed_dev2.
PermutationCount exhaustive_rank_sum_serial(std::span<const std::int64_t> doubled_ranks,
                                            std::size_t group_size, std::int64_t observed_dev2);
PermutationCount exhaustive_rank_sum_parallel(std::span<const std::int64_t> doubled_ranks,
                                              std::size_t group_size, std::int64_t observed_dev2);

// Random assignments in fixed-size chunks; chunk c draws from
// derive_seed(seed, c), so both variants return identical counts.
PermutationCount monte_carlo_rank_sum_serial(std::span<const std::int64_t> doubled_ranks,
                                             std::size_t group_size, std::int64_t observed_dev2,
                                             std::uint64_t iterations, std::uint64_t seed);
PermutationCount monte_carlo_rank_sum_parallel(std::span<const std::int64_t> doubled_ranks,
                                               std::size_t group_size, std::int64_t observed_dev2,
                                               std::uint64_t iterations, std::uint64_t seed);

inline constexpr std::uint64_t kMonteCarloChunk = 4096;

using SerpSlice = std::span<const std::string>;

// bias_score_topn over many SERPs. On failure the error of the lowest
// failing index is rethrown.
std::vector<BiasScore> score_serps_serial(std::span<const SerpSlice> serps, const LabelMap& labels,
                                          int top_n, StancePolicy policy);
std::vector<BiasScore> score_serps_parallel(std::span<const SerpSlice> serps,
                                            const LabelMap& labels, int top_n,
                                            StancePolicy policy);

}  // namespace serp_audit::kernels
