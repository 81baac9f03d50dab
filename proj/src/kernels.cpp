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

#include "serp_audit/kernels.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <utility>

#include "serp_audit/rng.hpp"

namespace serp_audit::kernels {

namespace {

std::int64_t abs_dev(std::int64_t sum2, std::int64_t expected2) {
  return sum2 >= expected2 ? sum2 - expected2 : expected2 - sum2;
}

// Counts k-subsets of ranks[first..] that complete `partial` to an extreme
// assignment. Lexicographic enumeration with an explicit index stack.
PermutationCount enumerate_from(std::span<const std::int64_t> ranks, std::size_t first,
                                std::size_t k, std::int64_t partial, std::int64_t expected2,
                                std::int64_t threshold) {
  PermutationCount out;
  const std::size_t n = ranks.size();
  if (k == 0) {
    out.total = 1;
    out.extreme = abs_dev(partial, expected2) >= threshold ? 1 : 0;
    return out;
  }
  if (n - first < k) return out;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), first);
  std::int64_t sum = partial;
  for (auto i : idx) sum += ranks[i];
  while (true) {
    ++out.total;
    if (abs_dev(sum, expected2) >= threshold) ++out.extreme;
    // advance to the next combination
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + (pos - 1)) --pos;
    if (pos == 0) break;
    --pos;
    sum -= ranks[idx[pos]];
    ++idx[pos];
    sum += ranks[idx[pos]];
    for (std::size_t j = pos + 1; j < k; ++j) {
      sum -= ranks[idx[j]];
      idx[j] = idx[j - 1] + 1;
      sum += ranks[idx[j]];
    }
  }
  return out;
}

std::int64_t expected_doubled(std::size_t n, std::size_t k) {
  return static_cast<std::int64_t>(k) * static_cast<std::int64_t>(n + 1);
}

PermutationCount monte_carlo_chunk(std::span<const std::int64_t> ranks, std::size_t k,
                                   std::int64_t expected2, std::int64_t threshold,
                                   std::uint64_t draws, std::uint64_t chunk_seed) {
  PermutationCount out;
  Rng rng(chunk_seed);
  std::vector<std::int64_t> pool(ranks.begin(), ranks.end());
  const std::size_t n = pool.size();
  for (std::uint64_t it = 0; it < draws; ++it) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
      sum += pool[i];
    }
    ++out.total;
    if (abs_dev(sum, expected2) >= threshold) ++out.extreme;
  }
  return out;
}

}  // namespace

PermutationCount exhaustive_rank_sum_serial(std::span<const std::int64_t> doubled_ranks,
                                            std::size_t group_size, std::int64_t observed_dev2) {
  return enumerate_from(doubled_ranks, 0, group_size, 0,
                        expected_doubled(doubled_ranks.size(), group_size), observed_dev2);
}

PermutationCount exhaustive_rank_sum_parallel(std::span<const std::int64_t> doubled_ranks,
                                              std::size_t group_size, std::int64_t observed_dev2) {
  const std::size_t n = doubled_ranks.size();
  if (group_size == 0 || group_size > n) {
    return exhaustive_rank_sum_serial(doubled_ranks, group_size, observed_dev2);
  }
  const auto expected2 = expected_doubled(n, group_size);
  // Split on the smallest chosen index; each branch is independent.
  const auto branches = static_cast<std::int64_t>(n - group_size + 1);
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : extreme, total)
  for (std::int64_t first = 0; first < branches; ++first) {
    const auto f = static_cast<std::size_t>(first);
    const auto part = enumerate_from(doubled_ranks, f + 1, group_size - 1, doubled_ranks[f],
                                     expected2, observed_dev2);
    extreme += part.extreme;
    total += part.total;
  }
  return {extreme, total};
}

PermutationCount monte_carlo_rank_sum_serial(std::span<const std::int64_t> doubled_ranks,
                                             std::size_t group_size, std::int64_t observed_dev2,
                                             std::uint64_t iterations, std::uint64_t seed) {
  const auto expected2 = expected_doubled(doubled_ranks.size(), group_size);
  const std::uint64_t chunks = (iterations + kMonteCarloChunk - 1) / kMonteCarloChunk;
  PermutationCount out;
  for (std::uint64_t c = 0; c < chunks; ++c) {
    const auto draws = std::min(kMonteCarloChunk, iterations - c * kMonteCarloChunk);
    const auto part = monte_carlo_chunk(doubled_ranks, group_size, expected2, observed_dev2, draws,
                                        derive_seed(seed, c));
    out.extreme += part.extreme;
    out.total += part.total;
  }
  return out;
}

PermutationCount monte_carlo_rank_sum_parallel(std::span<const std::int64_t> doubled_ranks,
                                               std::size_t group_size, std::int64_t observed_dev2,
                                               std::uint64_t iterations, std::uint64_t seed) {
  const auto expected2 = expected_doubled(doubled_ranks.size(), group_size);
  const auto chunks = static_cast<std::int64_t>((iterations + kMonteCarloChunk - 1) / kMonteCarloChunk);
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
#pragma omp parallel for schedule(static) reduction(+ : extreme, total)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const auto cu = static_cast<std::uint64_t>(c);
    const auto draws = std::min(kMonteCarloChunk, iterations - cu * kMonteCarloChunk);
    const auto part = monte_carlo_chunk(doubled_ranks, group_size, expected2, observed_dev2, draws,
                                        derive_seed(seed, cu));
    extreme += part.extreme;
    total += part.total;
  }
  return {extreme, total};
}

std::vector<BiasScore> score_serps_serial(std::span<const SerpSlice> serps, const LabelMap& labels,
                                          int top_n, StancePolicy policy) {
  std::vector<BiasScore> out;
  out.reserve(serps.size());
  for (const auto& serp : serps) out.push_back(bias_score_topn(serp, labels, top_n, policy));
  return out;
}

std::vector<BiasScore> score_serps_parallel(std::span<const SerpSlice> serps,
                                            const LabelMap& labels, int top_n,
                                            StancePolicy policy) {
  const auto n = static_cast<std::int64_t>(serps.size());
  std::vector<BiasScore> out(serps.size());
  std::vector<std::exception_ptr> errors(serps.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = bias_score_topn(serps[k], labels, top_n, policy);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace serp_audit::kernels
