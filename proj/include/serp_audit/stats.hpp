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

// Rank-based tests used to compare bias-score samples: Mann-Whitney U,
// Kruskal-Wallis H with Conover-Iman post-hoc comparisons, a Shapiro-Wilk
// normality check and an exact/Monte-Carlo permutation test that serves as
// the reference for the normal approximation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace serp_audit {

struct Ranking {
  std::vector<double> ranks;           // 1-based midranks, input order
  std::vector<std::size_t> tie_sizes;  // size of every tie group with >1 member

  // sum over tie groups of t^3 - t
  double tie_term() const noexcept;
};

Ranking midranks(std::span<const double> values);

enum class Direction { AGreater, BGreater, None };

std::string_view to_string(Direction d) noexcept;

struct TestResult {
  double statistic = 0.0;  // U (Mann-Whitney) or t (Conover-Iman)
  double p_value = 1.0;
  double effect_size = 0.0;
  Direction direction = Direction::None;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double z = 0.0;
  double mean_rank_a = 0.0;
  double mean_rank_b = 0.0;
};

struct MannWhitneyOptions {
  bool continuity_correction = true;
};

// Two-sided Mann-Whitney U test, normal approximation with tie-corrected
// variance. statistic = min(U_a, U_b); effect_size r = |z| / sqrt(n_a + n_b).
// Throws DegenerateSample when every value in both groups is equal.
TestResult mann_whitney(std::span<const double> a, std::span<const double> b,
                        MannWhitneyOptions options = {});

struct PairwiseResult {
  std::size_t group_a = 0;
  std::size_t group_b = 0;
  TestResult test;  // p_value is the adjusted one
  double p_unadjusted = 1.0;
};

struct GroupTestResult {
  double h_statistic = 0.0;
  double p_value = 1.0;
  double eta_squared = 0.0;
  std::size_t k = 0;
  std::size_t n = 0;
  std::vector<double> mean_ranks;
  std::vector<PairwiseResult> posthoc;
};

// Kruskal-Wallis H with tie correction; p from chi-squared with k-1 degrees
// of freedom; eta^2 = (H - k + 1) / (n - k) clamped to [0, 1]. posthoc is
// left empty.
GroupTestResult kruskal_wallis(std::span<const std::vector<double>> groups);

enum class Adjustment { None, Bonferroni };

// Conover-Iman pairwise t-tests on mean ranks of the pooled ranking, with
// df = n - k. Returns k(k-1)/2 results ordered (0,1), (0,2), ..., (k-2,k-1).
std::vector<PairwiseResult> conover_iman(std::span<const std::vector<double>> groups,
                                         Adjustment adjustment = Adjustment::Bonferroni);

struct NormalityResult {
  double statistic = 1.0;
  double p_value = 1.0;
};

// Shapiro-Wilk W (Royston's approximation, 3 <= n <= 5000).
NormalityResult normality_check(std::span<const double> sample);

inline constexpr std::uint64_t kMaxExhaustiveAssignments = 200'000;

enum class PermutationMode { Auto, Exhaustive, MonteCarlo };

struct PermutationOptions {
  PermutationMode mode = PermutationMode::Auto;
  std::uint64_t iterations = 200'000;
  std::uint64_t seed = 0;
};

struct PermutationResult {
  double p_value = 1.0;
  std::uint64_t extreme = 0;  // assignments at least as extreme as observed
  std::uint64_t total = 0;
  bool exact = false;
};

// Two-sided permutation p-value of the rank-sum statistic
// |R_a - n_a (N + 1) / 2| over group assignments of the pooled midranks.
PermutationResult permutation_oracle(std::span<const double> a, std::span<const double> b,
                                     PermutationOptions options = {});

// n choose k, saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept;

// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, "" otherwise.
std::string_view significance_stars(double p) noexcept;

// Distribution tails, exposed for tests.
double normal_two_sided_p(double z) noexcept;
double chi_squared_sf(double x, double df);
double students_t_two_sided_p(double t, double df);

}  // namespace serp_audit
