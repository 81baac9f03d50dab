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

#include "serp_audit/stats.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "serp_audit/error.hpp"
#include "serp_audit/kernels.hpp"

namespace serp_audit {

double Ranking::tie_term() const noexcept {
  double sum = 0.0;
  for (auto t : tie_sizes) {
    const auto d = static_cast<double>(t);
    sum += d * d * d - d;
  }
  return sum;
}

Ranking midranks(std::span<const double> values) {
  if (values.empty()) throw AuditError(ErrorKind::InvalidArgument, "cannot rank an empty sample");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  Ranking out;
  out.ranks.resize(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t m = i; m < j; ++m) out.ranks[order[m]] = rank;
    if (j - i > 1) out.tie_sizes.push_back(j - i);
    i = j;
  }
  return out;
}

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::AGreater: return "a>b";
    case Direction::BGreater: return "b>a";
    case Direction::None: return "none";
  }
  return "none";
}

double normal_two_sided_p(double z) noexcept {
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

double chi_squared_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

double students_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

namespace {

std::vector<double> pooled(std::span<const double> a, std::span<const double> b) {
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  return all;
}

Direction compare_mean_ranks(double sum_a, std::size_t n_a, double sum_b, std::size_t n_b) {
  // Rank sums are multiples of 0.5, so the cross products are exact.
  const double lhs = sum_a * static_cast<double>(n_b);
  const double rhs = sum_b * static_cast<double>(n_a);
  if (lhs > rhs) return Direction::AGreater;
  if (rhs > lhs) return Direction::BGreater;
  return Direction::None;
}

void check_groups(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) {
    throw AuditError(ErrorKind::InvalidArgument, "at least two groups are required");
  }
  for (const auto& g : groups) {
    if (g.empty()) throw AuditError(ErrorKind::InvalidArgument, "groups must be non-empty");
  }
}

struct PooledRanks {
  Ranking ranking;
  std::vector<double> rank_sums;
  std::size_t n = 0;
};

PooledRanks rank_groups(std::span<const std::vector<double>> groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  PooledRanks out;
  out.n = all.size();
  out.ranking = midranks(all);
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sum += out.ranking.ranks[offset + i];
    out.rank_sums.push_back(sum);
    offset += g.size();
  }
  return out;
}

double tie_corrected_h(const PooledRanks& pr, std::span<const std::vector<double>> groups) {
  const auto n = static_cast<double>(pr.n);
  double sum = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    sum += pr.rank_sums[i] * pr.rank_sums[i] / static_cast<double>(groups[i].size());
  }
  const double h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
  const double correction = 1.0 - pr.ranking.tie_term() / (n * n * n - n);
  return std::max(0.0, h / correction);
}

}  // namespace

TestResult mann_whitney(std::span<const double> a, std::span<const double> b,
                        MannWhitneyOptions options) {
  if (a.empty() || b.empty()) {
    throw AuditError(ErrorKind::InvalidArgument, "Mann-Whitney needs two non-empty samples");
  }
  const auto all = pooled(a, b);
  const auto ranking = midranks(all);
  const std::size_t n_a = a.size();
  const std::size_t n_b = b.size();
  const double na = static_cast<double>(n_a);
  const double nb = static_cast<double>(n_b);
  const double n = na + nb;

  if (ranking.tie_sizes.size() == 1 && ranking.tie_sizes[0] == all.size()) {
    throw AuditError(ErrorKind::DegenerateSample, "all values are identical across both samples");
  }

  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < n_a; ++i) rank_sum_a += ranking.ranks[i];
  const double rank_sum_b = n * (n + 1.0) / 2.0 - rank_sum_a;
  const double u_a = rank_sum_a - na * (na + 1.0) / 2.0;
  const double u_b = na * nb - u_a;

  const double mu = na * nb / 2.0;
  const double variance = na * nb / 12.0 * ((n + 1.0) - ranking.tie_term() / (n * (n - 1.0)));
  const double sd = std::sqrt(variance);
  const double cc = options.continuity_correction ? 0.5 : 0.0;
  const double dev = std::max(0.0, std::abs(u_a - mu) - cc);
  const double z = (u_a >= mu ? dev : -dev) / sd;

  TestResult r;
  r.statistic = std::min(u_a, u_b);
  r.z = z;
  r.p_value = normal_two_sided_p(z);
  r.effect_size = std::abs(z) / std::sqrt(n);
  r.n_a = n_a;
  r.n_b = n_b;
  r.mean_rank_a = rank_sum_a / na;
  r.mean_rank_b = rank_sum_b / nb;
  r.direction = compare_mean_ranks(rank_sum_a, n_a, rank_sum_b, n_b);
  return r;
}

GroupTestResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  check_groups(groups);
  const auto pr = rank_groups(groups);
  if (pr.ranking.tie_sizes.size() == 1 && pr.ranking.tie_sizes[0] == pr.n) {
    throw AuditError(ErrorKind::DegenerateSample, "all values are identical across groups");
  }
  GroupTestResult r;
  r.k = groups.size();
  r.n = pr.n;
  r.h_statistic = tie_corrected_h(pr, groups);
  r.p_value = chi_squared_sf(r.h_statistic, static_cast<double>(r.k - 1));
  if (r.n > r.k) {
    const double eta = (r.h_statistic - static_cast<double>(r.k) + 1.0) /
                       static_cast<double>(r.n - r.k);
    r.eta_squared = std::clamp(eta, 0.0, 1.0);
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    r.mean_ranks.push_back(pr.rank_sums[i] / static_cast<double>(groups[i].size()));
  }
  return r;
}

std::vector<PairwiseResult> conover_iman(std::span<const std::vector<double>> groups,
                                         Adjustment adjustment) {
  check_groups(groups);
  const auto pr = rank_groups(groups);
  if (pr.ranking.tie_sizes.size() == 1 && pr.ranking.tie_sizes[0] == pr.n) {
    throw AuditError(ErrorKind::DegenerateSample, "all values are identical across groups");
  }
  const auto n = static_cast<double>(pr.n);
  const auto k = static_cast<double>(groups.size());
  const double h = tie_corrected_h(pr, groups);

  double sum_sq = 0.0;
  for (double rk : pr.ranking.ranks) sum_sq += rk * rk;
  const double s2 = (sum_sq - n * (n + 1.0) * (n + 1.0) / 4.0) / (n - 1.0);
  const double df = n - k;
  const double pooled_scale = df > 0.0 ? s2 * (n - 1.0 - h) / df : 0.0;
  const double comparisons = k * (k - 1.0) / 2.0;

  std::vector<PairwiseResult> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const double ni = static_cast<double>(groups[i].size());
      const double nj = static_cast<double>(groups[j].size());
      const double mean_i = pr.rank_sums[i] / ni;
      const double mean_j = pr.rank_sums[j] / nj;
      const double se = std::sqrt(std::max(0.0, pooled_scale) * (1.0 / ni + 1.0 / nj));

      PairwiseResult p;
      p.group_a = i;
      p.group_b = j;
      p.test.n_a = groups[i].size();
      p.test.n_b = groups[j].size();
      p.test.mean_rank_a = mean_i;
      p.test.mean_rank_b = mean_j;
      p.test.direction = compare_mean_ranks(pr.rank_sums[i], groups[i].size(), pr.rank_sums[j],
                                            groups[j].size());
      if (mean_i == mean_j) {
        p.test.statistic = 0.0;
        p.p_unadjusted = 1.0;
      } else if (se == 0.0 || df <= 0.0) {
        // No within-group rank variance left: the separation is complete.
        p.test.statistic = std::copysign(std::numeric_limits<double>::infinity(), mean_i - mean_j);
        p.p_unadjusted = 0.0;
      } else {
        p.test.statistic = (mean_i - mean_j) / se;
        p.p_unadjusted = students_t_two_sided_p(p.test.statistic, df);
      }
      p.test.p_value = adjustment == Adjustment::Bonferroni
                           ? std::min(1.0, p.p_unadjusted * comparisons)
                           : p.p_unadjusted;
      out.push_back(p);
    }
  }
  return out;
}

namespace {

double poly(const double* c, int count, double x) {
  double result = c[count - 1];
  for (int i = count - 2; i >= 0; --i) result = result * x + c[i];
  return result;
}

}  // namespace

NormalityResult normality_check(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3) {
    throw AuditError(ErrorKind::TooFewSamples,
                     fmt::format("Shapiro-Wilk needs at least 3 values, got {}", n));
  }
  if (n > 5000) {
    throw AuditError(ErrorKind::InvalidArgument, "Shapiro-Wilk supports at most 5000 values");
  }
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) {
    throw AuditError(ErrorKind::DegenerateSample, "Shapiro-Wilk of a constant sample");
  }

  // Coefficients a_1..a_{n/2} for the pairs x_(n+1-i) - x_(i).
  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half + 1, 0.0);  // 1-based
  if (n == 3) {
    a[1] = std::sqrt(0.5);
  } else {
    static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    const boost::math::normal_distribution<double> std_normal;
    std::vector<double> m(half + 1, 0.0);
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= half; ++i) {
      m[i] = boost::math::quantile(std_normal, (static_cast<double>(i) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[1] / ssumm2;
    std::size_t first_plain;
    double fac;
    if (n > 5) {
      first_plain = 3;
      const double a2 = -m[2] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1] - 2.0 * m[2] * m[2]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[2] = a2;
    } else {
      first_plain = 2;
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1));
    }
    a[1] = a1;
    for (std::size_t i = first_plain; i <= half; ++i) a[i] = -m[i] / fac;
  }

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / an;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double num = 0.0;
  for (std::size_t i = 1; i <= half; ++i) num += a[i] * (x[n - i] - x[i - 1]);
  const double w = std::min(1.0, num * num / ss);

  NormalityResult r;
  r.statistic = w;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;  // 6 / pi
    constexpr double stqr = 1.04719755119660; // pi / 3
    r.p_value = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
    return r;
  }
  static constexpr double g[2] = {-2.273, 0.459};
  static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};

  double y = std::log(1.0 - w);
  double mu;
  double sigma;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      r.p_value = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, 4, an);
    sigma = std::exp(poly(c4, 4, an));
  } else {
    const double xx = std::log(an);
    mu = poly(c5, 4, xx);
    sigma = std::exp(poly(c6, 3, xx));
  }
  r.p_value = 0.5 * std::erfc((y - mu) / sigma / std::sqrt(2.0));
  return r;
}

__extension__ typedef unsigned __int128 WideCount;

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
  if (k > n) return 0;
  k = std::min(k, n - k);
  WideCount result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
    if (result > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(result);
}

PermutationResult permutation_oracle(std::span<const double> a, std::span<const double> b,
                                     PermutationOptions options) {
  if (a.empty() || b.empty()) {
    throw AuditError(ErrorKind::InvalidArgument, "permutation test needs two non-empty samples");
  }
  const auto all = pooled(a, b);
  const auto ranking = midranks(all);
  std::vector<std::int64_t> doubled(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    doubled[i] = static_cast<std::int64_t>(std::llround(2.0 * ranking.ranks[i]));
  }
  const std::size_t k = a.size();
  std::int64_t observed = 0;
  for (std::size_t i = 0; i < k; ++i) observed += doubled[i];
  const auto expected = static_cast<std::int64_t>(k) * static_cast<std::int64_t>(all.size() + 1);
  const std::int64_t dev = observed >= expected ? observed - expected : expected - observed;

  const auto assignments = binomial(all.size(), k);
  bool exhaustive = false;
  switch (options.mode) {
    case PermutationMode::Exhaustive:
      if (assignments > kMaxExhaustiveAssignments) {
        throw AuditError(ErrorKind::TooLargeForExhaustive,
                         fmt::format("C({}, {}) = {} assignments exceeds the limit of {}",
                                     all.size(), k, assignments, kMaxExhaustiveAssignments));
      }
      exhaustive = true;
      break;
    case PermutationMode::Auto:
      exhaustive = assignments <= kMaxExhaustiveAssignments;
      break;
    case PermutationMode::MonteCarlo:
      exhaustive = false;
      break;
  }

  kernels::PermutationCount count;
  if (exhaustive) {
    count = kernels::exhaustive_rank_sum_parallel(doubled, k, dev);
  } else {
    if (options.iterations == 0) {
      throw AuditError(ErrorKind::InvalidArgument, "Monte-Carlo permutation needs iterations > 0");
    }
    count = kernels::monte_carlo_rank_sum_parallel(doubled, k, dev, options.iterations,
                                                   options.seed);
  }
  PermutationResult r;
  r.extreme = count.extreme;
  r.total = count.total;
  r.exact = exhaustive;
  r.p_value = static_cast<double>(count.extreme) / static_cast<double>(count.total);
  return r;
}

std::string_view significance_stars(double p) noexcept {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace serp_audit
