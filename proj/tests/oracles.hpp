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

// Deliberately naive reference implementations. None of these share code
// with the library: ranks come from pairwise counting, sums from plain
// loops, and permutation p-values from bitmask enumeration.

#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Rank-weighted bias as an exact fraction (numerator, denominator), built
// by adding each stance once per unit of weight.
inline std::pair<std::int64_t, std::int64_t> bias_fraction(const std::vector<int>& stances) {
  const auto n = static_cast<std::int64_t>(stances.size());
  std::int64_t num = 0;
  std::int64_t den = 0;
  for (std::int64_t r = 1; r <= n; ++r) {
    for (std::int64_t w = 0; w < n - r + 1; ++w) {
      num += stances[static_cast<std::size_t>(r - 1)];
      den += 1;
    }
  }
  return {num, den};
}

inline double bias(const std::vector<int>& stances) {
  const auto [num, den] = bias_fraction(stances);
  return static_cast<double>(num) / static_cast<double>(den);
}

// Midrank of every value: 1 + (#smaller) + (#equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& values) {
  std::vector<double> out;
  for (double v : values) {
    double less = 0;
    double equal = 0;
    for (double w : values) {
      if (w < v) ++less;
      if (w == v) ++equal;
    }
    out.push_back(less + (equal + 1.0) / 2.0);
  }
  return out;
}

// Exact two-sided permutation p of the rank-sum statistic, enumerating
// every subset of size |a| by bitmask. Only for |a| + |b| <= 24.
inline double permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  const auto r = ranks(all);
  const std::size_t n = all.size();
  const std::size_t k = a.size();
  const double centre = static_cast<double>(k) * static_cast<double>(n + 1) / 2.0;
  double observed = 0;
  for (std::size_t i = 0; i < k; ++i) observed += r[i];
  const double observed_dev = std::abs(observed - centre);
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != k) continue;
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sum += r[i];
    }
    ++total;
    if (std::abs(sum - centre) >= observed_dev - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

// Mann-Whitney U_a by counting pairwise wins (ties count one half).
inline double u_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (double x : a) {
    for (double y : b) {
      if (x > y) u += 1.0;
      if (x == y) u += 0.5;
    }
  }
  return u;
}

// Kruskal-Wallis H from the textbook definition with tie correction.
inline double kruskal_h(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const auto r = ranks(all);
  const double n = static_cast<double>(all.size());
  double h = 0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double sum = 0;
    for (std::size_t i = 0; i < g.size(); ++i) sum += r[offset + i];
    offset += g.size();
    h += sum * sum / static_cast<double>(g.size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  std::set<double> distinct(all.begin(), all.end());
  double ties = 0;
  for (double v : distinct) {
    double t = 0;
    for (double w : all) t += (w == v) ? 1.0 : 0.0;
    ties += t * t * t - t;
  }
  return h / (1.0 - ties / (n * n * n - n));
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.count(x);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace oracle
