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

#include <doctest.h>
#include <omp.h>

#include "serp_audit/kernels.hpp"
#include "serp_audit/rng.hpp"
#include "support.hpp"

using namespace serp_audit;
using namespace serp_audit::kernels;

namespace {

std::vector<std::int64_t> doubled_ranks(std::size_t n) {
  std::vector<std::int64_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<std::int64_t>(2 * (i + 1));
  return r;
}

// Restores the OpenMP thread count when it goes out of scope.
struct ThreadCount {
  int saved = omp_get_max_threads();
  explicit ThreadCount(int n) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("exhaustive rank-sum kernels agree") {
  for (std::size_t n : {2u, 7u, 12u, 16u}) {
    const auto ranks = doubled_ranks(n);
    for (std::size_t k = 1; k < n; ++k) {
      for (std::int64_t threshold : {0, 4, 10, 30}) {
        const auto serial = exhaustive_rank_sum_serial(ranks, k, threshold);
        const auto parallel = exhaustive_rank_sum_parallel(ranks, k, threshold);
        CHECK(serial.total == parallel.total);
        CHECK(serial.extreme == parallel.extreme);
      }
    }
  }
}

TEST_CASE("exhaustive enumeration visits every assignment once") {
  const auto ranks = doubled_ranks(10);
  const auto all = exhaustive_rank_sum_parallel(ranks, 4, 0);
  CHECK(all.total == 210);
  CHECK(all.extreme == 210);
}

TEST_CASE("Monte-Carlo kernels give identical counts at any thread count") {
  const auto ranks = doubled_ranks(40);
  const auto serial = monte_carlo_rank_sum_serial(ranks, 20, 40, 50'000, 17);
  for (int threads : {1, 2, 3, 8}) {
    ThreadCount guard(threads);
    const auto parallel = monte_carlo_rank_sum_parallel(ranks, 20, 40, 50'000, 17);
    CHECK(parallel.total == 50'000);
    CHECK(parallel.extreme == serial.extreme);
  }
  CHECK(monte_carlo_rank_sum_serial(ranks, 20, 40, 50'000, 18).extreme != serial.extreme);
}

TEST_CASE("batch scoring kernels agree and report the first failure") {
  LabelMap labels;
  Rng rng(derive_seed(40, "score-kernel"));
  std::vector<std::vector<std::string>> serps(500);
  for (std::size_t s = 0; s < serps.size(); ++s) {
    for (int r = 0; r < 50; ++r) {
      auto id = "v" + std::to_string(rng.below(2000));
      labels.emplace(id, kAllLabels[rng.below(7)]);
      serps[s].push_back(std::move(id));
    }
  }
  std::vector<SerpSlice> slices(serps.begin(), serps.end());
  for (auto policy : kAllPolicies) {
    for (int n : {1, 10, 50}) {
      const auto serial = score_serps_serial(slices, labels, n, policy);
      const auto parallel = score_serps_parallel(slices, labels, n, policy);
      REQUIRE(serial.size() == parallel.size());
      for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].numerator == parallel[i].numerator);
        CHECK(serial[i].denominator == parallel[i].denominator);
      }
    }
  }

  serps[300][0] = "unlabeled-late";
  serps[120][0] = "unlabeled-early";
  std::vector<SerpSlice> broken(serps.begin(), serps.end());
  try {
    score_serps_parallel(broken, labels, 10, StancePolicy::Default);
    FAIL("expected MissingLabel");
  } catch (const AuditError& e) {
    CHECK(e.kind() == ErrorKind::MissingLabel);
    CHECK(std::string(e.what()).find("unlabeled-early") != std::string::npos);
  }
}
