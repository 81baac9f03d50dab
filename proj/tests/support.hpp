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

#include <chrono>
#include <optional>
#include <string>

#include "serp_audit/error.hpp"
#include "serp_audit/model.hpp"

namespace test_support {

// The error class thrown by f, or nullopt if it returned normally.
template <class F>
std::optional<serp_audit::ErrorKind> thrown_kind(F&& f) {
  try {
    f();
  } catch (const serp_audit::AuditError& e) {
    return e.kind();
  }
  return std::nullopt;
}

// Two countries with `per_country` locations each, twin bots, `queries`
// queries split over two topics, the given filters, `days` days and one
// batch at 00:00.
inline serp_audit::ExperimentPlan small_plan(int per_country = 1, int queries = 2, int days = 2,
                                             std::vector<serp_audit::SearchFilter> filters = {
                                                 serp_audit::SearchFilter::Relevance}) {
  using namespace serp_audit;
  ExperimentPlan plan;
  for (int i = 0; i < per_country; ++i) {
    plan.geolocations.push_back({"us-" + std::to_string(i), "US", "City " + std::to_string(i)});
    plan.geolocations.push_back({"za-" + std::to_string(i), "ZA", "Town " + std::to_string(i)});
  }
  plan.bots = make_twin_bots(plan.geolocations);
  for (int q = 0; q < queries; ++q) {
    const auto raw = "query " + std::to_string(q);
    plan.queries.push_back({"q" + std::to_string(q), q % 2 == 0 ? "Alpha" : "Beta", raw,
                            raw + " (suffix)"});
  }
  plan.filters = std::move(filters);
  plan.days = days;
  plan.batch_times = {std::chrono::seconds{0}};
  plan.top_n_extract = 10;
  plan.seed = 1;
  plan.start_date = std::chrono::sys_days{std::chrono::year{2023} / 1 / 30};
  return plan;
}

}  // namespace test_support
