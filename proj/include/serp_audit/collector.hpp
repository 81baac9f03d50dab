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

// Sock-puppet orchestration: query formatting, the fire-time schedule, the
// pluggable search backend and resolver contracts, and the experiment
// runner that turns backend responses into the canonical SERP log.

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/model.hpp"

namespace serp_audit {

// OR-expansion appended to every query so results stay on-topic.
inline constexpr std::string_view kQueryOperatorSuffix =
    "(covid | corona | covid-19 | covid19 | coronavirus | COVD | sars-cov-2 | pandemic)";

// "<trimmed raw> <suffix>". Throws EmptyQuery for blank input and
// AlreadyFormatted when the suffix is already present.
std::string format_query(std::string_view raw);

// Fills in formatted_text for every query that lacks it. Plans written by
// hand usually give only the raw text.
void complete_query_text(ExperimentPlan& plan);

// The audit design: 6 geolocations in US/ZA with twin bots, 48 queries over
// 8 topics, 4 filters, 10 days from 2023-01-30, batches at 00:00 and 12:00
// UTC, top-50 extraction.
ExperimentPlan builtin_plan(std::uint64_t seed = 0);

struct ScheduleEntry {
  Timestamp fire_time;
  std::string bot_id;
  std::string query_id;
  SearchFilter filter = SearchFilter::Relevance;
  int day = 1;
  int batch = 0;

  bool operator==(const ScheduleEntry&) const = default;
};

struct Schedule {
  std::vector<ScheduleEntry> entries;
  std::vector<std::size_t> batch_sizes;  // queries per batch
  std::vector<std::string> warnings;
};

// Queries are split into contiguous batches, one per batch time; when the
// split is uneven the remainder goes to the first batch and a warning is
// recorded. Entries are ordered by (day, batch, bot, query, filter) in
// plan order.
Schedule build_schedule(const ValidatedPlan& plan);

struct SearchRequest {
  const QuerySpec& query;
  SearchFilter filter;
  const GeoLocation& location;
  const BotIdentity& bot;
  Timestamp time;
  int day;
};

// Anything that can answer a search. Implementations must tolerate
// concurrent calls from different bots and return at most top_n_extract
// ids. Throwing AuditError(BackendUnavailable) aborts the run; any other
// exception is treated as a transient per-request failure.
class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  virtual std::vector<std::string> search(const SearchRequest& request) = 0;
};

// Serves recorded SERPs back by (bot_id, timestamp, query_id, filter).
class ReplayBackend : public SearchBackend {
 public:
  explicit ReplayBackend(std::span<const SerpRecord> records);
  std::vector<std::string> search(const SearchRequest& request) override;

 private:
  std::map<std::tuple<std::string, Timestamp, std::string, SearchFilter>,
           std::vector<std::pair<int, std::string>>>
      serps_;
};

struct ResolvedLocation {
  std::string country_code;
  std::string city_name;
};

// IP-geolocation lookup for a bot's egress address. Throws
// AuditError(ResolverUnavailable) when the lookup cannot be made.
class GeoResolver {
 public:
  virtual ~GeoResolver() = default;
  virtual ResolvedLocation resolve(const BotIdentity& bot, const GeoLocation& configured) = 0;
};

// Reports the configured location back; stands in for a real lookup.
class EchoResolver : public GeoResolver {
 public:
  ResolvedLocation resolve(const BotIdentity& bot, const GeoLocation& configured) override;
};

struct GeoCheck {
  bool pass = false;
  ResolvedLocation resolved;
  std::string reason;
};

// Passes iff the resolved country and city match `expected`. Propagates
// ResolverUnavailable.
GeoCheck validate_geolocation(const BotIdentity& bot, const GeoLocation& expected,
                              GeoResolver& resolver);

struct RatePolicy {
  std::chrono::milliseconds min_delay{0};
  std::chrono::milliseconds max_delay{0};
  int retries = 2;
};

RatePolicy rate_policy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RatePolicy& policy);

enum class RunStatus { Complete, Partial };

std::string_view to_string(RunStatus status) noexcept;

struct FailedEntry {
  ScheduleEntry entry;
  std::string error;
  int attempts = 0;
};

struct QuarantinedBot {
  std::string bot_id;
  std::string reason;
};

struct RunReport {
  RunStatus status = RunStatus::Complete;
  std::size_t scheduled_entries = 0;
  std::size_t serps_collected = 0;
  std::size_t records = 0;
  std::vector<std::size_t> batch_sizes;
  std::vector<FailedEntry> failures;
  std::set<std::pair<std::string, int>> exclusions;  // (query_id, day)
  std::vector<QuarantinedBot> quarantined;
  std::vector<std::string> warnings;
  RatePolicy rate_policy;
};

nlohmann::json to_json(const RunReport& report);
std::string to_text(const RunReport& report);

// Reads the exclusion list back from a run report JSON document.
std::set<std::pair<std::string, int>> exclusions_from_json(const nlohmann::json& report);

struct RunResult {
  std::vector<SerpRecord> log;  // canonical order
  RunReport report;
};

// Executes the schedule in fire-time order. Entries sharing a fire time run
// concurrently across bots. Failed entries are retried per `policy` and then
// recorded; every (query, day) with a missing SERP is listed for exclusion.
// When `resolver` is given, bots failing the geolocation check are
// quarantined and not scheduled. Throws BackendUnavailable if the backend
// reports it.
RunResult run_experiment(const ValidatedPlan& plan, SearchBackend& backend,
                         const RatePolicy& policy = {}, GeoResolver* resolver = nullptr);

// Sorts by (timestamp, bot_id, query_id, filter, rank).
void sort_canonical(std::vector<SerpRecord>& records);

}  // namespace serp_audit
