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

// Domain types shared by every audit stage: geolocations, twin bots,
// queries, filters, the experiment plan and the per-result SERP record.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "serp_audit/error.hpp"

namespace serp_audit {

using Timestamp = std::chrono::sys_seconds;

// ISO-8601 UTC with second resolution, e.g. "2023-01-30T00:00:00Z".
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

// "HH:MM" time of day.
std::string format_time_of_day(std::chrono::seconds t);
std::chrono::seconds parse_time_of_day(std::string_view text);

std::string format_date(std::chrono::sys_days d);
std::chrono::sys_days parse_date(std::string_view text);

struct GeoLocation {
  std::string location_id;
  std::string country_code;
  std::string city_name;

  bool operator==(const GeoLocation&) const = default;
};

enum class TwinRole { Treatment, Control };

std::string_view to_string(TwinRole role) noexcept;
std::optional<TwinRole> parse_twin_role(std::string_view text) noexcept;

struct BotIdentity {
  std::string bot_id;
  std::string location_id;
  TwinRole role = TwinRole::Treatment;

  bool operator==(const BotIdentity&) const = default;
};

enum class SearchFilter { Relevance, UploadDate, ViewCount, Rating };

inline constexpr SearchFilter kAllFilters[] = {
    SearchFilter::Relevance, SearchFilter::UploadDate, SearchFilter::ViewCount,
    SearchFilter::Rating};

std::string_view to_string(SearchFilter filter) noexcept;
std::optional<SearchFilter> parse_filter(std::string_view text) noexcept;

struct QuerySpec {
  std::string query_id;
  std::string topic;
  std::string raw_text;
  std::string formatted_text;

  bool operator==(const QuerySpec&) const = default;
};

// The 7-point annotation scale; enumerator values are the label codes.
enum class AnnotationLabel : int {
  Opposing = -1,
  Neutral = 0,
  Supporting = 1,
  Origins = 2,
  Irrelevant = 3,
  NonEnglish = 4,
  Inaccessible = 5,
};

inline constexpr AnnotationLabel kAllLabels[] = {
    AnnotationLabel::Opposing,   AnnotationLabel::Neutral,
    AnnotationLabel::Supporting, AnnotationLabel::Origins,
    AnnotationLabel::Irrelevant, AnnotationLabel::NonEnglish,
    AnnotationLabel::Inaccessible};

constexpr int code(AnnotationLabel label) noexcept { return static_cast<int>(label); }
std::optional<AnnotationLabel> label_from_code(int code) noexcept;
std::string_view to_string(AnnotationLabel label) noexcept;
std::optional<AnnotationLabel> parse_label_name(std::string_view text) noexcept;

using LabelMap = std::unordered_map<std::string, AnnotationLabel>;

// How the origins class is treated when mapping labels to stances.
enum class StancePolicy { Default, ExcludeOrigins, OriginsAsMisinfo };

inline constexpr StancePolicy kAllPolicies[] = {
    StancePolicy::Default, StancePolicy::ExcludeOrigins,
    StancePolicy::OriginsAsMisinfo};

std::string_view to_string(StancePolicy policy) noexcept;
std::optional<StancePolicy> parse_policy(std::string_view text) noexcept;

struct SerpRecord {
  Timestamp timestamp;
  std::string bot_id;
  TwinRole twin_role = TwinRole::Treatment;
  std::string location_id;
  std::string country_code;
  std::string query_id;
  SearchFilter filter = SearchFilter::Relevance;
  int rank = 1;
  std::string video_id;
  int experiment_day = 1;

  bool operator==(const SerpRecord&) const = default;
};

inline constexpr int kMaxRank = 50;

struct ExperimentPlan {
  std::vector<GeoLocation> geolocations;
  std::vector<BotIdentity> bots;
  std::vector<QuerySpec> queries;
  std::vector<SearchFilter> filters;
  int days = 1;
  std::vector<std::chrono::seconds> batch_times;
  int top_n_extract = kMaxRank;
  std::uint64_t seed = 0;
  std::chrono::sys_days start_date{};

  const GeoLocation* find_location(std::string_view location_id) const;
  const QuerySpec* find_query(std::string_view query_id) const;
  const BotIdentity* find_bot(std::string_view bot_id) const;

  // 1-based day index of t relative to start_date.
  int day_of(Timestamp t) const;

  bool operator==(const ExperimentPlan&) const = default;
};

// One treatment and one control bot per geolocation.
std::vector<BotIdentity> make_twin_bots(std::span<const GeoLocation> geolocations);

struct PlanViolation {
  ErrorKind kind;
  std::string field;
  std::string rule;
};

class PlanError : public AuditError {
 public:
  explicit PlanError(std::vector<PlanViolation> violations);
  const std::vector<PlanViolation>& violations() const noexcept { return violations_; }

 private:
  std::vector<PlanViolation> violations_;
};

std::vector<PlanViolation> check_plan(const ExperimentPlan& plan);

// A plan that passed check_plan. Only validate_plan constructs one.
class ValidatedPlan {
 public:
  const ExperimentPlan& plan() const noexcept { return plan_; }
  const ExperimentPlan* operator->() const noexcept { return &plan_; }

 private:
  explicit ValidatedPlan(ExperimentPlan plan) : plan_(std::move(plan)) {}
  friend ValidatedPlan validate_plan(ExperimentPlan plan);

  ExperimentPlan plan_;
};

// Throws PlanError listing every violated rule.
ValidatedPlan validate_plan(ExperimentPlan plan);

// Keeps the first occurrence of each id.
struct DedupResult {
  std::vector<std::string> ids;
  std::vector<std::string> dropped;
};
DedupResult dedupe_serp(std::vector<std::string> ids);

}  // namespace serp_audit
