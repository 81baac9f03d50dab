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

#include "serp_audit/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_set>

namespace serp_audit {

namespace {

using namespace std::chrono;

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len, std::string_view what) {
  int value = 0;
  const char* first = text.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("malformed {} '{}'", what, text));
  }
  return value;
}

bool is_safe_id(std::string_view id) {
  return !id.empty() && id.find_first_of("\t\n\r,") == std::string_view::npos;
}

}  // namespace

std::string format_date(sys_days d) {
  const year_month_day ymd{d};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

sys_days parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("malformed date '{}'", text));
  }
  const year_month_day ymd{year{parse_fixed(text, 0, 4, "date")},
                           month{static_cast<unsigned>(parse_fixed(text, 5, 2, "date"))},
                           day{static_cast<unsigned>(parse_fixed(text, 8, 2, "date"))}};
  if (!ymd.ok()) {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("invalid date '{}'", text));
  }
  return sys_days{ymd};
}

std::string format_timestamp(Timestamp t) {
  const auto d = floor<days>(t);
  const hh_mm_ss<seconds> tod{t - d};
  return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", format_date(d), tod.hours().count(),
                     tod.minutes().count(), tod.seconds().count());
}

Timestamp parse_timestamp(std::string_view text) {
  if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
      text[19] != 'Z') {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("malformed timestamp '{}'", text));
  }
  const auto d = parse_date(text.substr(0, 10));
  const int hh = parse_fixed(text, 11, 2, "timestamp");
  const int mm = parse_fixed(text, 14, 2, "timestamp");
  const int ss = parse_fixed(text, 17, 2, "timestamp");
  if (hh > 23 || mm > 59 || ss > 59) {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("timestamp out of range '{}'", text));
  }
  return Timestamp{d} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_time_of_day(seconds t) {
  const hh_mm_ss<seconds> tod{t};
  return fmt::format("{:02d}:{:02d}", tod.hours().count(), tod.minutes().count());
}

seconds parse_time_of_day(std::string_view text) {
  if (text.size() != 5 || text[2] != ':') {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("malformed time of day '{}'", text));
  }
  const int hh = parse_fixed(text, 0, 2, "time of day");
  const int mm = parse_fixed(text, 3, 2, "time of day");
  if (hh > 23 || mm > 59) {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("time of day out of range '{}'", text));
  }
  return hours{hh} + minutes{mm};
}

std::string_view to_string(TwinRole role) noexcept {
  return role == TwinRole::Treatment ? "treatment" : "control";
}

std::optional<TwinRole> parse_twin_role(std::string_view text) noexcept {
  if (text == "treatment") return TwinRole::Treatment;
  if (text == "control") return TwinRole::Control;
  return std::nullopt;
}

std::string_view to_string(SearchFilter filter) noexcept {
  switch (filter) {
    case SearchFilter::Relevance: return "relevance";
    case SearchFilter::UploadDate: return "upload_date";
    case SearchFilter::ViewCount: return "view_count";
    case SearchFilter::Rating: return "rating";
  }
  return "relevance";
}

std::optional<SearchFilter> parse_filter(std::string_view text) noexcept {
  for (auto f : kAllFilters) {
    if (to_string(f) == text) return f;
  }
  return std::nullopt;
}

std::optional<AnnotationLabel> label_from_code(int c) noexcept {
  if (c < -1 || c > 5) return std::nullopt;
  return static_cast<AnnotationLabel>(c);
}

std::string_view to_string(AnnotationLabel label) noexcept {
  switch (label) {
    case AnnotationLabel::Opposing: return "opposing";
    case AnnotationLabel::Neutral: return "neutral";
    case AnnotationLabel::Supporting: return "supporting";
    case AnnotationLabel::Origins: return "origins";
    case AnnotationLabel::Irrelevant: return "irrelevant";
    case AnnotationLabel::NonEnglish: return "non_english";
    case AnnotationLabel::Inaccessible: return "inaccessible";
  }
  return "neutral";
}

std::optional<AnnotationLabel> parse_label_name(std::string_view text) noexcept {
  for (auto l : kAllLabels) {
    if (to_string(l) == text) return l;
  }
  return std::nullopt;
}

std::string_view to_string(StancePolicy policy) noexcept {
  switch (policy) {
    case StancePolicy::Default: return "default";
    case StancePolicy::ExcludeOrigins: return "exclude-origins";
    case StancePolicy::OriginsAsMisinfo: return "origins-as-misinfo";
  }
  return "default";
}

std::optional<StancePolicy> parse_policy(std::string_view text) noexcept {
  for (auto p : kAllPolicies) {
    if (to_string(p) == text) return p;
  }
  if (text == "case1") return StancePolicy::ExcludeOrigins;
  if (text == "case2") return StancePolicy::OriginsAsMisinfo;
  return std::nullopt;
}

const GeoLocation* ExperimentPlan::find_location(std::string_view location_id) const {
  auto it = std::find_if(geolocations.begin(), geolocations.end(),
                         [&](const GeoLocation& g) { return g.location_id == location_id; });
  return it == geolocations.end() ? nullptr : &*it;
}

const QuerySpec* ExperimentPlan::find_query(std::string_view query_id) const {
  auto it = std::find_if(queries.begin(), queries.end(),
                         [&](const QuerySpec& q) { return q.query_id == query_id; });
  return it == queries.end() ? nullptr : &*it;
}

const BotIdentity* ExperimentPlan::find_bot(std::string_view bot_id) const {
  auto it = std::find_if(bots.begin(), bots.end(),
                         [&](const BotIdentity& b) { return b.bot_id == bot_id; });
  return it == bots.end() ? nullptr : &*it;
}

int ExperimentPlan::day_of(Timestamp t) const {
  return static_cast<int>(std::chrono::floor<std::chrono::days>(t - Timestamp{start_date}).count()) + 1;
}

std::vector<BotIdentity> make_twin_bots(std::span<const GeoLocation> geolocations) {
  std::vector<BotIdentity> bots;
  bots.reserve(geolocations.size() * 2);
  for (const auto& g : geolocations) {
    bots.push_back({g.location_id + "-treatment", g.location_id, TwinRole::Treatment});
    bots.push_back({g.location_id + "-control", g.location_id, TwinRole::Control});
  }
  return bots;
}

namespace {

ErrorKind summary_kind(const std::vector<PlanViolation>& violations) {
  for (auto kind : {ErrorKind::MissingTwin, ErrorKind::EmptyDimension}) {
    if (std::any_of(violations.begin(), violations.end(),
                    [kind](const PlanViolation& v) { return v.kind == kind; })) {
      return kind;
    }
  }
  return ErrorKind::InvalidPlan;
}

std::string describe(const std::vector<PlanViolation>& violations) {
  std::string out = "invalid experiment plan:";
  for (const auto& v : violations) {
    out += fmt::format(" [{}] {}: {};", to_string(v.kind), v.field, v.rule);
  }
  return out;
}

}  // namespace

PlanError::PlanError(std::vector<PlanViolation> violations)
    : AuditError(summary_kind(violations), describe(violations)),
      violations_(std::move(violations)) {}

std::vector<PlanViolation> check_plan(const ExperimentPlan& plan) {
  std::vector<PlanViolation> out;
  auto fail = [&out](ErrorKind kind, std::string field, std::string rule) {
    out.push_back({kind, std::move(field), std::move(rule)});
  };

  if (plan.geolocations.empty()) fail(ErrorKind::EmptyDimension, "geolocations", "must be non-empty");
  if (plan.queries.empty()) fail(ErrorKind::EmptyDimension, "queries", "must be non-empty");
  if (plan.filters.empty()) fail(ErrorKind::EmptyDimension, "filters", "must be non-empty");
  if (plan.days < 1) fail(ErrorKind::EmptyDimension, "days", "must be >= 1");
  if (plan.batch_times.empty()) fail(ErrorKind::EmptyDimension, "batch_times", "must be non-empty");
  if (plan.top_n_extract < 1 || plan.top_n_extract > kMaxRank) {
    fail(ErrorKind::InvalidPlan, "top_n_extract", fmt::format("must be in [1, {}]", kMaxRank));
  }

  std::unordered_set<std::string> location_ids;
  for (const auto& g : plan.geolocations) {
    if (!is_safe_id(g.location_id)) {
      fail(ErrorKind::InvalidPlan, "geolocations.location_id",
           fmt::format("'{}' must be non-empty without tabs, commas or newlines", g.location_id));
    } else if (!location_ids.insert(g.location_id).second) {
      fail(ErrorKind::InvalidPlan, "geolocations.location_id",
           fmt::format("'{}' is not unique", g.location_id));
    }
    if (g.country_code.size() != 2 || !std::all_of(g.country_code.begin(), g.country_code.end(),
                                                    [](char c) { return c >= 'A' && c <= 'Z'; })) {
      fail(ErrorKind::InvalidPlan, "geolocations.country_code",
           fmt::format("'{}' at '{}' must be a 2-letter upper-case code", g.country_code,
                       g.location_id));
    }
  }

  std::unordered_set<std::string> bot_ids;
  for (const auto& b : plan.bots) {
    if (!is_safe_id(b.bot_id)) {
      fail(ErrorKind::InvalidPlan, "bots.bot_id", fmt::format("'{}' is not a valid id", b.bot_id));
    } else if (!bot_ids.insert(b.bot_id).second) {
      fail(ErrorKind::InvalidPlan, "bots.bot_id", fmt::format("'{}' is not unique", b.bot_id));
    }
    if (!location_ids.contains(b.location_id)) {
      fail(ErrorKind::InvalidPlan, "bots.location_id",
           fmt::format("bot '{}' references unknown location '{}'", b.bot_id, b.location_id));
    }
  }
  for (const auto& g : plan.geolocations) {
    int treatment = 0;
    int control = 0;
    for (const auto& b : plan.bots) {
      if (b.location_id != g.location_id) continue;
      (b.role == TwinRole::Treatment ? treatment : control)++;
    }
    if (treatment != 1 || control != 1) {
      fail(ErrorKind::MissingTwin, "bots",
           fmt::format("location '{}' has {} treatment and {} control bot(s); expected 1 and 1",
                       g.location_id, treatment, control));
    }
  }

  std::unordered_set<std::string> query_ids;
  for (const auto& q : plan.queries) {
    if (!is_safe_id(q.query_id)) {
      fail(ErrorKind::InvalidPlan, "queries.query_id", fmt::format("'{}' is not a valid id", q.query_id));
    } else if (!query_ids.insert(q.query_id).second) {
      fail(ErrorKind::InvalidPlan, "queries.query_id", fmt::format("'{}' is not unique", q.query_id));
    }
    if (q.raw_text.find_first_not_of(" \t") == std::string::npos) {
      fail(ErrorKind::InvalidPlan, "queries.raw_text",
           fmt::format("query '{}' has empty raw text", q.query_id));
    }
    if (q.formatted_text.empty()) {
      fail(ErrorKind::InvalidPlan, "queries.formatted_text",
           fmt::format("query '{}' has not been formatted", q.query_id));
    }
  }

  std::set<SearchFilter> filters(plan.filters.begin(), plan.filters.end());
  if (filters.size() != plan.filters.size()) {
    fail(ErrorKind::InvalidPlan, "filters", "must not repeat a filter");
  }

  for (std::size_t i = 0; i < plan.batch_times.size(); ++i) {
    const auto t = plan.batch_times[i];
    if (t < seconds{0} || t >= days{1}) {
      fail(ErrorKind::InvalidPlan, "batch_times", "must lie within one UTC day");
    }
    if (i > 0 && t <= plan.batch_times[i - 1]) {
      fail(ErrorKind::InvalidPlan, "batch_times", "must be strictly increasing");
    }
  }
  if (!plan.batch_times.empty() && plan.batch_times.size() > plan.queries.size() &&
      !plan.queries.empty()) {
    fail(ErrorKind::InvalidPlan, "batch_times", "more batches than queries");
  }
  return out;
}

ValidatedPlan validate_plan(ExperimentPlan plan) {
  auto violations = check_plan(plan);
  if (!violations.empty()) throw PlanError(std::move(violations));
  return ValidatedPlan(std::move(plan));
}

DedupResult dedupe_serp(std::vector<std::string> ids) {
  DedupResult out;
  out.ids.reserve(ids.size());
  std::unordered_set<std::string> seen;
  for (auto& id : ids) {
    if (seen.insert(id).second) {
      out.ids.push_back(std::move(id));
    } else {
      out.dropped.push_back(std::move(id));
    }
  }
  return out;
}

}  // namespace serp_audit
