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

// Ingestion, per-(geolocation, day) aggregation, and the comparison
// analyses built on top of it. Everything here is read-only over a Dataset
// and deterministic: identical inputs give identical reports.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/metrics.hpp"
#include "serp_audit/model.hpp"
#include "serp_audit/stats.hpp"

namespace serp_audit {

// One collected result page.
struct Serp {
  Timestamp timestamp;
  std::string bot_id;
  TwinRole role = TwinRole::Treatment;
  std::string location_id;
  std::string country_code;
  std::string query_id;
  SearchFilter filter = SearchFilter::Relevance;
  int day = 1;
  std::vector<std::string> ids;  // rank order
};

struct Dataset {
  std::vector<Serp> serps;  // canonical order, excluded groups removed
  LabelMap labels;
  std::set<std::pair<std::string, int>> exclusions;  // (query_id, day)
  std::map<std::string, std::string> query_topics;   // query_id -> topic
  std::vector<std::string> warnings;
};

// Groups records into SERPs, checks ranks are unique and contiguous from 1
// (SchemaViolation otherwise), drops duplicate ids within a SERP with a
// warning, and requires every id to be labeled (UnlabeledVideos). Any
// (query, day) whose SERP count falls short of |bots| x |filters| is added
// to the exclusions alongside `exclusions`; all excluded groups are then
// removed.
Dataset build_dataset(std::vector<SerpRecord> records, LabelMap labels,
                      std::set<std::pair<std::string, int>> exclusions = {},
                      std::map<std::string, std::string> query_topics = {});

// File front end for build_dataset. `run_report` (optional) supplies the
// collector's exclusion list; `plan` (optional) supplies query topics, which
// otherwise fall back to the built-in audit design.
Dataset ingest(const std::filesystem::path& serp_log, const std::filesystem::path& labels,
               const std::optional<std::filesystem::path>& run_report = std::nullopt,
               const std::optional<std::filesystem::path>& plan = std::nullopt);

enum class BatchMode { Joint, Separate };

std::string_view to_string(BatchMode mode) noexcept;
std::optional<BatchMode> parse_batch_mode(std::string_view text) noexcept;

struct Scope {
  int top_n = 10;
  StancePolicy policy = StancePolicy::Default;
  std::set<SearchFilter> filters;  // empty means all
  std::set<std::string> queries;   // empty means all
  std::set<std::string> topics;    // empty means all
  bool treatment_only = false;
  BatchMode batches = BatchMode::Joint;

  bool includes(const Serp& serp, const Dataset& data) const;
};

// Scope parameters as (name, value) pairs for report headers.
std::vector<std::pair<std::string, std::string>> describe(const Scope& scope);

struct AggregatedScore {
  std::string location_id;
  std::string country_code;
  int day = 1;
  std::optional<std::chrono::seconds> time_of_day;  // set in Separate mode
  double mean_bias = 0.0;
  std::size_t n_serps = 0;
};

// Mean bias_score_topn per (geolocation, day), or per (geolocation, day,
// batch) in Separate mode. Rows are sorted by (country, location, day,
// time). Throws EmptyScope when nothing is in scope.
std::vector<AggregatedScore> aggregate(const Dataset& data, const Scope& scope);

// Country -> pooled row means, in row order.
std::map<std::string, std::vector<double>> country_samples(std::span<const AggregatedScore> rows);

// A two-group comparison cell. `test` is empty when the test could not be
// run, in which case `error` says why.
struct ComparisonCell {
  std::string label;
  std::string group_a;
  std::string group_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::optional<TestResult> test;
  std::string error;
};

// "B > A" style label from the mean ranks; "A = B" when they tie.
std::string direction_label(const ComparisonCell& cell);

enum class Dimension { TopNSweep, Country, WithinCountry, Topic, Filter };

std::string_view to_string(Dimension d) noexcept;

struct ComparisonReport {
  Dimension dimension = Dimension::Country;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<ComparisonCell> cells;
};

inline constexpr int kDefaultSweep[] = {10, 20, 30, 40, 50};

// Mann-Whitney between the two countries' samples at each N of `sweep`
// (scope.top_n is overridden per cell). Throws InvalidArgument unless the
// data holds exactly two countries.
ComparisonReport compare_countries(const Dataset& data, const Scope& scope,
                                   std::span<const int> sweep = kDefaultSweep);

// Per-value country comparison with the scope narrowed to one topic or one
// filter at a time; the cell means double as the heatmap.
ComparisonReport compare_by_dimension(const Dataset& data, Dimension dimension, const Scope& scope);

struct WithinCountryReport {
  std::string country;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::string> locations;
  std::vector<double> location_means;
  GroupTestResult test;
};

// Kruskal-Wallis across the country's geolocations; the Conover-Iman
// post hoc (Bonferroni) is attached only when p < 0.05. Throws
// InvalidArgument for fewer than two geolocations.
WithinCountryReport compare_within_country(const Dataset& data, const std::string& country,
                                           const Scope& scope);

struct QueryFilterScore {
  std::string query_id;
  SearchFilter filter = SearchFilter::Relevance;
  double mean_bias = 0.0;
  std::size_t n_serps = 0;
};

// Descending by mean bias, ties by (query_id, filter name). `limit` of 0
// keeps everything.
std::vector<QueryFilterScore> rank_query_filters(const Dataset& data, const Scope& scope,
                                                 std::size_t limit = 20);

struct TrendPoint {
  std::string country;
  int day = 1;
  double mean_bias = 0.0;
  std::size_t n_serps = 0;
};

// Mean over each country's in-scope SERPs per day, sorted by (country, day).
std::vector<TrendPoint> temporal_trend(const Dataset& data, const Scope& scope);

struct RobustnessReport {
  std::vector<std::pair<StancePolicy, ComparisonReport>> conditions;  // Default, Case 1, Case 2
};

// compare_countries at scope.top_n under each stance policy.
RobustnessReport robustness_suite(const Dataset& data, const Scope& scope);

struct GbpMeasurement {
  std::string query_id;
  SearchFilter filter = SearchFilter::Relevance;
  Timestamp timestamp;
  GbpScore score;
};

// GBP between two geolocations for every (query, filter, time) where both
// twin pairs are present, over the top `top_k` results.
std::vector<GbpMeasurement> measure_gbp(const Dataset& data, const std::string& location_x,
                                        const std::string& location_y,
                                        std::size_t top_k = kDefaultJaccardTopK);

// Rendering. Every format echoes the parameters first; numbers use fixed
// precision so the output is byte-stable.
enum class ReportFormat { Markdown, Tsv, Json };

std::optional<ReportFormat> parse_report_format(std::string_view text) noexcept;

std::string render(const ComparisonReport& report, ReportFormat format);
std::string render(const WithinCountryReport& report, ReportFormat format);
std::string render(std::span<const AggregatedScore> rows,
                   const std::vector<std::pair<std::string, std::string>>& parameters,
                   ReportFormat format);
std::string render(std::span<const QueryFilterScore> rows,
                   const std::vector<std::pair<std::string, std::string>>& parameters,
                   ReportFormat format);
std::string render(std::span<const TrendPoint> rows,
                   const std::vector<std::pair<std::string, std::string>>& parameters,
                   ReportFormat format);
std::string render(const RobustnessReport& report, ReportFormat format);

}  // namespace serp_audit
