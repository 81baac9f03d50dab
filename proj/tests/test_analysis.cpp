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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include "serp_audit/analysis.hpp"
#include "serp_audit/io.hpp"
#include "serp_audit/metrics.hpp"
#include "serp_audit/simulator.hpp"
#include "serp_audit/stats.hpp"
#include "support.hpp"

using namespace serp_audit;
using test_support::small_plan;
using test_support::thrown_kind;

namespace {

std::string video_id_for(const BotIdentity& bot, const QuerySpec& q, SearchFilter f, int day, int r) {
  return bot.bot_id + "/" + q.query_id + "/" + std::string(to_string(f)) + "/" +
         std::to_string(day) + "/" + std::to_string(r);
}

using LabelFn = std::function<AnnotationLabel(const BotIdentity&, const QuerySpec&, SearchFilter,
                                              int day, int rank)>;

// A log where every (bot, query, filter, day) SERP holds `depth` distinct
// videos whose labels come from `label_of`.
std::pair<std::vector<SerpRecord>, LabelMap> hand_log(const ExperimentPlan& plan, int depth,
                                                     const LabelFn& label_of) {
  std::vector<SerpRecord> records;
  LabelMap labels;
  for (int day = 1; day <= plan.days; ++day) {
    for (const auto batch : plan.batch_times) {
      const Timestamp t = plan.start_date + std::chrono::days{day - 1} + batch;
      for (const auto& bot : plan.bots) {
        const auto* loc = plan.find_location(bot.location_id);
        for (const auto& q : plan.queries) {
          for (auto f : plan.filters) {
            for (int r = 1; r <= depth; ++r) {
              const auto id = video_id_for(bot, q, f, day, r) + "@" + std::to_string(batch.count());
              labels[id] = label_of(bot, q, f, day, r);
              records.push_back({t, bot.bot_id, bot.role, bot.location_id, loc->country_code,
                                 q.query_id, f, r, id, day});
            }
          }
        }
      }
    }
  }
  return {records, labels};
}

Dataset dataset_of(const ExperimentPlan& plan, int depth, const LabelFn& label_of,
                   std::set<std::pair<std::string, int>> exclusions = {}) {
  auto [records, labels] = hand_log(plan, depth, label_of);
  std::map<std::string, std::string> topics;
  for (const auto& q : plan.queries) topics[q.query_id] = q.topic;
  return build_dataset(std::move(records), std::move(labels), std::move(exclusions), topics);
}

AnnotationLabel by_country(const BotIdentity& bot, AnnotationLabel za, AnnotationLabel us) {
  return bot.location_id.starts_with("za") ? za : us;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("serp-audit-analysis-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Dataset simulated(const Scenario& scenario) {
  const auto out = simulate(scenario);
  std::map<std::string, std::string> topics;
  for (const auto& q : scenario.plan.queries) topics[q.query_id] = q.topic;
  return build_dataset(out.run.log, out.catalog.labels(), out.run.report.exclusions, topics);
}

}  // namespace

TEST_CASE("ingest: labels must cover the log") {
  const auto dir = temp_dir("ingest");
  const auto plan = small_plan();
  auto [records, labels] =
      hand_log(plan, 3, [](auto&&...) { return AnnotationLabel::Neutral; });
  write_serp_log(dir / "log.tsv", records);
  write_labels(dir / "labels.csv", labels);
  const auto data = ingest(dir / "log.tsv", dir / "labels.csv");
  CHECK(data.serps.size() == plan.bots.size() * plan.queries.size() * 2);
  CHECK(data.warnings.empty());

  labels.erase(records.front().video_id);
  write_labels(dir / "labels.csv", labels);
  try {
    ingest(dir / "log.tsv", dir / "labels.csv");
    FAIL("expected UnlabeledVideos");
  } catch (const UnlabeledVideosError& e) {
    CHECK(e.kind() == ErrorKind::UnlabeledVideos);
    CHECK(e.count() == 1);
  }

  std::ofstream(dir / "labels.csv") << "video_id,label_code\nv1,7\n";
  CHECK(thrown_kind([&] { ingest(dir / "log.tsv", dir / "labels.csv"); }) ==
        ErrorKind::SchemaViolation);
}

TEST_CASE("dataset construction checks ranks and drops duplicate ids") {
  const auto plan = small_plan(1, 1, 1);
  auto [records, labels] = hand_log(plan, 4, [](auto&&...) { return AnnotationLabel::Neutral; });

  auto gap = records;
  gap[1].rank = 3;
  CHECK(thrown_kind([&] { build_dataset(gap, labels); }) == ErrorKind::SchemaViolation);

  auto dup = records;
  dup[1].video_id = dup[0].video_id;
  const auto data = build_dataset(dup, labels);
  const auto it = std::find_if(data.serps.begin(), data.serps.end(),
                               [&](const Serp& s) { return s.bot_id == dup[0].bot_id; });
  REQUIRE(it != data.serps.end());
  CHECK(it->ids.size() == 3);
  CHECK_FALSE(data.warnings.empty());
}

TEST_CASE("aggregation: daily means per geolocation") {
  // Top-10 list with Supporting at ranks 1-5 and Neutral below: (10+9+8+7+6)/55.
  const auto plan = small_plan(1, 2, 3);
  const auto data = dataset_of(plan, 10, [](const auto&, const auto&, auto, int, int r) {
    return r <= 5 ? AnnotationLabel::Supporting : AnnotationLabel::Neutral;
  });
  const auto rows = aggregate(data, {});
  CHECK(rows.size() == 2u * 3u);
  for (const auto& row : rows) {
    CHECK(row.mean_bias == doctest::Approx(40.0 / 55.0));
    CHECK(row.n_serps == 2u * 2u);
  }

  const auto half = dataset_of(plan, 10, [](const auto& bot, const auto&, auto, int, int) {
    return bot.role == TwinRole::Treatment ? AnnotationLabel::Supporting
                                                 : AnnotationLabel::Neutral;
  });
  for (const auto& row : aggregate(half, {})) CHECK(row.mean_bias == 0.5);
  Scope treatment;
  treatment.treatment_only = true;
  for (const auto& row : aggregate(half, treatment)) CHECK(row.mean_bias == 1.0);

  Scope none;
  none.queries = {"missing"};
  CHECK(thrown_kind([&] { aggregate(data, none); }) == ErrorKind::EmptyScope);
}

TEST_CASE("aggregation of the audit design gives 30 rows per country") {
  auto plan = builtin_plan();
  plan.queries.resize(2);
  plan.filters = {SearchFilter::Relevance};
  plan.top_n_extract = 10;
  const auto data = dataset_of(plan, 10, [](auto&&...) { return AnnotationLabel::Neutral; });
  const auto rows = aggregate(data, {});
  const auto samples = country_samples(rows);
  CHECK(samples.at("US").size() == 30);
  CHECK(samples.at("ZA").size() == 30);

  Scope separate;
  separate.batches = BatchMode::Separate;
  CHECK(aggregate(data, separate).size() == 120);
}

TEST_CASE("exclusions remove every SERP of the (query, day)") {
  const auto plan = small_plan(1, 2, 2);
  auto [records, labels] = hand_log(plan, 5, [](auto&&...) { return AnnotationLabel::Neutral; });
  const auto reported = build_dataset(records, labels, {{"q1", 2}});
  CHECK(reported.exclusions == std::set<std::pair<std::string, int>>{{"q1", 2}});
  for (const auto& s : reported.serps) CHECK_FALSE((s.query_id == "q1" && s.day == 2));
  CHECK(reported.serps.size() == 4u * 3u);

  // A missing SERP in the log is detected without a report.
  std::erase_if(records, [](const SerpRecord& r) {
    return r.bot_id == "za-0-control" && r.query_id == "q0" && r.experiment_day == 1;
  });
  const auto detected = build_dataset(records, labels);
  CHECK(detected.exclusions == std::set<std::pair<std::string, int>>{{"q0", 1}});
  CHECK_FALSE(detected.warnings.empty());
}

TEST_CASE("a singleton scope is the mean of its SERP scores") {
  const auto plan = small_plan(1, 1, 1);
  const auto data = dataset_of(plan, 10, [](const auto& bot, const auto&, auto, int, int r) {
    if (bot.bot_id == "us-0-treatment") return r % 2 ? AnnotationLabel::Supporting : AnnotationLabel::Opposing;
    return r == 1 ? AnnotationLabel::Origins : AnnotationLabel::Opposing;
  });
  for (auto policy : kAllPolicies) {
    Scope scope;
    scope.policy = policy;
    for (const auto& row : aggregate(data, scope)) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& s : data.serps) {
        if (s.location_id != row.location_id) continue;
        sum += bias_score_topn(s.ids, data.labels, 10, policy).value;
        ++n;
      }
      CHECK(row.n_serps == n);
      CHECK(row.mean_bias == doctest::Approx(sum / static_cast<double>(n)));
    }
  }
}

TEST_CASE("country comparison detects a planted direction at every N") {
  const auto plan = small_plan(3, 4, 10);
  const auto data = dataset_of(plan, 50, [](const auto& bot, const auto& q, auto, int day, int r) {
    // Location-specific noise keeps the daily means distinct.
    const int salt = static_cast<int>(std::hash<std::string>{}(bot.bot_id + q.query_id) % 7) + day;
    if ((r + salt) % 5 == 0) return AnnotationLabel::Opposing;
    return (r + salt) % 3 == 0 ? by_country(bot, AnnotationLabel::Supporting, AnnotationLabel::Neutral)
                               : AnnotationLabel::Neutral;
  });
  const auto report = compare_countries(data, {});
  REQUIRE(report.cells.size() == 5);
  for (const auto& cell : report.cells) {
    REQUIRE(cell.test.has_value());
    CHECK(cell.group_a == "US");
    CHECK(cell.group_b == "ZA");
    CHECK(cell.test->direction == Direction::BGreater);
    CHECK(cell.test->p_value < 0.001);
    CHECK(direction_label(cell) == "ZA > US");
    CHECK(cell.mean_b > cell.mean_a);
  }
}

TEST_CASE("identical countries give a non-significant comparison") {
  const auto plan = small_plan(2, 2, 5);
  // Both countries see the same day-dependent lists.
  const auto data = dataset_of(plan, 10, [](const auto&, const auto&, auto, int day, int r) {
    return r <= day ? AnnotationLabel::Supporting : AnnotationLabel::Neutral;
  });
  const auto report = compare_countries(data, {}, std::vector<int>{10});
  REQUIRE(report.cells.size() == 1);
  const auto& cell = report.cells[0];
  REQUIRE(cell.test.has_value());
  CHECK(cell.test->p_value == doctest::Approx(1.0));
  CHECK(cell.test->direction == Direction::None);
  CHECK(direction_label(cell) == "US = ZA");

  // Constant scores cannot be ranked; the cell records why.
  const auto constant = dataset_of(plan, 10, [](auto&&...) { return AnnotationLabel::Supporting; });
  const auto degenerate = compare_countries(constant, {}, std::vector<int>{10}).cells.at(0);
  CHECK_FALSE(degenerate.test.has_value());
  CHECK_FALSE(degenerate.error.empty());
  CHECK(direction_label(degenerate) == "n/a");

  auto one_country = plan;
  std::erase_if(one_country.geolocations, [](const auto& g) { return g.country_code == "ZA"; });
  one_country.bots = make_twin_bots(one_country.geolocations);
  const auto us_only = dataset_of(one_country, 10, [](auto&&...) { return AnnotationLabel::Neutral; });
  CHECK(thrown_kind([&] { compare_countries(us_only, {}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("within-country comparison runs the post hoc only when significant") {
  const auto plan = small_plan(3, 2, 8);
  const auto shifted = dataset_of(plan, 10, [](const auto& bot, const auto&, auto, int day, int r) {
    const bool hot = bot.location_id == "za-2";
    return (r <= (hot ? 6 : 2) + day % 2) ? AnnotationLabel::Supporting : AnnotationLabel::Neutral;
  });
  const auto report = compare_within_country(shifted, "ZA", {});
  CHECK(report.locations == std::vector<std::string>{"za-0", "za-1", "za-2"});
  CHECK(report.test.p_value < 0.05);
  CHECK(report.test.posthoc.size() == 3);
  CHECK(report.location_means[2] > report.location_means[0]);

  const auto flat = dataset_of(plan, 10, [](const auto&, const auto&, auto, int day, int r) {
    return r <= day ? AnnotationLabel::Opposing : AnnotationLabel::Neutral;
  });
  const auto none = compare_within_country(flat, "US", {});
  CHECK(none.test.p_value >= 0.05);
  CHECK(none.test.posthoc.empty());

  auto single = small_plan(1, 2, 3);
  const auto one = dataset_of(single, 10, [](auto&&...) { return AnnotationLabel::Neutral; });
  CHECK(thrown_kind([&] { compare_within_country(one, "US", {}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("per-filter comparison isolates a filter-specific shift") {
  const auto plan = small_plan(2, 2, 6, {SearchFilter::Relevance, SearchFilter::Rating});
  const auto data = dataset_of(plan, 10, [](const auto& bot, const auto&, SearchFilter f, int day, int r) {
    if (f == SearchFilter::Rating && bot.location_id.starts_with("za") && r <= 4 + day % 3) {
      return AnnotationLabel::Supporting;
    }
    return r <= 2 + day % 3 ? AnnotationLabel::Opposing : AnnotationLabel::Neutral;
  });
  const auto report = compare_by_dimension(data, Dimension::Filter, {});
  REQUIRE(report.cells.size() == 2);
  for (const auto& cell : report.cells) {
    REQUIRE(cell.test.has_value());
    if (cell.label == "rating") {
      CHECK(cell.test->p_value < 0.05);
      CHECK(direction_label(cell) == "ZA > US");
    } else {
      CHECK(cell.test->p_value >= 0.05);
    }
  }

  const auto neutral = dataset_of(plan, 10, [](auto&&...) { return AnnotationLabel::Neutral; });
  const auto topics = compare_by_dimension(neutral, Dimension::Topic, {});
  REQUIRE(topics.cells.size() == 2);
  for (const auto& cell : topics.cells) {
    CHECK(cell.mean_a == 0.0);
    CHECK(cell.mean_b == 0.0);
  }
}

TEST_CASE("query ranking") {
  const auto plan = small_plan(1, 3, 2, {SearchFilter::Relevance, SearchFilter::ViewCount});
  const auto data = dataset_of(plan, 10, [](const auto&, const auto& q, SearchFilter f, int, int) {
    if (q.query_id == "q2" && f == SearchFilter::ViewCount) return AnnotationLabel::Supporting;
    return AnnotationLabel::Neutral;
  });
  const auto ranked = rank_query_filters(data, {}, 0);
  REQUIRE(ranked.size() == 6);
  CHECK(ranked[0].query_id == "q2");
  CHECK(ranked[0].filter == SearchFilter::ViewCount);
  CHECK(ranked[0].mean_bias == 1.0);
  // The tied rest are in (query, filter name) order.
  CHECK(ranked[1].query_id == "q0");
  CHECK(ranked[1].filter == SearchFilter::Relevance);
  CHECK(ranked[2].query_id == "q0");
  CHECK(ranked[2].filter == SearchFilter::ViewCount);
  CHECK(rank_query_filters(data, {}, 2).size() == 2);
}

TEST_CASE("temporal trend") {
  const auto plan = small_plan(1, 2, 10);
  const auto flat = dataset_of(plan, 10, [](auto&&...) { return AnnotationLabel::Opposing; });
  const auto points = temporal_trend(flat, {});
  CHECK(points.size() == 20);
  for (const auto& p : points) CHECK(p.mean_bias == -1.0);

  const auto shift = dataset_of(plan, 10, [](const auto& bot, const auto&, auto, int day, int) {
    return day >= 6 ? by_country(bot, AnnotationLabel::Supporting, AnnotationLabel::Neutral)
                    : AnnotationLabel::Neutral;
  });
  for (const auto& p : temporal_trend(shift, {})) {
    const double expected = p.country == "ZA" && p.day >= 6 ? 1.0 : 0.0;
    CHECK(p.mean_bias == expected);
  }
}

TEST_CASE("robustness: zero origins leaves all conditions identical") {
  Scenario scenario;
  scenario.plan = small_plan(3, 4, 10);
  scenario.plan.top_n_extract = 20;
  scenario.seed = 5;
  scenario.label_mix = LabelMix({0.3, 0.2, 0.3, 0.0, 0.2, 0.0, 0.0});
  scenario.noise.epsilon = 0.2;
  for (const auto& g : scenario.plan.geolocations) {
    if (g.country_code == "ZA") scenario.personalization.by_location[g.location_id] = {1.0, 0.3, 1, {}};
  }
  const auto data = simulated(scenario);
  const auto report = robustness_suite(data, {});
  REQUIRE(report.conditions.size() == 3);
  const auto& base = report.conditions[0].second.cells.at(0);
  for (const auto& [policy, r] : report.conditions) {
    const auto& cell = r.cells.at(0);
    REQUIRE(cell.test.has_value());
    CHECK(cell.test->statistic == base.test->statistic);
    CHECK(cell.test->p_value == base.test->p_value);
  }
}

TEST_CASE("robustness: planted origins separate the two cases") {
  // ZA results carry Origins at the top ranks; US results Neutral.
  const auto plan = small_plan(3, 2, 10);
  const auto data = dataset_of(plan, 10, [](const auto& bot, const auto& q, auto, int day, int r) {
    const int salt = (day + static_cast<int>(q.query_id.back())) % 3;
    if (r <= 3 + salt) return by_country(bot, AnnotationLabel::Origins, AnnotationLabel::Neutral);
    return r % 4 == salt ? AnnotationLabel::Opposing : AnnotationLabel::Neutral;
  });
  const auto report = robustness_suite(data, {});
  std::map<StancePolicy, ComparisonCell> cells;
  for (const auto& [policy, r] : report.conditions) cells.emplace(policy, r.cells.at(0));
  const auto& misinfo = cells.at(StancePolicy::OriginsAsMisinfo);
  const auto& excluded = cells.at(StancePolicy::ExcludeOrigins);
  REQUIRE(misinfo.test.has_value());
  CHECK(misinfo.test->direction == Direction::BGreater);
  CHECK(misinfo.test->p_value < 0.001);
  CHECK(misinfo.mean_b - misinfo.mean_a > excluded.mean_b - excluded.mean_a);
}

TEST_CASE("GBP measured from a simulated run recovers the planted value") {
  Scenario scenario;
  scenario.plan = small_plan(1, 20, 1);
  scenario.plan.top_n_extract = 50;
  scenario.seed = 31;
  const double p = swap_fraction_for_gbp(0.3, 50);
  scenario.personalization.by_location["us-0"] = {p, 0.0, 1, {}};
  scenario.personalization.by_location["za-0"] = {p, 0.0, 1, {}};
  const auto data = simulated(scenario);
  const auto scores = measure_gbp(data, "us-0", "za-0");
  REQUIRE(scores.size() == 20);
  double sum = 0.0;
  for (const auto& m : scores) sum += m.score.value;
  CHECK(std::abs(sum / 20.0 - 0.3) <= 0.03);
}

TEST_CASE("reports: stars follow p-values and output is byte-stable") {
  const auto plan = small_plan(2, 2, 6);
  const auto data = dataset_of(plan, 10, [](const auto& bot, const auto&, auto, int day, int r) {
    return r <= 2 + day % 3 ? by_country(bot, AnnotationLabel::Supporting, AnnotationLabel::Neutral)
                            : AnnotationLabel::Neutral;
  });
  const auto report = compare_countries(data, {});
  for (const auto& cell : report.cells) {
    REQUIRE(cell.test.has_value());
    const auto stars = std::string(significance_stars(cell.test->p_value));
    const double p = cell.test->p_value;
    CHECK(stars == (p < 0.001 ? "***" : p < 0.01 ? "**" : p < 0.05 ? "*" : ""));
  }
  for (auto format : {ReportFormat::Markdown, ReportFormat::Tsv, ReportFormat::Json}) {
    const auto a = render(report, format);
    const auto b = render(compare_countries(data, {}), format);
    CHECK(a == b);
    CHECK(a.find("top_n") != std::string::npos);
    CHECK(a.find("-0.000") == std::string::npos);
  }
  const auto json = nlohmann::json::parse(render(report, ReportFormat::Json));
  CHECK(json.is_object());
  CHECK(parse_report_format("md") == ReportFormat::Markdown);
  CHECK_FALSE(parse_report_format("xml").has_value());
}
