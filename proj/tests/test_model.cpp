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

#include <sstream>

#include "serp_audit/collector.hpp"
#include "serp_audit/io.hpp"
#include "serp_audit/model.hpp"
#include "serp_audit/rng.hpp"
#include "support.hpp"

using namespace serp_audit;
using test_support::small_plan;
using test_support::thrown_kind;

TEST_CASE("the audit design validates") {
  const auto plan = builtin_plan();
  const auto validated = validate_plan(plan);
  CHECK(validated->geolocations.size() == 6);
  CHECK(validated->bots.size() == 12);
  CHECK(validated->queries.size() == 48);
  CHECK(validated->filters.size() == 4);
  CHECK(validated->days == 10);
  CHECK(validated->batch_times.size() == 2);
}

TEST_CASE("a lone bot at a geolocation is a missing twin") {
  auto plan = small_plan();
  plan.bots.pop_back();
  CHECK(thrown_kind([&] { validate_plan(plan); }) == ErrorKind::MissingTwin);
}

TEST_CASE("empty dimensions are reported as such") {
  auto no_filters = small_plan();
  no_filters.filters.clear();
  CHECK(thrown_kind([&] { validate_plan(no_filters); }) == ErrorKind::EmptyDimension);

  auto no_queries = small_plan();
  no_queries.queries.clear();
  CHECK(thrown_kind([&] { validate_plan(no_queries); }) == ErrorKind::EmptyDimension);

  auto no_days = small_plan();
  no_days.days = 0;
  CHECK(thrown_kind([&] { validate_plan(no_days); }) == ErrorKind::EmptyDimension);
}

TEST_CASE("every violation names a field and a rule") {
  auto plan = small_plan();
  plan.top_n_extract = 0;
  plan.geolocations[1].country_code = "za";
  plan.filters.push_back(plan.filters.front());
  const auto violations = check_plan(plan);
  REQUIRE(violations.size() >= 3);
  for (const auto& v : violations) {
    CHECK_FALSE(v.field.empty());
    CHECK_FALSE(v.rule.empty());
  }
  try {
    validate_plan(plan);
    FAIL("expected PlanError");
  } catch (const PlanError& e) {
    CHECK(e.kind() == ErrorKind::InvalidPlan);
    CHECK(e.violations().size() == violations.size());
  }
}

TEST_CASE("a validated plan has exactly two bots per geolocation") {
  for (int per_country = 1; per_country <= 4; ++per_country) {
    const auto v = validate_plan(small_plan(per_country));
    CHECK(v->bots.size() == 2 * v->geolocations.size());
  }
}

TEST_CASE("plans survive a JSON round trip field by field") {
  for (const auto& plan : {builtin_plan(42), small_plan(2, 5, 3)}) {
    const auto validated = validate_plan(plan);
    const auto back = plan_from_json(nlohmann::json::parse(plan_to_json(validated.plan()).dump()));
    CHECK(back == validated.plan());
  }
}

TEST_CASE("timestamps, times of day and dates round trip") {
  const auto t = parse_timestamp("2023-02-08T12:00:00Z");
  CHECK(format_timestamp(t) == "2023-02-08T12:00:00Z");
  CHECK(format_time_of_day(parse_time_of_day("12:30")) == "12:30");
  CHECK(format_date(parse_date("2023-01-30")) == "2023-01-30");
  CHECK(thrown_kind([] { parse_timestamp("2023-02-08 12:00"); }) == ErrorKind::InvalidArgument);

  const auto plan = builtin_plan();
  CHECK(plan.day_of(parse_timestamp("2023-01-30T00:00:00Z")) == 1);
  CHECK(plan.day_of(parse_timestamp("2023-02-08T12:00:00Z")) == 10);
}

TEST_CASE("duplicate ids in a SERP keep their first occurrence") {
  const auto r = dedupe_serp({"a", "b", "a", "c", "b"});
  CHECK(r.ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(r.dropped == std::vector<std::string>{"a", "b"});
}

TEST_CASE("label codes match the seven-point scale") {
  CHECK(code(AnnotationLabel::Opposing) == -1);
  CHECK(code(AnnotationLabel::Inaccessible) == 5);
  for (auto l : kAllLabels) {
    CHECK(label_from_code(code(l)) == l);
    CHECK(parse_label_name(to_string(l)) == l);
  }
  CHECK_FALSE(label_from_code(6).has_value());
  CHECK(parse_policy("case1") == StancePolicy::ExcludeOrigins);
  CHECK(parse_policy("case2") == StancePolicy::OriginsAsMisinfo);
}

TEST_CASE("derived seeds separate tags and indices") {
  CHECK(derive_seed(1, "catalog") != derive_seed(1, "search"));
  CHECK(derive_seed(1, "catalog") != derive_seed(2, "catalog"));
  CHECK(derive_seed(1, {"a", "b"}) == derive_seed(derive_seed(1, "a"), "b"));
  CHECK(derive_seed(9, std::uint64_t{0}) != derive_seed(9, std::uint64_t{1}));

  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.below(17) == b.below(17));
  Rng u(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.unit();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

// ---- file formats ---------------------------------------------------------

namespace {

std::vector<SerpRecord> sample_records() {
  const auto t = parse_timestamp("2023-01-30T00:00:00Z");
  return {
      {t, "us-0-treatment", TwinRole::Treatment, "us-0", "US", "q0", SearchFilter::Relevance, 1, "v1", 1},
      {t, "us-0-treatment", TwinRole::Treatment, "us-0", "US", "q0", SearchFilter::Relevance, 2, "v2", 1},
      {t, "za-0-control", TwinRole::Control, "za-0", "ZA", "q0", SearchFilter::ViewCount, 1, "v3", 1},
  };
}

}  // namespace

TEST_CASE("the SERP log round trips byte for byte") {
  std::ostringstream first;
  write_serp_log(first, sample_records());
  CHECK(first.str().rfind(std::string(kSerpLogHeader) + "\n", 0) == 0);
  std::istringstream in(first.str());
  const auto back = read_serp_log(in);
  CHECK(back == sample_records());
  std::ostringstream second;
  write_serp_log(second, back);
  CHECK(second.str() == first.str());
}

TEST_CASE("malformed log rows are rejected with their line number") {
  std::ostringstream out;
  write_serp_log(out, sample_records());
  auto text = out.str();
  const auto pos = text.find("\t2\tv2");
  text.replace(pos, 2, "\t51");
  std::istringstream in(text);
  try {
    read_serp_log(in);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.kind() == ErrorKind::SchemaViolation);
    CHECK(e.line() == 3);
  }
  std::istringstream wrong_header("time\tbot\n");
  CHECK(thrown_kind([&] { read_serp_log(wrong_header); }) == ErrorKind::SchemaViolation);
}

TEST_CASE("labels round trip and reject out-of-range codes") {
  const LabelMap labels{{"b", AnnotationLabel::Supporting}, {"a", AnnotationLabel::Opposing}};
  std::ostringstream out;
  write_labels(out, labels);
  CHECK(out.str() == "video_id,label_code\na,-1\nb,1\n");
  std::istringstream in(out.str());
  CHECK(read_labels(in) == labels);

  std::istringstream bad("video_id,label_code\na,1\nb,7\n");
  try {
    read_labels(bad);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream conflict("video_id,label_code\na,1\na,0\n");
  CHECK(thrown_kind([&] { read_labels(conflict); }) == ErrorKind::SchemaViolation);
}
