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

// End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per
// criterion and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "serp_audit/analysis.hpp"
#include "serp_audit/collector.hpp"
#include "serp_audit/metrics.hpp"
#include "serp_audit/rng.hpp"
#include "serp_audit/simulator.hpp"
#include "serp_audit/stats.hpp"

using namespace serp_audit;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
  Outcome outcome = Outcome::Fail;
  std::string detail;
};

Verdict pass_if(bool ok, std::string detail) {
  return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)};
}

// ---- 1. bias score ---------------------------------------------------------

Verdict bias_formula() {
  const auto score = [](std::initializer_list<int> v) {
    std::vector<Stance> s;
    for (int x : v) s.push_back(static_cast<Stance>(x));
    return bias_score(s);
  };
  bool ok = score({1, 1, 1, 1, 1, 1, 1, 1, 1, 1}).value == 1.0;
  ok = ok && score({-1, -1, -1, -1, -1}).value == -1.0;
  const auto third = score({1, 0, -1});
  ok = ok && third.numerator * 3 == third.denominator && third.value == 1.0 / 3.0;

  // Independent oracle: weight w counted w times by accumulation.
  Rng rng(derive_seed(1, "acceptance-bias"));
  int mismatches = 0;
  for (int i = 0; i < 10'000; ++i) {
    const std::size_t n = 1 + rng.below(100);
    std::vector<Stance> list(n);
    std::int64_t num = 0;
    std::int64_t den = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const int x = static_cast<int>(rng.below(3)) - 1;
      list[r] = static_cast<Stance>(x);
      for (std::size_t w = r; w < n; ++w) {
        num += x;
        ++den;
      }
    }
    const auto got = bias_score(list);
    const double expected = static_cast<double>(num) / static_cast<double>(den);
    if (got.numerator != num || got.denominator != den || got.value != expected) ++mismatches;
  }
  return pass_if(ok && mismatches == 0,
                 fmt::format("extremes and 1/3 exact; {} mismatches in 10000 oracle lists", mismatches));
}

// ---- 2. schedule and collection counts -------------------------------------

Verdict schedule_counts() {
  const auto start = std::chrono::steady_clock::now();
  const auto plan = builtin_plan(2);
  const auto schedule = build_schedule(validate_plan(plan));
  Scenario scenario;
  scenario.plan = plan;
  scenario.seed = 2;
  const auto out = simulate(scenario);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = schedule.entries.size() == 23'040 && out.run.report.serps_collected == 23'040 &&
                  out.run.report.status == RunStatus::Complete && seconds <= 60.0;
  return pass_if(ok, fmt::format("{} scheduled, {} SERPs collected in {:.1f} s",
                                 schedule.entries.size(), out.run.report.serps_collected, seconds));
}

// ---- 3. GBP recovery --------------------------------------------------------

ExperimentPlan two_site_plan(std::size_t queries) {
  ExperimentPlan plan = builtin_plan();
  plan.geolocations = {{"site-x", "US", "Houston"}, {"site-y", "ZA", "Durban"}};
  plan.bots = make_twin_bots(plan.geolocations);
  plan.queries.clear();
  for (std::size_t q = 0; q < queries; ++q) {
    const auto raw = fmt::format("synthetic query {}", q);
    plan.queries.push_back({fmt::format("g{:02d}", q), "Synthetic", raw, format_query(raw)});
  }
  plan.filters = {SearchFilter::Relevance};
  plan.days = 1;
  plan.batch_times = {std::chrono::hours{0}};
  return plan;
}

double mean_gbp(double swap, double epsilon, std::uint64_t seed) {
  Scenario scenario;
  scenario.plan = two_site_plan(50);
  scenario.seed = seed;
  scenario.noise.epsilon = epsilon;
  for (const auto& g : scenario.plan.geolocations) {
    scenario.personalization.by_location[g.location_id].swap_fraction = swap;
  }
  const auto out = simulate(scenario);
  const auto data = build_dataset(out.run.log, out.catalog.labels(), out.run.report.exclusions);
  const auto scores = measure_gbp(data, "site-x", "site-y");
  double sum = 0.0;
  for (const auto& m : scores) sum += m.score.value;
  return scores.empty() ? NAN : sum / static_cast<double>(scores.size());
}

Verdict gbp_recovery() {
  bool ok = true;
  std::string detail;
  for (double d : {0.1, 0.3, 0.5}) {
    const double got = mean_gbp(swap_fraction_for_gbp(d, 50), 0.0, 30);
    ok = ok && std::abs(got - d) <= 0.03;
    detail += fmt::format("d={:.1f}->{:.3f} ", d, got);
  }
  for (double eps : {0.1, 0.3}) {
    const double got = mean_gbp(0.0, eps, 31);
    ok = ok && std::abs(got) <= 0.03;
    detail += fmt::format("eps={:.1f}->{:.3f} ", eps, got);
  }
  detail.pop_back();
  return pass_if(ok, detail);
}

// ---- 4. statistics against the permutation oracle --------------------------

Verdict statistics_oracle() {
  Rng rng(derive_seed(4, "acceptance-stats"));
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(9 + rng.below(2));
    std::vector<double> b(9 + rng.below(2));
    const double shift = rng.unit() * 2.0;
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal() + shift;
    const double approx = mann_whitney(a, b).p_value;
    const double exact = permutation_oracle(a, b, {PermutationMode::Exhaustive}).p_value;
    worst = std::max(worst, std::abs(approx - exact));
  }

  int violations = 0;
  for (int i = 0; i < 1'000; ++i) {
    std::vector<double> a(2 + rng.below(30));
    std::vector<double> b(2 + rng.below(30));
    // Coarse values so ties occur.
    for (auto& x : a) x = std::round(rng.normal() * 4.0) / 4.0;
    for (auto& x : b) x = std::round((rng.normal() + rng.unit()) * 4.0) / 4.0;
    a[0] = 0.0;
    b[0] = 1.0;
    const auto ab = mann_whitney(a, b);
    const auto ba = mann_whitney(b, a);
    const bool mirrored =
        ab.statistic == ba.statistic && std::abs(ab.p_value - ba.p_value) <= 1e-12 &&
        ((ab.direction == Direction::AGreater && ba.direction == Direction::BGreater) ||
         (ab.direction == Direction::BGreater && ba.direction == Direction::AGreater) ||
         (ab.direction == Direction::None && ba.direction == Direction::None));
    auto ea = a;
    auto eb = b;
    for (auto& x : ea) x = std::exp(x);
    for (auto& x : eb) x = std::exp(x);
    const auto transformed = mann_whitney(ea, eb);
    const bool invariant = transformed.statistic == ab.statistic &&
                           std::abs(transformed.p_value - ab.p_value) <= 1e-12 &&
                           transformed.direction == ab.direction;
    if (!mirrored || !invariant) ++violations;
  }
  return pass_if(worst <= 0.01 && violations == 0,
                 fmt::format("max |p_approx - p_exact| = {:.4f} over 200 pairs; {} invariant "
                             "violations in 1000 cases",
                             worst, violations));
}

// ---- 5. direction detection ------------------------------------------------

Dataset run_dataset(const Scenario& scenario) {
  const auto out = simulate(scenario);
  std::map<std::string, std::string> topics;
  for (const auto& q : scenario.plan.queries) topics[q.query_id] = q.topic;
  return build_dataset(out.run.log, out.catalog.labels(), out.run.report.exclusions, topics);
}

// Audit design with the base mix at 25% Supporting. Only the top 10 are
// analysed, so extraction stops there.
Scenario detection_scenario(std::uint64_t seed) {
  Scenario s;
  s.plan = builtin_plan(seed);
  s.plan.top_n_extract = 10;
  s.seed = seed;
  s.label_mix = LabelMix({0.30, 0.30, 0.25, 0.0, 0.10, 0.03, 0.02});
  s.noise.epsilon = 0.1;
  return s;
}

Verdict direction_detection() {
  constexpr int kSeeds = 50;
  const int sweep[] = {10};
  int detected = 0;
  int false_flags = 0;
  for (int i = 0; i < kSeeds; ++i) {
    const auto seed = derive_seed(5, static_cast<std::uint64_t>(i));

    // Every location draws from its own sub-pool; ZA's mix is tilted from
    // 25% to 45% Supporting.
    auto planted = detection_scenario(seed);
    const double tilt = (0.45 - 0.25) / (1.0 - 0.25);
    for (const auto& g : planted.plan.geolocations) {
      planted.personalization.by_location[g.location_id] = {1.0, g.country_code == "ZA" ? tilt : 0.0,
                                                            1, {}};
    }
    const auto cell = compare_countries(run_dataset(planted), {}, sweep).cells.at(0);
    if (cell.test && cell.group_b == "ZA" && cell.test->direction == Direction::BGreater &&
        cell.test->p_value < 0.05) {
      ++detected;
    }

    const auto null_cell = compare_countries(run_dataset(detection_scenario(seed)), {}, sweep).cells.at(0);
    if (null_cell.test && null_cell.test->p_value < 0.05) ++false_flags;
  }
  return pass_if(detected >= 45 && false_flags <= 5,
                 fmt::format("planted ZA > US flagged in {}/{} seeds; null flagged in {}/{}", detected,
                             kSeeds, false_flags, kSeeds));
}

// ---- 6. robustness coherence -------------------------------------------------

Scenario robustness_scenario(double origins_share) {
  Scenario s;
  s.plan = builtin_plan(6);
  s.plan.top_n_extract = 10;
  s.plan.days = 5;
  s.seed = 6;
  s.label_mix = LabelMix({0.30, 0.30 - origins_share, 0.25, origins_share, 0.10, 0.03, 0.02});
  s.noise.epsilon = 0.1;
  for (const auto& g : s.plan.geolocations) {
    s.personalization.by_location[g.location_id] = {1.0, g.country_code == "ZA" ? 0.04 : 0.0, 1, {}};
  }
  return s;
}

Verdict robustness_coherence() {
  const auto planted = robustness_suite(run_dataset(robustness_scenario(0.2)), {});
  std::map<StancePolicy, ComparisonCell> cells;
  for (const auto& [policy, report] : planted.conditions) cells.emplace(policy, report.cells.at(0));
  const auto& base = cells.at(StancePolicy::Default);
  const auto& excluded = cells.at(StancePolicy::ExcludeOrigins);
  const auto& misinfo = cells.at(StancePolicy::OriginsAsMisinfo);
  // Counting Origins as Supporting raises both countries' means; dropping
  // them rescales the remaining weights, so the means move as well.
  const bool differ = base.test && excluded.test && misinfo.test &&
                      misinfo.mean_a > base.mean_a && misinfo.mean_b > base.mean_b &&
                      excluded.mean_a != base.mean_a && excluded.mean_b != base.mean_b &&
                      base.test->statistic != misinfo.test->statistic &&
                      base.test->statistic != excluded.test->statistic;

  const auto zero = robustness_suite(run_dataset(robustness_scenario(0.0)), {});
  bool identical = true;
  const auto reference =
      render(ComparisonReport{Dimension::Country, {}, zero.conditions.at(0).second.cells},
             ReportFormat::Tsv);
  for (const auto& [policy, report] : zero.conditions) {
    const ComparisonReport body{Dimension::Country, {}, report.cells};
    identical = identical && render(body, ReportFormat::Tsv) == reference;
  }
  return pass_if(differ && identical,
                 fmt::format("planted Origins: r default {:.3f}, case 1 {:.3f}, case 2 {:.3f}; "
                             "zero Origins identical: {}",
                             base.test ? base.test->effect_size : NAN,
                             excluded.test ? excluded.test->effect_size : NAN,
                             misinfo.test ? misinfo.test->effect_size : NAN, identical ? "yes" : "no"));
}

// ---- 7. released dataset ----------------------------------------------------

Verdict dataset_replication(const std::optional<std::filesystem::path>& dir) {
  if (!dir) return {Outcome::Skip, "no dataset supplied (--dataset DIR or SERP_AUDIT_DATASET)"};
  const auto log = *dir / "serp_log.tsv";
  const auto labels = *dir / "labels.csv";
  if (!std::filesystem::exists(log) || !std::filesystem::exists(labels)) {
    return {Outcome::Skip, fmt::format("{} lacks serp_log.tsv or labels.csv", dir->string())};
  }
  const auto report = *dir / "run_report.json";
  const auto plan = *dir / "plan.json";
  const auto data = ingest(log, labels,
                           std::filesystem::exists(report) ? std::optional(report) : std::nullopt,
                           std::filesystem::exists(plan) ? std::optional(plan) : std::nullopt);
  const int sweep[] = {10};
  const auto top10 = compare_countries(data, {}, sweep).cells.at(0);
  // The non-US country must rank higher.
  const bool other_greater =
      top10.test && ((top10.group_a == "US" && top10.test->direction == Direction::BGreater) ||
                     (top10.group_b == "US" && top10.test->direction == Direction::AGreater));
  const bool country_ok = other_greater && top10.test->statistic == 191.0 &&
                          std::abs(top10.test->effect_size - 0.49) <= 0.01 &&
                          top10.test->p_value < 0.001;

  const auto within = compare_within_country(data, "US", {});
  const bool within_ok = std::abs(within.test.h_statistic - 6.98) <= 0.05 &&
                         std::abs(within.test.eta_squared - 0.18) <= 0.01;

  Scope relevance;
  relevance.filters = {SearchFilter::Relevance};
  const auto rel = compare_countries(data, relevance, sweep).cells.at(0);
  const bool relevance_ok = rel.test && std::abs(rel.test->effect_size - 0.86) <= 0.01;

  return pass_if(country_ok && within_ok && relevance_ok,
                 fmt::format("top-10 U={} r={:.3f}; US H={:.3f} eta2={:.3f}; relevance r={:.3f}",
                             top10.test ? top10.test->statistic : NAN,
                             top10.test ? top10.test->effect_size : NAN, within.test.h_statistic,
                             within.test.eta_squared, rel.test ? rel.test->effect_size : NAN));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serp-audit acceptance checks"};
  std::string dataset;
  std::vector<int> only;
  app.add_option("--dataset", dataset, "Directory with serp_log.tsv and labels.csv");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);

  std::optional<std::filesystem::path> dataset_dir;
  if (!dataset.empty()) {
    dataset_dir = dataset;
  } else if (const char* env = std::getenv("SERP_AUDIT_DATASET"); env != nullptr && *env != '\0') {
    dataset_dir = env;
  }

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"bias score formula", bias_formula},
      {"schedule and SERP counts", schedule_counts},
      {"GBP recovery", gbp_recovery},
      {"statistics vs permutation oracle", statistics_oracle},
      {"direction detection", direction_detection},
      {"robustness coherence", robustness_coherence},
      {"dataset replication", [&] { return dataset_replication(dataset_dir); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {Outcome::Fail, fmt::format("threw: {}", e.what())};
    }
    const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Skip ? "SKIP" : "FAIL";
    if (v.outcome == Outcome::Fail) ++failures;
    fmt::print("[{}] {} {}: {}\n", tag, number, criteria[i].first, v.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
