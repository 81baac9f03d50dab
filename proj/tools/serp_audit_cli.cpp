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

// serp-audit: command-line front end for collection and analysis.
//
// Errors are reported as one JSON line on stderr,
//   {"error": "<ErrorClass>", "message": "..."}
// with exit code 10 + the error class index (2 for usage errors).

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "serp_audit/analysis.hpp"
#include "serp_audit/collector.hpp"
#include "serp_audit/io.hpp"
#include "serp_audit/simulator.hpp"

namespace fs = std::filesystem;
using namespace serp_audit;

namespace {

struct AnalysisArgs {
  std::string log;
  std::string labels;
  std::string report;
  std::string plan;
  int top_n = 10;
  std::string policy = "default";
  std::vector<std::string> filters;
  std::vector<std::string> queries;
  std::vector<std::string> topics;
  bool treatment_only = false;
  std::string batches = "joint";
  std::string format = "md";
  std::string out;
};

void add_analysis_options(CLI::App* cmd, AnalysisArgs& a) {
  cmd->add_option("--log", a.log, "SERP log (TSV)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--labels", a.labels, "Labels file (CSV)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--report", a.report, "Run report JSON supplying exclusions")
      ->check(CLI::ExistingFile);
  cmd->add_option("--plan", a.plan, "Plan JSON supplying query topics")->check(CLI::ExistingFile);
  cmd->add_option("--top-n", a.top_n, "Results scored per SERP")->check(CLI::Range(1, kMaxRank));
  cmd->add_option("--policy", a.policy, "default | exclude-origins | origins-as-misinfo");
  cmd->add_option("--filters", a.filters, "Restrict to these filters")->delimiter(',');
  cmd->add_option("--queries", a.queries, "Restrict to these query ids")->delimiter(',');
  cmd->add_option("--topics", a.topics, "Restrict to these topics")->delimiter(',');
  cmd->add_flag("--treatment-only", a.treatment_only, "Score treatment bots only");
  cmd->add_option("--batches", a.batches, "joint | separate daily batch averaging");
  cmd->add_option("--format", a.format, "md | tsv | json");
  cmd->add_option("--out", a.out, "Write the report here instead of stdout");
}

Scope make_scope(const AnalysisArgs& a) {
  Scope scope;
  scope.top_n = a.top_n;
  auto policy = parse_policy(a.policy);
  if (!policy) throw AuditError(ErrorKind::InvalidArgument, fmt::format("unknown policy '{}'", a.policy));
  scope.policy = *policy;
  for (const auto& f : a.filters) {
    auto parsed = parse_filter(f);
    if (!parsed) throw AuditError(ErrorKind::InvalidArgument, fmt::format("unknown filter '{}'", f));
    scope.filters.insert(*parsed);
  }
  scope.queries.insert(a.queries.begin(), a.queries.end());
  scope.topics.insert(a.topics.begin(), a.topics.end());
  scope.treatment_only = a.treatment_only;
  auto batches = parse_batch_mode(a.batches);
  if (!batches) {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("unknown batch mode '{}'", a.batches));
  }
  scope.batches = *batches;
  return scope;
}

ReportFormat make_format(const AnalysisArgs& a) {
  auto f = parse_report_format(a.format);
  if (!f) throw AuditError(ErrorKind::InvalidArgument, fmt::format("unknown format '{}'", a.format));
  return *f;
}

Dataset load_dataset(const AnalysisArgs& a) {
  auto opt_path = [](const std::string& p) {
    return p.empty() ? std::nullopt : std::optional<fs::path>(p);
  };
  auto data = ingest(a.log, a.labels, opt_path(a.report), opt_path(a.plan));
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
  return data;
}

std::vector<std::pair<std::string, std::string>> provenance(const AnalysisArgs& a) {
  std::vector<std::pair<std::string, std::string>> p{{"log", a.log}, {"labels", a.labels}};
  if (!a.report.empty()) p.emplace_back("run_report", a.report);
  return p;
}

template <class T>
T with_provenance(T report, const AnalysisArgs& a) {
  auto p = provenance(a);
  report.parameters.insert(report.parameters.begin(), p.begin(), p.end());
  return report;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw AuditError(ErrorKind::Io, fmt::format("cannot write '{}'", out));
  file << text;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw AuditError(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  file << text;
}

void write_run(const fs::path& dir, const ExperimentPlan& plan, const RunResult& run,
               const LabelMap* labels) {
  fs::create_directories(dir);
  write_serp_log(dir / "serp_log.tsv", run.log);
  if (labels != nullptr) write_labels(dir / "labels.csv", *labels);
  save_plan(dir / "plan.json", plan);
  write_text(dir / "run_report.json", to_json(run.report).dump(2) + "\n");
  write_text(dir / "run_report.txt", to_text(run.report));
  std::cerr << to_text(run.report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geolocation audit of search-result misinformation: collection and analysis"};
  app.require_subcommand(1);

  // simulate
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a scenario against the synthetic engine");
  simulate_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--seed", seed, "Override the scenario's root seed");
  simulate_cmd->add_option("--out", out_dir, "Output directory")->required();

  // collect
  std::string plan_path;
  std::string backend = "synthetic";
  std::string replay_log;
  std::string collect_scenario;
  std::string rate_policy_path;
  auto* collect_cmd = app.add_subcommand("collect", "Execute a plan against a search backend");
  collect_cmd->add_option("plan", plan_path, "Plan JSON, or 'builtin' for the built-in design")->required();
  collect_cmd->add_option("--backend", backend, "synthetic | replay")
      ->check(CLI::IsMember({"synthetic", "replay"}));
  collect_cmd->add_option("--replay-log", replay_log, "SERP log served by the replay backend")
      ->check(CLI::ExistingFile);
  collect_cmd->add_option("--scenario", collect_scenario,
                          "Scenario JSON for the synthetic backend (its plan is replaced)")
      ->check(CLI::ExistingFile);
  collect_cmd->add_option("--rate-policy", rate_policy_path, "Rate policy JSON")
      ->check(CLI::ExistingFile);
  collect_cmd->add_option("--seed", seed, "Root seed for the synthetic backend");
  collect_cmd->add_option("--out", out_dir, "Output directory")->required();

  // analysis subcommands
  AnalysisArgs args;
  auto* score_cmd = app.add_subcommand("score", "Per-geolocation per-day mean bias scores");
  add_analysis_options(score_cmd, args);

  std::string dimension = "topn";
  std::string country;
  std::vector<int> sweep(std::begin(kDefaultSweep), std::end(kDefaultSweep));
  auto* compare_cmd = app.add_subcommand("compare", "Statistical comparisons");
  add_analysis_options(compare_cmd, args);
  compare_cmd->add_option("--dimension", dimension, "topn | country | within | topic | filter")
      ->check(CLI::IsMember({"topn", "country", "within", "topic", "filter"}));
  compare_cmd->add_option("--country", country, "Country code for --dimension within");
  compare_cmd->add_option("--sweep", sweep, "Top-N values for --dimension topn")->delimiter(',');

  std::size_t limit = 20;
  auto* rank_cmd = app.add_subcommand("rank-queries", "Query-filter pairs by mean bias");
  add_analysis_options(rank_cmd, args);
  rank_cmd->add_option("--limit", limit, "Rows to keep (0 keeps all)");

  auto* trend_cmd = app.add_subcommand("trend", "Daily mean bias per country");
  add_analysis_options(trend_cmd, args);

  auto* robustness_cmd = app.add_subcommand("robustness", "Country comparison under each origins policy");
  add_analysis_options(robustness_cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    nlohmann::json err = {{"error", "UsageError"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }

  try {
    if (*simulate_cmd) {
      auto scenario = load_scenario(scenario_path);
      if (seed) {
        scenario.seed = *seed;
        scenario.plan.seed = *seed;
      }
      const auto output = simulate(scenario);
      write_run(out_dir, scenario.plan, output.run, &output.catalog.labels());
      write_text(fs::path(out_dir) / "scenario.json", to_json(scenario).dump(2) + "\n");
    } else if (*collect_cmd) {
      auto plan = plan_path == "builtin" ? builtin_plan() : load_plan(plan_path);
      complete_query_text(plan);
      RatePolicy policy;
      if (!rate_policy_path.empty()) policy = rate_policy_from_json(load_json(rate_policy_path));
      if (backend == "replay") {
        if (replay_log.empty()) {
          throw AuditError(ErrorKind::InvalidArgument, "--backend replay needs --replay-log");
        }
        const auto records = read_serp_log(replay_log);
        ReplayBackend replay(records);
        const auto run = run_experiment(validate_plan(plan), replay, policy);
        write_run(out_dir, plan, run, nullptr);
      } else {
        Scenario scenario = collect_scenario.empty() ? Scenario{} : load_scenario(collect_scenario);
        if (seed) {
          scenario.seed = *seed;
        } else if (collect_scenario.empty()) {
          scenario.seed = plan.seed;
        }
        scenario.plan = plan;
        scenario.plan.seed = scenario.seed;
        if (!rate_policy_path.empty()) scenario.rate_policy = policy;
        const auto output = simulate(scenario);
        write_run(out_dir, scenario.plan, output.run, &output.catalog.labels());
      }
    } else {
      const auto scope = make_scope(args);
      const auto format = make_format(args);
      const auto data = load_dataset(args);
      auto params = provenance(args);
      auto scope_params = describe(scope);
      params.insert(params.end(), scope_params.begin(), scope_params.end());

      if (*score_cmd) {
        emit(render(aggregate(data, scope), params, format), args.out);
      } else if (*compare_cmd) {
        if (dimension == "topn") {
          emit(render(with_provenance(compare_countries(data, scope, sweep), args), format), args.out);
        } else if (dimension == "country") {
          const int single[] = {scope.top_n};
          emit(render(with_provenance(compare_countries(data, scope, single), args), format), args.out);
        } else if (dimension == "within") {
          if (country.empty()) {
            throw AuditError(ErrorKind::InvalidArgument, "--dimension within needs --country");
          }
          emit(render(with_provenance(compare_within_country(data, country, scope), args), format),
               args.out);
        } else {
          const auto d = dimension == "topic" ? Dimension::Topic : Dimension::Filter;
          emit(render(with_provenance(compare_by_dimension(data, d, scope), args), format), args.out);
        }
      } else if (*rank_cmd) {
        params.emplace_back("limit", std::to_string(limit));
        emit(render(rank_query_filters(data, scope, limit), params, format), args.out);
      } else if (*trend_cmd) {
        emit(render(temporal_trend(data, scope), params, format), args.out);
      } else if (*robustness_cmd) {
        auto report = robustness_suite(data, scope);
        for (auto& [policy, r] : report.conditions) r = with_provenance(std::move(r), args);
        emit(render(report, format), args.out);
      }
    }
  } catch (const AuditError& e) {
    nlohmann::json err = {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", "InternalError"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
