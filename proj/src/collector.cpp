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

#include "serp_audit/collector.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <exception>
#include <thread>

#include "serp_audit/rng.hpp"

namespace serp_audit {

std::string format_query(std::string_view raw) {
  const auto first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw AuditError(ErrorKind::EmptyQuery, "query is empty");
  const auto last = raw.find_last_not_of(" \t\r\n");
  const auto trimmed = raw.substr(first, last - first + 1);
  if (trimmed.find(kQueryOperatorSuffix) != std::string_view::npos) {
    throw AuditError(ErrorKind::AlreadyFormatted,
                     fmt::format("query '{}' already carries the operator suffix", trimmed));
  }
  return fmt::format("{} {}", trimmed, kQueryOperatorSuffix);
}

void complete_query_text(ExperimentPlan& plan) {
  for (auto& q : plan.queries) {
    if (q.formatted_text.empty()) q.formatted_text = format_query(q.raw_text);
  }
}

ExperimentPlan builtin_plan(std::uint64_t seed) {
  using namespace std::chrono;
  ExperimentPlan plan;
  plan.geolocations = {
      {"los-angeles", "US", "Los Angeles"},   {"houston", "US", "Houston"},
      {"jacksonville", "US", "Jacksonville"}, {"johannesburg", "ZA", "Johannesburg"},
      {"durban", "ZA", "Durban"},             {"cape-town", "ZA", "Cape Town"},
  };
  plan.bots = make_twin_bots(plan.geolocations);

  struct Topic {
    const char* name;
    std::array<const char*, 6> queries;
  };
  static const Topic topics[] = {
      {"Biological Weapon",
       {"Biological Weapon", "CCP virus", "man-made virus", "China virus",
        "fact chinesemade virus", "revelations gravitas china virus coverup"}},
      {"Lab Leak Theory",
       {"lab leak theory", "WHO coverup", "china scientist create virus",
        "North Carolina lab in US", "Kungflu", "evidence virus lab"}},
      {"5G Claims",
       {"5g bad effect", "5g conspiracy", "5g and covid19 link", "the dangers of 5g radiation",
        "why 5g testing cause corona", "dangers 5g"}},
      {"Bill Gates Claims",
       {"destroy Africa", "depopulate the world", "vaccine testing africa",
        "bill gates vaccine chip", "bill gates exposed", "happened vaccine devil"}},
      {"Spread of Virus",
       {"sanitize", "dogs and cats", "Covid 19 Spread And Precautions", "precaution for pets",
        "spread of covid by a bat", "social spread"}},
      {"Treatment of Virus",
       {"sesame oil", "garlic", "herbs", "local concoctions", "treatment covid19 government",
        "dealing vulnerable population"}},
      {"Population Control",
       {"population control", "mass murder", "plandemic", "nuremberg code", "brainwashing",
        "vaccines depopulation"}},
      {"Vaccine Content Claims",
       {"MRNA", "hek-293 cells", "fetal tissue research", "abortion used in vaccine",
        "organ harvesting", "conscience vaccines abortion"}},
  };
  int index = 0;
  for (const auto& topic : topics) {
    for (const char* q : topic.queries) {
      ++index;
      plan.queries.push_back({fmt::format("q{:02d}", index), topic.name, q, format_query(q)});
    }
  }
  plan.filters.assign(std::begin(kAllFilters), std::end(kAllFilters));
  plan.days = 10;
  plan.batch_times = {hours{0}, hours{12}};
  plan.top_n_extract = 50;
  plan.seed = seed;
  plan.start_date = sys_days{year{2023} / January / 30};
  return plan;
}

Schedule build_schedule(const ValidatedPlan& validated) {
  const auto& plan = validated.plan();
  Schedule schedule;
  const std::size_t batches = plan.batch_times.size();
  const std::size_t queries = plan.queries.size();
  const std::size_t base = queries / batches;
  const std::size_t remainder = queries % batches;
  schedule.batch_sizes.assign(batches, base);
  schedule.batch_sizes[0] += remainder;
  if (remainder != 0) {
    schedule.warnings.push_back(fmt::format(
        "UnevenBatch: {} queries do not split evenly into {} batches; first batch takes {}",
        queries, batches, schedule.batch_sizes[0]));
  }

  schedule.entries.reserve(plan.bots.size() * queries * plan.filters.size() *
                           static_cast<std::size_t>(plan.days));
  for (int day = 1; day <= plan.days; ++day) {
    std::size_t first_query = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const Timestamp fire = Timestamp{plan.start_date + std::chrono::days{day - 1}} +
                             plan.batch_times[b];
      for (const auto& bot : plan.bots) {
        for (std::size_t q = first_query; q < first_query + schedule.batch_sizes[b]; ++q) {
          for (auto filter : plan.filters) {
            schedule.entries.push_back(
                {fire, bot.bot_id, plan.queries[q].query_id, filter, day, static_cast<int>(b)});
          }
        }
      }
      first_query += schedule.batch_sizes[b];
    }
  }
  return schedule;
}

ReplayBackend::ReplayBackend(std::span<const SerpRecord> records) {
  for (const auto& r : records) {
    serps_[{r.bot_id, r.timestamp, r.query_id, r.filter}].emplace_back(r.rank, r.video_id);
  }
  for (auto& [key, results] : serps_) std::sort(results.begin(), results.end());
}

std::vector<std::string> ReplayBackend::search(const SearchRequest& request) {
  auto it = serps_.find({request.bot.bot_id, request.time, request.query.query_id, request.filter});
  if (it == serps_.end()) {
    throw AuditError(ErrorKind::BackendFailure,
                     fmt::format("no recorded SERP for {} {} {} {}", request.bot.bot_id,
                                 format_timestamp(request.time), request.query.query_id,
                                 to_string(request.filter)));
  }
  std::vector<std::string> ids;
  ids.reserve(it->second.size());
  for (const auto& [rank, id] : it->second) ids.push_back(id);
  return ids;
}

ResolvedLocation EchoResolver::resolve(const BotIdentity&, const GeoLocation& configured) {
  return {configured.country_code, configured.city_name};
}

GeoCheck validate_geolocation(const BotIdentity& bot, const GeoLocation& expected,
                              GeoResolver& resolver) {
  GeoCheck check;
  check.resolved = resolver.resolve(bot, expected);
  check.pass = check.resolved.country_code == expected.country_code &&
               check.resolved.city_name == expected.city_name;
  if (!check.pass) {
    check.reason = fmt::format("resolved to {}/{}, expected {}/{}", check.resolved.country_code,
                               check.resolved.city_name, expected.country_code,
                               expected.city_name);
  }
  return check;
}

RatePolicy rate_policy_from_json(const nlohmann::json& j) {
  RatePolicy p;
  try {
    p.min_delay = std::chrono::milliseconds{j.value("min_delay_ms", 0)};
    p.max_delay = std::chrono::milliseconds{j.value("max_delay_ms", 0)};
    p.retries = j.value("retries", 2);
  } catch (const nlohmann::json::exception& e) {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("malformed rate policy: {}", e.what()));
  }
  if (p.min_delay.count() < 0 || p.max_delay < p.min_delay || p.retries < 0) {
    throw AuditError(ErrorKind::InvalidArgument,
                     "rate policy needs 0 <= min_delay_ms <= max_delay_ms and retries >= 0");
  }
  return p;
}

nlohmann::json to_json(const RatePolicy& policy) {
  return {{"min_delay_ms", policy.min_delay.count()},
          {"max_delay_ms", policy.max_delay.count()},
          {"retries", policy.retries}};
}

std::string_view to_string(RunStatus status) noexcept {
  return status == RunStatus::Complete ? "Complete" : "PartialRun";
}

nlohmann::json to_json(const RunReport& report) {
  using nlohmann::json;
  json j;
  j["status"] = std::string(to_string(report.status));
  j["scheduled_entries"] = report.scheduled_entries;
  j["serps_collected"] = report.serps_collected;
  j["records"] = report.records;
  j["batch_sizes"] = report.batch_sizes;
  j["rate_policy"] = to_json(report.rate_policy);
  j["failures"] = json::array();
  for (const auto& f : report.failures) {
    j["failures"].push_back({{"fire_time", format_timestamp(f.entry.fire_time)},
                             {"bot_id", f.entry.bot_id},
                             {"query_id", f.entry.query_id},
                             {"filter", std::string(to_string(f.entry.filter))},
                             {"day", f.entry.day},
                             {"attempts", f.attempts},
                             {"error", f.error}});
  }
  j["exclusions"] = json::array();
  for (const auto& [query, day] : report.exclusions) {
    j["exclusions"].push_back({{"query_id", query}, {"day", day}});
  }
  j["quarantined"] = json::array();
  for (const auto& q : report.quarantined) {
    j["quarantined"].push_back({{"bot_id", q.bot_id}, {"reason", q.reason}});
  }
  j["warnings"] = report.warnings;
  return j;
}

std::string to_text(const RunReport& report) {
  std::string out;
  out += fmt::format("status: {}\n", to_string(report.status));
  out += fmt::format("scheduled entries: {}\n", report.scheduled_entries);
  out += fmt::format("SERPs collected: {}\n", report.serps_collected);
  out += fmt::format("records: {}\n", report.records);
  out += fmt::format("batch sizes: {}\n", fmt::join(report.batch_sizes, ", "));
  out += fmt::format("rate policy: delay {}-{} ms, {} retries\n", report.rate_policy.min_delay.count(),
                     report.rate_policy.max_delay.count(), report.rate_policy.retries);
  // The text view is for people; run_report.json keeps every failure.
  constexpr std::size_t kListedFailures = 50;
  out += fmt::format("failures: {}\n", report.failures.size());
  for (std::size_t i = 0; i < std::min(report.failures.size(), kListedFailures); ++i) {
    const auto& f = report.failures[i];
    out += fmt::format("  {} {} {} {} day {}: {} (after {} attempts)\n",
                       format_timestamp(f.entry.fire_time), f.entry.bot_id, f.entry.query_id,
                       to_string(f.entry.filter), f.entry.day, f.error, f.attempts);
  }
  if (report.failures.size() > kListedFailures) {
    out += fmt::format("  ... {} more in run_report.json\n", report.failures.size() - kListedFailures);
  }
  out += fmt::format("excluded (query, day) groups: {}\n", report.exclusions.size());
  for (const auto& [query, day] : report.exclusions) {
    out += fmt::format("  {} day {}\n", query, day);
  }
  out += fmt::format("quarantined bots: {}\n", report.quarantined.size());
  for (const auto& q : report.quarantined) out += fmt::format("  {}: {}\n", q.bot_id, q.reason);
  for (const auto& w : report.warnings) out += fmt::format("warning: {}\n", w);
  return out;
}

std::set<std::pair<std::string, int>> exclusions_from_json(const nlohmann::json& report) {
  std::set<std::pair<std::string, int>> out;
  try {
    for (const auto& e : report.at("exclusions")) {
      out.emplace(e.at("query_id").get<std::string>(), e.at("day").get<int>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("malformed run report: {}", e.what()));
  }
  return out;
}

void sort_canonical(std::vector<SerpRecord>& records) {
  std::sort(records.begin(), records.end(), [](const SerpRecord& a, const SerpRecord& b) {
    return std::tie(a.timestamp, a.bot_id, a.query_id, a.filter, a.rank) <
           std::tie(b.timestamp, b.bot_id, b.query_id, b.filter, b.rank);
  });
}

namespace {

struct EntryOutcome {
  std::optional<std::vector<std::string>> ids;
  std::string error;
  int attempts = 0;
};

void pause(Rng& rng, const RatePolicy& policy) {
  if (policy.max_delay.count() <= 0) return;
  const auto span = static_cast<std::uint64_t>((policy.max_delay - policy.min_delay).count());
  const auto wait = policy.min_delay + std::chrono::milliseconds{
                                           static_cast<std::int64_t>(rng.below(span + 1))};
  std::this_thread::sleep_for(wait);
}

}  // namespace

RunResult run_experiment(const ValidatedPlan& validated, SearchBackend& backend,
                         const RatePolicy& policy, GeoResolver* resolver) {
  const auto& plan = validated.plan();
  RunResult result;
  auto& report = result.report;
  report.rate_policy = policy;

  std::set<std::string> quarantined;
  if (resolver != nullptr) {
    for (const auto& bot : plan.bots) {
      const auto* loc = plan.find_location(bot.location_id);
      try {
        const auto check = validate_geolocation(bot, *loc, *resolver);
        if (!check.pass) {
          quarantined.insert(bot.bot_id);
          report.quarantined.push_back({bot.bot_id, check.reason});
        }
      } catch (const AuditError& e) {
        if (e.kind() != ErrorKind::ResolverUnavailable) throw;
        quarantined.insert(bot.bot_id);
        report.quarantined.push_back(
            {bot.bot_id, fmt::format("{}: {}", to_string(e.kind()), e.what())});
      }
    }
  }

  auto schedule = build_schedule(validated);
  report.batch_sizes = schedule.batch_sizes;
  report.warnings = schedule.warnings;
  std::vector<ScheduleEntry> entries;
  entries.reserve(schedule.entries.size());
  for (auto& e : schedule.entries) {
    if (!quarantined.contains(e.bot_id)) entries.push_back(std::move(e));
  }
  report.scheduled_entries = entries.size();

  std::vector<EntryOutcome> outcomes(entries.size());
  std::size_t group_begin = 0;
  while (group_begin < entries.size()) {
    std::size_t group_end = group_begin;
    while (group_end < entries.size() &&
           entries[group_end].fire_time == entries[group_begin].fire_time) {
      ++group_end;
    }
    // One lane per bot; a bot performs its searches one after another.
    std::vector<std::vector<std::size_t>> lanes;
    std::map<std::string, std::size_t> lane_of;
    for (std::size_t i = group_begin; i < group_end; ++i) {
      auto [it, inserted] = lane_of.emplace(entries[i].bot_id, lanes.size());
      if (inserted) lanes.emplace_back();
      lanes[it->second].push_back(i);
    }
    std::vector<std::exception_ptr> aborts(lanes.size());
    const auto lane_count = static_cast<std::int64_t>(lanes.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t l = 0; l < lane_count; ++l) {
      const auto& lane = lanes[static_cast<std::size_t>(l)];
      const auto& first = entries[lane.front()];
      Rng delay_rng(derive_seed(plan.seed, {"delay", first.bot_id, format_timestamp(first.fire_time)}));
      const auto* bot = plan.find_bot(first.bot_id);
      const auto* location = plan.find_location(bot->location_id);
      for (auto idx : lane) {
        const auto& entry = entries[idx];
        const auto* query = plan.find_query(entry.query_id);
        auto& outcome = outcomes[idx];
        const SearchRequest request{*query, entry.filter, *location, *bot, entry.fire_time, entry.day};
        while (outcome.attempts <= policy.retries && !outcome.ids) {
          ++outcome.attempts;
          pause(delay_rng, policy);
          try {
            outcome.ids = backend.search(request);
          } catch (const AuditError& e) {
            if (e.kind() == ErrorKind::BackendUnavailable) {
              aborts[static_cast<std::size_t>(l)] = std::current_exception();
              break;
            }
            outcome.error = fmt::format("{}: {}", to_string(e.kind()), e.what());
          } catch (const std::exception& e) {
            outcome.error = e.what();
          }
        }
        if (aborts[static_cast<std::size_t>(l)]) break;
      }
    }
    for (const auto& a : aborts) {
      if (a) std::rethrow_exception(a);
    }
    group_begin = group_end;
  }

  const auto top_n = static_cast<std::size_t>(plan.top_n_extract);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& entry = entries[i];
    auto& outcome = outcomes[i];
    if (outcome.ids && outcome.ids->empty()) {
      outcome.ids.reset();
      outcome.error = "empty response";
    }
    if (!outcome.ids) {
      report.failures.push_back({entry, outcome.error, outcome.attempts});
      report.exclusions.emplace(entry.query_id, entry.day);
      continue;
    }
    auto dedup = dedupe_serp(std::move(*outcome.ids));
    if (!dedup.dropped.empty()) {
      report.warnings.push_back(fmt::format("{} {} {} {}: dropped {} duplicate result(s)",
                                            format_timestamp(entry.fire_time), entry.bot_id,
                                            entry.query_id, to_string(entry.filter),
                                            dedup.dropped.size()));
    }
    if (dedup.ids.size() > top_n) {
      report.warnings.push_back(fmt::format("{} {} {} {}: backend returned {} results, kept {}",
                                            format_timestamp(entry.fire_time), entry.bot_id,
                                            entry.query_id, to_string(entry.filter),
                                            dedup.ids.size(), top_n));
      dedup.ids.resize(top_n);
    }
    const auto* bot = plan.find_bot(entry.bot_id);
    const auto* location = plan.find_location(bot->location_id);
    int rank = 0;
    for (auto& id : dedup.ids) {
      result.log.push_back({entry.fire_time, entry.bot_id, bot->role, location->location_id,
                            location->country_code, entry.query_id, entry.filter, ++rank,
                            std::move(id), entry.day});
    }
    ++report.serps_collected;
  }
  sort_canonical(result.log);
  report.records = result.log.size();
  report.status = report.failures.empty() ? RunStatus::Complete : RunStatus::Partial;
  return result;
}

}  // namespace serp_audit
