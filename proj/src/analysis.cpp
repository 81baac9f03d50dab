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

#include "serp_audit/analysis.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "serp_audit/collector.hpp"
#include "serp_audit/io.hpp"
#include "serp_audit/kernels.hpp"

namespace serp_audit {

namespace {

using Params = std::vector<std::pair<std::string, std::string>>;

std::chrono::seconds time_of_day(Timestamp t) {
  return t - std::chrono::floor<std::chrono::days>(t);
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// In-scope SERPs and their scores, computed with the parallel kernel.
struct Scored {
  std::vector<const Serp*> serps;
  std::vector<BiasScore> scores;
};

Scored score_scope(const Dataset& data, const Scope& scope) {
  Scored out;
  for (const auto& s : data.serps) {
    if (scope.includes(s, data)) out.serps.push_back(&s);
  }
  if (out.serps.empty()) {
    throw AuditError(ErrorKind::EmptyScope, "no SERPs fall inside the requested scope");
  }
  std::vector<kernels::SerpSlice> slices;
  slices.reserve(out.serps.size());
  for (const auto* s : out.serps) slices.emplace_back(s->ids);
  out.scores = kernels::score_serps_parallel(slices, data.labels, scope.top_n, scope.policy);
  return out;
}

std::pair<std::string, std::string> two_countries(
    const std::map<std::string, std::vector<double>>& samples) {
  if (samples.size() != 2) {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("country comparison needs exactly two countries, found {}",
                                 samples.size()));
  }
  return {samples.begin()->first, std::next(samples.begin())->first};
}

ComparisonCell compare_cell(std::string label, const std::map<std::string, std::vector<double>>& samples) {
  const auto [a, b] = two_countries(samples);
  ComparisonCell cell;
  cell.label = std::move(label);
  cell.group_a = a;
  cell.group_b = b;
  const auto& sa = samples.at(a);
  const auto& sb = samples.at(b);
  cell.mean_a = mean_of(sa);
  cell.mean_b = mean_of(sb);
  try {
    cell.test = mann_whitney(sa, sb);
  } catch (const AuditError& e) {
    if (e.kind() != ErrorKind::DegenerateSample) throw;
    cell.error = fmt::format("{}: {}", to_string(e.kind()), e.what());
  }
  return cell;
}

// ---- rendering ------------------------------------------------------------

// Formats with a fixed number of decimals and never prints "-0.000".
std::string fixed(double x, int decimals) {
  auto s = fmt::format("{:.{}f}", x, decimals);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string p_text(double p) {
  return p < 1e-4 ? fmt::format("{:.2e}", p) : fixed(p, 4);
}

// A rendered value: text for markdown/TSV, raw JSON for the JSON form.
struct Value {
  std::string text;
  nlohmann::json raw;
};

Value str(std::string s) { return {s, s}; }
Value num(double x, int decimals) { return {fixed(x, decimals), x}; }
Value pval(double p) { return {p_text(p), p}; }
Value count(std::size_t n) { return {std::to_string(n), n}; }
Value integer(long long n) { return {std::to_string(n), n}; }
Value blank() { return {"", nullptr}; }

struct Section {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
};

struct Document {
  std::string title;
  Params parameters;
  std::vector<Section> sections;
};

std::string render_document(const Document& doc, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::Markdown: {
      out += fmt::format("# {}\n\n", doc.title);
      for (const auto& [k, v] : doc.parameters) out += fmt::format("- {}: {}\n", k, v);
      for (const auto& section : doc.sections) {
        out += fmt::format("\n## {}\n\n", section.name);
        out += fmt::format("| {} |\n", fmt::join(section.columns, " | "));
        out += "|";
        for (std::size_t i = 0; i < section.columns.size(); ++i) out += " --- |";
        out += "\n";
        for (const auto& row : section.rows) {
          out += "|";
          for (const auto& v : row) out += fmt::format(" {} |", v.text);
          out += "\n";
        }
      }
      break;
    }
    case ReportFormat::Tsv: {
      out += fmt::format("# {}\n", doc.title);
      for (const auto& [k, v] : doc.parameters) out += fmt::format("# {}\t{}\n", k, v);
      for (std::size_t s = 0; s < doc.sections.size(); ++s) {
        const auto& section = doc.sections[s];
        if (s > 0) out += "\n";
        out += fmt::format("# section\t{}\n", section.name);
        out += fmt::format("{}\n", fmt::join(section.columns, "\t"));
        for (const auto& row : section.rows) {
          std::vector<std::string_view> cells;
          for (const auto& v : row) cells.emplace_back(v.text);
          out += fmt::format("{}\n", fmt::join(cells, "\t"));
        }
      }
      break;
    }
    case ReportFormat::Json: {
      nlohmann::ordered_json j;
      j["title"] = doc.title;
      auto& params = j["parameters"] = nlohmann::ordered_json::object();
      for (const auto& [k, v] : doc.parameters) params[k] = v;
      auto& sections = j["sections"] = nlohmann::ordered_json::object();
      for (const auto& section : doc.sections) {
        auto& rows = sections[section.name] = nlohmann::ordered_json::array();
        for (const auto& row : section.rows) {
          nlohmann::ordered_json obj;
          for (std::size_t i = 0; i < row.size(); ++i) obj[section.columns[i]] = row[i].raw;
          rows.push_back(std::move(obj));
        }
      }
      out = j.dump(2);
      out += "\n";
      break;
    }
  }
  return out;
}

Section comparison_section(const std::string& name, std::span<const ComparisonCell> cells) {
  Section section;
  section.name = name;
  if (cells.empty()) return section;
  const auto& a = cells.front().group_a;
  const auto& b = cells.front().group_b;
  section.columns = {"cell", fmt::format("mean_{}", a), fmt::format("mean_{}", b), "U", "z",
                     "p", "stars", "r", "direction", "note"};
  for (const auto& c : cells) {
    std::vector<Value> row{str(c.label), num(c.mean_a, 4), num(c.mean_b, 4)};
    if (c.test) {
      row.push_back(num(c.test->statistic, 1));
      row.push_back(num(c.test->z, 3));
      row.push_back(pval(c.test->p_value));
      row.push_back(str(std::string(significance_stars(c.test->p_value))));
      row.push_back(num(c.test->effect_size, 3));
      row.push_back(str(direction_label(c)));
      row.push_back(str(""));
    } else {
      for (int i = 0; i < 6; ++i) row.push_back(blank());
      row.push_back(str(c.error));
    }
    section.rows.push_back(std::move(row));
  }
  return section;
}

}  // namespace

// ---- ingestion ------------------------------------------------------------

Dataset build_dataset(std::vector<SerpRecord> records, LabelMap labels,
                      std::set<std::pair<std::string, int>> exclusions,
                      std::map<std::string, std::string> query_topics) {
  Dataset data;
  data.labels = std::move(labels);
  data.exclusions = std::move(exclusions);
  data.query_topics = std::move(query_topics);

  // Sort an index so schema errors can still name the input line (header is
  // line 1, so record i sits on line i + 2).
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = records[x];
    const auto& b = records[y];
    return std::tie(a.timestamp, a.bot_id, a.query_id, a.filter, a.rank) <
           std::tie(b.timestamp, b.bot_id, b.query_id, b.filter, b.rank);
  });

  std::map<std::string, std::tuple<std::string, std::string, TwinRole>> bot_home;
  std::set<std::string> unlabeled;
  std::size_t i = 0;
  while (i < order.size()) {
    const auto& head = records[order[i]];
    Serp serp{head.timestamp, head.bot_id,  head.twin_role,      head.location_id,
              head.country_code, head.query_id, head.filter, head.experiment_day, {}};
    const auto home = std::make_tuple(head.location_id, head.country_code, head.twin_role);
    auto [it, fresh] = bot_home.emplace(head.bot_id, home);
    std::size_t j = i;
    for (; j < order.size(); ++j) {
      const auto& r = records[order[j]];
      if (r.timestamp != head.timestamp || r.bot_id != head.bot_id ||
          r.query_id != head.query_id || r.filter != head.filter) {
        break;
      }
      const auto line = order[j] + 2;
      if (r.rank != static_cast<int>(j - i) + 1) {
        throw SchemaError(line, fmt::format("rank {} breaks the contiguous ranking of SERP "
                                            "({}, {}, {}, {})",
                                            r.rank, format_timestamp(r.timestamp), r.bot_id,
                                            r.query_id, to_string(r.filter)));
      }
      if (std::make_tuple(r.location_id, r.country_code, r.twin_role) != it->second ||
          r.experiment_day != head.experiment_day) {
        throw SchemaError(line, fmt::format("bot '{}' changes location, role or day within "
                                            "the log",
                                            r.bot_id));
      }
      serp.ids.push_back(r.video_id);
    }
    auto dedup = dedupe_serp(std::move(serp.ids));
    serp.ids = std::move(dedup.ids);
    if (!dedup.dropped.empty()) {
      data.warnings.push_back(fmt::format("{} {} {} {}: dropped {} duplicate result(s)",
                                          format_timestamp(serp.timestamp), serp.bot_id,
                                          serp.query_id, to_string(serp.filter),
                                          dedup.dropped.size()));
    }
    for (const auto& id : serp.ids) {
      if (!data.labels.contains(id)) unlabeled.insert(id);
    }
    data.serps.push_back(std::move(serp));
    i = j;
  }

  if (!unlabeled.empty()) {
    std::vector<std::string> sample(unlabeled.begin(),
                                    std::next(unlabeled.begin(),
                                              static_cast<std::ptrdiff_t>(std::min<std::size_t>(5, unlabeled.size()))));
    throw UnlabeledVideosError(unlabeled.size(), std::move(sample));
  }

  // Flag (query, day) groups that are missing SERPs.
  std::set<std::string> bots;
  std::set<SearchFilter> filters;
  std::map<std::pair<std::string, int>, std::size_t> group_sizes;
  for (const auto& s : data.serps) {
    bots.insert(s.bot_id);
    filters.insert(s.filter);
    ++group_sizes[{s.query_id, s.day}];
  }
  const std::size_t expected = bots.size() * filters.size();
  for (const auto& [group, size] : group_sizes) {
    if (size < expected && !data.exclusions.contains(group)) {
      data.warnings.push_back(fmt::format("{} day {}: {} of {} SERPs present, group excluded",
                                          group.first, group.second, size, expected));
      data.exclusions.insert(group);
    }
  }
  std::erase_if(data.serps, [&](const Serp& s) {
    return data.exclusions.contains({s.query_id, s.day});
  });
  return data;
}

Dataset ingest(const std::filesystem::path& serp_log, const std::filesystem::path& labels,
               const std::optional<std::filesystem::path>& run_report,
               const std::optional<std::filesystem::path>& plan) {
  auto records = read_serp_log(serp_log);
  auto label_map = read_labels(labels);
  std::set<std::pair<std::string, int>> exclusions;
  if (run_report) exclusions = exclusions_from_json(load_json(*run_report));
  std::map<std::string, std::string> topics;
  for (const auto& q : (plan ? load_plan(*plan) : builtin_plan()).queries) {
    topics.emplace(q.query_id, q.topic);
  }
  return build_dataset(std::move(records), std::move(label_map), std::move(exclusions),
                       std::move(topics));
}

// ---- scope & aggregation --------------------------------------------------

std::string_view to_string(BatchMode mode) noexcept {
  return mode == BatchMode::Joint ? "joint" : "separate";
}

std::optional<BatchMode> parse_batch_mode(std::string_view text) noexcept {
  if (text == "joint") return BatchMode::Joint;
  if (text == "separate") return BatchMode::Separate;
  return std::nullopt;
}

bool Scope::includes(const Serp& serp, const Dataset& data) const {
  if (treatment_only && serp.role != TwinRole::Treatment) return false;
  if (!filters.empty() && !filters.contains(serp.filter)) return false;
  if (!queries.empty() && !queries.contains(serp.query_id)) return false;
  if (!topics.empty()) {
    auto it = data.query_topics.find(serp.query_id);
    if (it == data.query_topics.end() || !topics.contains(it->second)) return false;
  }
  return true;
}

Params describe(const Scope& scope) {
  std::vector<std::string> filter_names;
  for (auto f : scope.filters) filter_names.emplace_back(to_string(f));
  const auto list_or_all = [](const auto& items) {
    return items.empty() ? std::string("all") : fmt::format("{}", fmt::join(items, ","));
  };
  return {
      {"top_n", std::to_string(scope.top_n)},
      {"policy", std::string(to_string(scope.policy))},
      {"filters", list_or_all(filter_names)},
      {"queries", list_or_all(scope.queries)},
      {"topics", list_or_all(scope.topics)},
      {"bots", scope.treatment_only ? "treatment" : "treatment+control"},
      {"batches", std::string(to_string(scope.batches))},
      {"alpha", "0.05"},
      {"stars", "*** p<0.001, ** p<0.01, * p<0.05"},
  };
}

std::vector<AggregatedScore> aggregate(const Dataset& data, const Scope& scope) {
  const auto scored = score_scope(data, scope);
  using Key = std::tuple<std::string, std::string, int, std::int64_t>;
  std::map<Key, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < scored.serps.size(); ++i) {
    const auto& s = *scored.serps[i];
    const std::int64_t tod =
        scope.batches == BatchMode::Separate ? time_of_day(s.timestamp).count() : -1;
    auto& [sum, n] = sums[{s.country_code, s.location_id, s.day, tod}];
    sum += scored.scores[i].value;
    ++n;
  }
  std::vector<AggregatedScore> rows;
  rows.reserve(sums.size());
  for (const auto& [key, acc] : sums) {
    const auto& [country, location, day, tod] = key;
    AggregatedScore row{location, country, day, std::nullopt,
                        acc.first / static_cast<double>(acc.second), acc.second};
    if (tod >= 0) row.time_of_day = std::chrono::seconds{tod};
    rows.push_back(std::move(row));
  }
  return rows;
}

std::map<std::string, std::vector<double>> country_samples(std::span<const AggregatedScore> rows) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : rows) out[r.country_code].push_back(r.mean_bias);
  return out;
}

// ---- comparisons ----------------------------------------------------------

std::string direction_label(const ComparisonCell& cell) {
  if (!cell.test) return "n/a";
  switch (cell.test->direction) {
    case Direction::AGreater:
      return fmt::format("{} > {}", cell.group_a, cell.group_b);
    case Direction::BGreater:
      return fmt::format("{} > {}", cell.group_b, cell.group_a);
    case Direction::None:
      break;
  }
  return fmt::format("{} = {}", cell.group_a, cell.group_b);
}

std::string_view to_string(Dimension d) noexcept {
  switch (d) {
    case Dimension::TopNSweep: return "topn";
    case Dimension::Country: return "country";
    case Dimension::WithinCountry: return "within";
    case Dimension::Topic: return "topic";
    case Dimension::Filter: return "filter";
  }
  return "?";
}

ComparisonReport compare_countries(const Dataset& data, const Scope& scope,
                                   std::span<const int> sweep) {
  if (sweep.empty()) throw AuditError(ErrorKind::InvalidArgument, "top-N sweep is empty");
  ComparisonReport report;
  report.dimension = sweep.size() > 1 ? Dimension::TopNSweep : Dimension::Country;
  report.parameters = describe(scope);
  report.parameters[0].second = fmt::format("{}", fmt::join(sweep, ","));
  for (int n : sweep) {
    Scope cell_scope = scope;
    cell_scope.top_n = n;
    const auto rows = aggregate(data, cell_scope);
    report.cells.push_back(compare_cell(fmt::format("top-{}", n), country_samples(rows)));
  }
  return report;
}

ComparisonReport compare_by_dimension(const Dataset& data, Dimension dimension, const Scope& scope) {
  if (dimension != Dimension::Topic && dimension != Dimension::Filter) {
    throw AuditError(ErrorKind::InvalidArgument, "compare_by_dimension takes topic or filter");
  }
  ComparisonReport report;
  report.dimension = dimension;
  report.parameters = describe(scope);

  std::vector<std::string> values;
  if (dimension == Dimension::Topic) {
    std::set<std::string> topics;
    for (const auto& s : data.serps) {
      auto it = data.query_topics.find(s.query_id);
      if (it != data.query_topics.end()) topics.insert(it->second);
    }
    for (const auto& t : topics) {
      if (scope.topics.empty() || scope.topics.contains(t)) values.push_back(t);
    }
  } else {
    std::set<SearchFilter> present;
    for (const auto& s : data.serps) present.insert(s.filter);
    for (auto f : kAllFilters) {
      if (present.contains(f) && (scope.filters.empty() || scope.filters.contains(f))) {
        values.emplace_back(to_string(f));
      }
    }
  }
  if (values.empty()) {
    throw AuditError(ErrorKind::EmptyScope, fmt::format("no {} values present", to_string(dimension)));
  }

  for (const auto& value : values) {
    Scope cell_scope = scope;
    if (dimension == Dimension::Topic) {
      cell_scope.topics = {value};
    } else {
      cell_scope.filters = {*parse_filter(value)};
    }
    try {
      report.cells.push_back(compare_cell(value, country_samples(aggregate(data, cell_scope))));
    } catch (const AuditError& e) {
      if (e.kind() != ErrorKind::EmptyScope) throw;
      ComparisonCell cell;
      cell.label = value;
      cell.error = fmt::format("{}: {}", to_string(e.kind()), e.what());
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

WithinCountryReport compare_within_country(const Dataset& data, const std::string& country,
                                           const Scope& scope) {
  const auto rows = aggregate(data, scope);
  std::map<std::string, std::vector<double>> by_location;
  for (const auto& r : rows) {
    if (r.country_code == country) by_location[r.location_id].push_back(r.mean_bias);
  }
  if (by_location.size() < 2) {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("country '{}' has {} geolocation(s) in scope, need at least 2",
                                 country, by_location.size()));
  }
  WithinCountryReport report;
  report.country = country;
  report.parameters = describe(scope);
  report.parameters.emplace_back("country", country);
  report.parameters.emplace_back("posthoc", "Conover-Iman, Bonferroni, when p < 0.05");
  std::vector<std::vector<double>> groups;
  for (auto& [location, values] : by_location) {
    report.locations.push_back(location);
    report.location_means.push_back(mean_of(values));
    groups.push_back(std::move(values));
  }
  report.test = kruskal_wallis(groups);
  if (report.test.p_value < 0.05) report.test.posthoc = conover_iman(groups, Adjustment::Bonferroni);
  return report;
}

std::vector<QueryFilterScore> rank_query_filters(const Dataset& data, const Scope& scope,
                                                 std::size_t limit) {
  const auto scored = score_scope(data, scope);
  std::map<std::pair<std::string, SearchFilter>, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < scored.serps.size(); ++i) {
    auto& [sum, n] = sums[{scored.serps[i]->query_id, scored.serps[i]->filter}];
    sum += scored.scores[i].value;
    ++n;
  }
  std::vector<QueryFilterScore> out;
  out.reserve(sums.size());
  for (const auto& [key, acc] : sums) {
    out.push_back({key.first, key.second, acc.first / static_cast<double>(acc.second), acc.second});
  }
  std::sort(out.begin(), out.end(), [](const QueryFilterScore& a, const QueryFilterScore& b) {
    if (a.mean_bias != b.mean_bias) return a.mean_bias > b.mean_bias;
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    return to_string(a.filter) < to_string(b.filter);
  });
  if (limit != 0 && out.size() > limit) out.resize(limit);
  return out;
}

std::vector<TrendPoint> temporal_trend(const Dataset& data, const Scope& scope) {
  const auto scored = score_scope(data, scope);
  std::map<std::pair<std::string, int>, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < scored.serps.size(); ++i) {
    auto& [sum, n] = sums[{scored.serps[i]->country_code, scored.serps[i]->day}];
    sum += scored.scores[i].value;
    ++n;
  }
  std::vector<TrendPoint> out;
  for (const auto& [key, acc] : sums) {
    out.push_back({key.first, key.second, acc.first / static_cast<double>(acc.second), acc.second});
  }
  return out;
}

RobustnessReport robustness_suite(const Dataset& data, const Scope& scope) {
  RobustnessReport report;
  const int sweep[] = {scope.top_n};
  for (auto policy : kAllPolicies) {
    Scope s = scope;
    s.policy = policy;
    report.conditions.emplace_back(policy, compare_countries(data, s, sweep));
  }
  return report;
}

std::vector<GbpMeasurement> measure_gbp(const Dataset& data, const std::string& location_x,
                                        const std::string& location_y, std::size_t top_k) {
  using Key = std::tuple<std::string, SearchFilter, Timestamp>;
  // [0] treatment x, [1] control x, [2] treatment y, [3] control y
  std::map<Key, std::array<const Serp*, 4>> groups;
  for (const auto& s : data.serps) {
    int slot = -1;
    if (s.location_id == location_x) slot = 0;
    if (s.location_id == location_y) slot = 2;
    if (slot < 0) continue;
    if (s.role == TwinRole::Control) ++slot;
    auto& g = groups.try_emplace({s.query_id, s.filter, s.timestamp}).first->second;
    g[static_cast<std::size_t>(slot)] = &s;
  }
  std::vector<GbpMeasurement> out;
  for (const auto& [key, g] : groups) {
    if (std::any_of(g.begin(), g.end(), [](const Serp* s) { return s == nullptr; })) continue;
    const auto score = gbp(VideoSet(g[0]->ids, top_k), VideoSet(g[1]->ids, top_k),
                           VideoSet(g[2]->ids, top_k), VideoSet(g[3]->ids, top_k));
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), score});
  }
  return out;
}

// ---- rendering ------------------------------------------------------------

std::optional<ReportFormat> parse_report_format(std::string_view text) noexcept {
  if (text == "md" || text == "markdown") return ReportFormat::Markdown;
  if (text == "tsv") return ReportFormat::Tsv;
  if (text == "json") return ReportFormat::Json;
  return std::nullopt;
}

std::string render(const ComparisonReport& report, ReportFormat format) {
  Document doc;
  switch (report.dimension) {
    case Dimension::TopNSweep:
    case Dimension::Country:
      doc.title = "Country comparison by top-N";
      break;
    case Dimension::Topic:
      doc.title = "Country comparison by topic";
      break;
    case Dimension::Filter:
      doc.title = "Country comparison by search filter";
      break;
    case Dimension::WithinCountry:
      doc.title = "Within-country comparison";
      break;
  }
  doc.parameters = report.parameters;
  doc.parameters.emplace_back("test", "Mann-Whitney U, two-sided, normal approximation");
  doc.sections.push_back(comparison_section("comparisons", report.cells));
  return render_document(doc, format);
}

std::string render(const WithinCountryReport& report, ReportFormat format) {
  Document doc;
  doc.title = fmt::format("Within-country comparison: {}", report.country);
  doc.parameters = report.parameters;
  doc.parameters.emplace_back("test", "Kruskal-Wallis H");

  Section summary{"kruskal-wallis", {"H", "df", "N", "p", "stars", "eta_squared"}, {}};
  summary.rows.push_back({num(report.test.h_statistic, 3), count(report.test.k - 1),
                          count(report.test.n), pval(report.test.p_value),
                          str(std::string(significance_stars(report.test.p_value))),
                          num(report.test.eta_squared, 3)});
  doc.sections.push_back(std::move(summary));

  Section locations{"geolocations", {"location", "mean_bias", "mean_rank"}, {}};
  for (std::size_t i = 0; i < report.locations.size(); ++i) {
    locations.rows.push_back({str(report.locations[i]), num(report.location_means[i], 4),
                              num(report.test.mean_ranks[i], 2)});
  }
  doc.sections.push_back(std::move(locations));

  Section posthoc{"posthoc",
                  {"pair", "t", "p_unadjusted", "p_adjusted", "stars", "direction"},
                  {}};
  for (const auto& pr : report.test.posthoc) {
    const auto& a = report.locations[pr.group_a];
    const auto& b = report.locations[pr.group_b];
    ComparisonCell cell{"", a, b, 0.0, 0.0, pr.test, ""};
    posthoc.rows.push_back({str(fmt::format("{} vs {}", a, b)), num(pr.test.statistic, 3),
                            pval(pr.p_unadjusted), pval(pr.test.p_value),
                            str(std::string(significance_stars(pr.test.p_value))),
                            str(direction_label(cell))});
  }
  doc.sections.push_back(std::move(posthoc));
  return render_document(doc, format);
}

std::string render(std::span<const AggregatedScore> rows, const Params& parameters,
                   ReportFormat format) {
  Document doc{"Aggregated bias scores per geolocation and day", parameters, {}};
  Section section{"scores", {"country", "location", "day", "batch", "mean_bias", "n_serps"}, {}};
  for (const auto& r : rows) {
    section.rows.push_back({str(r.country_code), str(r.location_id), integer(r.day),
                            r.time_of_day ? str(format_time_of_day(*r.time_of_day)) : str("all"),
                            num(r.mean_bias, 6), count(r.n_serps)});
  }
  doc.sections.push_back(std::move(section));
  return render_document(doc, format);
}

std::string render(std::span<const QueryFilterScore> rows, const Params& parameters,
                   ReportFormat format) {
  Document doc{"Query-filter combinations by mean bias", parameters, {}};
  Section section{"ranking", {"rank", "query_id", "filter", "mean_bias", "n_serps"}, {}};
  long long rank = 0;
  for (const auto& r : rows) {
    section.rows.push_back({integer(++rank), str(r.query_id), str(std::string(to_string(r.filter))),
                            num(r.mean_bias, 4), count(r.n_serps)});
  }
  doc.sections.push_back(std::move(section));
  return render_document(doc, format);
}

std::string render(std::span<const TrendPoint> rows, const Params& parameters, ReportFormat format) {
  Document doc{"Daily mean bias per country", parameters, {}};
  Section section{"trend", {"country", "day", "mean_bias", "n_serps"}, {}};
  for (const auto& r : rows) {
    section.rows.push_back({str(r.country), integer(r.day), num(r.mean_bias, 4), count(r.n_serps)});
  }
  doc.sections.push_back(std::move(section));
  return render_document(doc, format);
}

std::string render(const RobustnessReport& report, ReportFormat format) {
  Document doc;
  doc.title = "Robustness of the country comparison to the origins label";
  if (!report.conditions.empty()) {
    doc.parameters = report.conditions.front().second.parameters;
    std::erase_if(doc.parameters, [](const auto& p) { return p.first == "policy"; });
  }
  doc.parameters.emplace_back("conditions",
                              "default (origins neutral), exclude-origins, origins-as-misinfo");
  Section table{"summary", {"condition", "p", "stars", "r", "direction"}, {}};
  for (const auto& [policy, r] : report.conditions) {
    const auto& cell = r.cells.front();
    if (cell.test) {
      table.rows.push_back({str(std::string(to_string(policy))), pval(cell.test->p_value),
                            str(std::string(significance_stars(cell.test->p_value))),
                            num(cell.test->effect_size, 3), str(direction_label(cell))});
    } else {
      table.rows.push_back({str(std::string(to_string(policy))), blank(), blank(), blank(),
                            str(cell.error)});
    }
  }
  doc.sections.push_back(std::move(table));
  for (const auto& [policy, r] : report.conditions) {
    doc.sections.push_back(comparison_section(std::string(to_string(policy)), r.cells));
  }
  return render_document(doc, format);
}

}  // namespace serp_audit
