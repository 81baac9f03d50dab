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

#include "serp_audit/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace serp_audit {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

int parse_int(std::string_view text, std::size_t line, std::string_view field) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw SchemaError(line, fmt::format("{} '{}' is not an integer", field, text));
  }
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AuditError(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AuditError(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

void require_text(std::string_view value, std::size_t line, std::string_view field) {
  if (value.empty()) throw SchemaError(line, fmt::format("{} is empty", field));
}

}  // namespace

void write_serp_log(std::ostream& out, std::span<const SerpRecord> records) {
  out << kSerpLogHeader << '\n';
  for (const auto& r : records) {
    out << format_timestamp(r.timestamp) << '\t' << r.bot_id << '\t' << to_string(r.twin_role)
        << '\t' << r.location_id << '\t' << r.country_code << '\t' << r.query_id << '\t'
        << to_string(r.filter) << '\t' << r.rank << '\t' << r.video_id << '\t'
        << r.experiment_day << '\n';
  }
}

void write_serp_log(const std::filesystem::path& path, std::span<const SerpRecord> records) {
  auto out = open_out(path);
  write_serp_log(out, records);
}

std::vector<SerpRecord> read_serp_log(std::istream& in) {
  std::vector<SerpRecord> records;
  std::string buffer;
  std::size_t line_no = 0;
  if (!std::getline(in, buffer)) throw SchemaError(1, "missing header");
  ++line_no;
  if (chomp(buffer) != kSerpLogHeader) {
    throw SchemaError(line_no, "unexpected header");
  }
  while (std::getline(in, buffer)) {
    ++line_no;
    const auto line = chomp(buffer);
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 10) {
      throw SchemaError(line_no, fmt::format("expected 10 fields, found {}", f.size()));
    }
    SerpRecord r;
    try {
      r.timestamp = parse_timestamp(f[0]);
    } catch (const AuditError& e) {
      throw SchemaError(line_no, e.what());
    }
    require_text(f[1], line_no, "bot_id");
    r.bot_id = f[1];
    auto role = parse_twin_role(f[2]);
    if (!role) throw SchemaError(line_no, fmt::format("unknown twin_role '{}'", f[2]));
    r.twin_role = *role;
    require_text(f[3], line_no, "location_id");
    r.location_id = f[3];
    if (f[4].size() != 2) throw SchemaError(line_no, fmt::format("bad country_code '{}'", f[4]));
    r.country_code = f[4];
    require_text(f[5], line_no, "query_id");
    r.query_id = f[5];
    auto filter = parse_filter(f[6]);
    if (!filter) throw SchemaError(line_no, fmt::format("unknown filter '{}'", f[6]));
    r.filter = *filter;
    r.rank = parse_int(f[7], line_no, "rank");
    if (r.rank < 1 || r.rank > kMaxRank) {
      throw SchemaError(line_no, fmt::format("rank {} outside [1, {}]", r.rank, kMaxRank));
    }
    require_text(f[8], line_no, "video_id");
    r.video_id = f[8];
    r.experiment_day = parse_int(f[9], line_no, "experiment_day");
    if (r.experiment_day < 1) throw SchemaError(line_no, "experiment_day must be >= 1");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SerpRecord> read_serp_log(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_serp_log(in);
}

void write_labels(std::ostream& out, const LabelMap& labels) {
  std::vector<std::pair<std::string_view, AnnotationLabel>> rows(labels.begin(), labels.end());
  std::sort(rows.begin(), rows.end());
  out << kLabelsHeader << '\n';
  for (const auto& [id, label] : rows) out << id << ',' << code(label) << '\n';
}

void write_labels(const std::filesystem::path& path, const LabelMap& labels) {
  auto out = open_out(path);
  write_labels(out, labels);
}

LabelMap read_labels(std::istream& in) {
  LabelMap labels;
  std::string buffer;
  std::size_t line_no = 1;
  if (!std::getline(in, buffer)) throw SchemaError(1, "missing header");
  if (chomp(buffer) != kLabelsHeader) throw SchemaError(1, "unexpected header");
  while (std::getline(in, buffer)) {
    ++line_no;
    const auto line = chomp(buffer);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 2) {
      throw SchemaError(line_no, fmt::format("expected 2 fields, found {}", f.size()));
    }
    require_text(f[0], line_no, "video_id");
    const int c = parse_int(f[1], line_no, "label_code");
    auto label = label_from_code(c);
    if (!label) throw SchemaError(line_no, fmt::format("label_code {} outside [-1, 5]", c));
    auto [it, inserted] = labels.emplace(std::string(f[0]), *label);
    if (!inserted && it->second != *label) {
      throw SchemaError(line_no, fmt::format("conflicting labels for '{}'", f[0]));
    }
  }
  return labels;
}

LabelMap read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_labels(in);
}

nlohmann::json plan_to_json(const ExperimentPlan& plan) {
  using nlohmann::json;
  json j;
  j["start_date"] = format_date(plan.start_date);
  j["days"] = plan.days;
  j["top_n_extract"] = plan.top_n_extract;
  j["seed"] = plan.seed;
  j["batch_times"] = json::array();
  for (auto t : plan.batch_times) j["batch_times"].push_back(format_time_of_day(t));
  j["filters"] = json::array();
  for (auto f : plan.filters) j["filters"].push_back(std::string(to_string(f)));
  j["geolocations"] = json::array();
  for (const auto& g : plan.geolocations) {
    j["geolocations"].push_back(
        {{"location_id", g.location_id}, {"country_code", g.country_code}, {"city_name", g.city_name}});
  }
  j["bots"] = json::array();
  for (const auto& b : plan.bots) {
    j["bots"].push_back({{"bot_id", b.bot_id},
                         {"location_id", b.location_id},
                         {"twin_role", std::string(to_string(b.role))}});
  }
  j["queries"] = json::array();
  for (const auto& q : plan.queries) {
    j["queries"].push_back({{"query_id", q.query_id},
                            {"topic", q.topic},
                            {"raw_text", q.raw_text},
                            {"formatted_text", q.formatted_text}});
  }
  return j;
}

ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan plan;
  try {
    plan.start_date = parse_date(j.at("start_date").get<std::string>());
    plan.days = j.at("days").get<int>();
    plan.top_n_extract = j.value("top_n_extract", kMaxRank);
    plan.seed = j.value("seed", std::uint64_t{0});
    for (const auto& t : j.at("batch_times")) plan.batch_times.push_back(parse_time_of_day(t.get<std::string>()));
    for (const auto& f : j.at("filters")) {
      auto filter = parse_filter(f.get<std::string>());
      if (!filter) {
        throw AuditError(ErrorKind::InvalidArgument,
                         fmt::format("unknown filter '{}'", f.get<std::string>()));
      }
      plan.filters.push_back(*filter);
    }
    for (const auto& g : j.at("geolocations")) {
      plan.geolocations.push_back({g.at("location_id").get<std::string>(),
                                   g.at("country_code").get<std::string>(),
                                   g.value("city_name", std::string{})});
    }
    if (j.contains("bots")) {
      for (const auto& b : j.at("bots")) {
        auto role = parse_twin_role(b.at("twin_role").get<std::string>());
        if (!role) throw AuditError(ErrorKind::InvalidArgument, "unknown twin_role");
        plan.bots.push_back({b.at("bot_id").get<std::string>(),
                             b.at("location_id").get<std::string>(), *role});
      }
    } else {
      plan.bots = make_twin_bots(plan.geolocations);
    }
    for (const auto& q : j.at("queries")) {
      plan.queries.push_back({q.at("query_id").get<std::string>(), q.value("topic", std::string{}),
                              q.at("raw_text").get<std::string>(),
                              q.value("formatted_text", std::string{})});
    }
  } catch (const nlohmann::json::exception& e) {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("malformed plan: {}", e.what()));
  }
  return plan;
}

nlohmann::json load_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

ExperimentPlan load_plan(const std::filesystem::path& path) { return plan_from_json(load_json(path)); }

void save_plan(const std::filesystem::path& path, const ExperimentPlan& plan) {
  auto out = open_out(path);
  out << plan_to_json(plan).dump(2) << '\n';
}

}  // namespace serp_audit
