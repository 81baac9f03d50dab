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

// On-disk formats exchanged between the collector and the analysis stage.
//
// SERP log: one header line, then one tab-separated record per line:
//
//   timestamp  bot_id  twin_role  location_id  country_code  query_id
//   filter  rank  video_id  experiment_day
//
// Labels file: header "video_id,label_code", then one "<id>,<code>" per line
// with code in {-1,0,1,2,3,4,5}.
//
// Plans are JSON documents (see plan_to_json).

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/model.hpp"

namespace serp_audit {

inline constexpr std::string_view kSerpLogHeader =
    "timestamp\tbot_id\ttwin_role\tlocation_id\tcountry_code\tquery_id\tfilter\trank\tvideo_"
    "id\texperiment_day";
inline constexpr std::string_view kLabelsHeader = "video_id,label_code";

void write_serp_log(std::ostream& out, std::span<const SerpRecord> records);
void write_serp_log(const std::filesystem::path& path, std::span<const SerpRecord> records);

// Throws SchemaError naming the offending line. Checks each row's field
// invariants only; cross-row checks (rank contiguity) live in ingest().
std::vector<SerpRecord> read_serp_log(std::istream& in);
std::vector<SerpRecord> read_serp_log(const std::filesystem::path& path);

// Rows are sorted by video id so the file is reproducible.
void write_labels(std::ostream& out, const LabelMap& labels);
void write_labels(const std::filesystem::path& path, const LabelMap& labels);

// Throws SchemaError on malformed rows, out-of-range codes or a video id
// listed twice with different labels.
LabelMap read_labels(std::istream& in);
LabelMap read_labels(const std::filesystem::path& path);

nlohmann::json plan_to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& j);

ExperimentPlan load_plan(const std::filesystem::path& path);
void save_plan(const std::filesystem::path& path, const ExperimentPlan& plan);

nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace serp_audit
