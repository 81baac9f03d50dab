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

// Deterministic synthetic search engine. Every SERP is built from a base
// ranking per (query, filter), with a planted fraction of slots swapped for
// geolocation-specific videos and a tunable amount of per-request noise.
// Because the geolocation sub-pools are disjoint, the expected overlap
// between any two SERPs has a closed form, which is what the GBP recovery
// tests lean on.
//
// Seed tree (all via derive_seed):
//   root -> "catalog" -> (query, filter)             base pool order and labels
//   root -> "catalog" -> (query, filter, loc, phase) geolocation sub-pool labels
//   root -> "search"  -> "mask" -> (query, filter)   which slots get swapped
//   root -> "search"  -> "noise" -> full request     per-request redraws

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "serp_audit/collector.hpp"
#include "serp_audit/model.hpp"

namespace serp_audit {

// A probability distribution over the seven annotation labels, indexed in
// kAllLabels order.
class LabelMix {
 public:
  // Throws InvalidDistribution unless every weight is in [0, 1] and the
  // weights sum to 1 within 1e-9.
  explicit LabelMix(const std::array<double, 7>& weights);

  static LabelMix uniform_default();
  static LabelMix only(AnnotationLabel label);

  double weight(AnnotationLabel label) const noexcept;
  const std::array<double, 7>& weights() const noexcept { return weights_; }

  // Moves a |t| share of the remaining mass onto Supporting (t > 0) or
  // Opposing (t < 0), scaling every other label down proportionally.
  // Throws InvalidArgument for t outside [-1, 1].
  LabelMix tilted(double t) const;

  // Exact label counts for `size` videos by largest remainder; ties in the
  // remainder go to the earlier label.
  std::array<std::size_t, 7> counts(std::size_t size) const;

 private:
  std::array<double, 7> weights_;
};

struct GeoPersonalization {
  double swap_fraction = 0.0;  // share of the top_n slots replaced
  double misinfo_tilt = 0.0;   // applied to the sub-pool label mix
  int tilt_start_day = 1;      // days before this use the untilted mix
  std::vector<SearchFilter> tilt_filters;  // empty means every filter
};

struct PersonalizationConfig {
  std::map<std::string, GeoPersonalization> by_location;

  // Settings for a location; all-zero if the location is not listed.
  GeoPersonalization at(const std::string& location_id) const;
};

enum class NoiseMode {
  // floor(epsilon * n) slots, plus one more with probability equal to the
  // fractional part, chosen uniformly without replacement.
  FixedCount,
  // Every slot independently with probability epsilon.
  PerSlot,
};

std::string_view to_string(NoiseMode mode) noexcept;
std::optional<NoiseMode> parse_noise_mode(std::string_view text) noexcept;

struct NoiseConfig {
  double epsilon = 0.0;
  NoiseMode mode = NoiseMode::FixedCount;
};

inline constexpr std::size_t kDefaultPoolSize = 500;

class VideoCatalog {
 public:
  // Base pool for (query, filter): the first top_n ids are the base ranking,
  // the rest are the reserve that noise redraws come from.
  const std::vector<std::string>* pool(const std::string& query_id, SearchFilter filter) const;
  // Geolocation sub-pool; phase 1 holds the videos served from
  // tilt_start_day onward.
  const std::vector<std::string>* geo_pool(const std::string& query_id, SearchFilter filter,
                                           const std::string& location_id, int phase) const;
  const LabelMap& labels() const noexcept { return labels_; }
  std::size_t top_n() const noexcept { return top_n_; }

 private:
  friend VideoCatalog synth_catalog(const ExperimentPlan&, std::uint64_t, const LabelMix&,
                                    const PersonalizationConfig&, std::size_t);
  std::size_t top_n_ = 0;
  std::map<std::pair<std::string, SearchFilter>, std::vector<std::string>> pools_;
  std::map<std::tuple<std::string, SearchFilter, std::string, int>, std::vector<std::string>>
      geo_pools_;
  LabelMap labels_;
};

// Pools of `pool_size` videos per (query, filter), labels stratified from
// `mix` and shuffled; one sub-pool of top_n videos per (query, filter,
// location, phase) for every location with a positive swap fraction, labels
// from the tilted mix. Throws InvalidArgument if pool_size < top_n.
VideoCatalog synth_catalog(const ExperimentPlan& plan, std::uint64_t seed, const LabelMix& mix,
                           const PersonalizationConfig& personalization = {},
                           std::size_t pool_size = kDefaultPoolSize);

struct SynthRequest {
  std::string query_id;
  SearchFilter filter = SearchFilter::Relevance;
  std::string location_id;
  std::string bot_id;
  Timestamp time;
  int day = 1;
};

// Exactly catalog.top_n() distinct ids. Throws UnknownQuery if the catalog
// has no pool for (query, filter).
std::vector<std::string> synth_search(const SynthRequest& request, const VideoCatalog& catalog,
                                      const PersonalizationConfig& personalization,
                                      const NoiseConfig& noise, std::uint64_t seed);

// Swap fraction at one location (the other at 0) whose expected GBP is
// closest to d for lists of length n: GBP = 2r / (n + r) with r swapped
// slots, so r = d n / (2 - d).
double swap_fraction_for_gbp(double d, std::size_t n);

struct InjectedFault {
  std::string bot_id;
  int day = 0;           // 0 matches every day
  std::string query_id;  // empty matches every query
  bool unavailable = false;  // abort the run instead of failing the request
};

class SyntheticBackend : public SearchBackend {
 public:
  SyntheticBackend(const VideoCatalog& catalog, PersonalizationConfig personalization,
                   NoiseConfig noise, std::uint64_t seed, std::vector<InjectedFault> faults = {});
  std::vector<std::string> search(const SearchRequest& request) override;

 private:
  const VideoCatalog& catalog_;
  PersonalizationConfig personalization_;
  NoiseConfig noise_;
  std::uint64_t seed_;
  std::vector<InjectedFault> faults_;
};

// Declarative scenario file, see README for the schema.
struct Scenario {
  ExperimentPlan plan;
  std::uint64_t seed = 0;
  std::size_t pool_size = kDefaultPoolSize;
  LabelMix label_mix = LabelMix::uniform_default();
  NoiseConfig noise;
  PersonalizationConfig personalization;
  std::vector<InjectedFault> faults;
  RatePolicy rate_policy;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

struct SimulationOutput {
  VideoCatalog catalog;
  RunResult run;
};

// Builds the catalog from derive_seed(seed, "catalog") and runs the plan
// against a SyntheticBackend seeded with derive_seed(seed, "search").
SimulationOutput simulate(const Scenario& scenario);

}  // namespace serp_audit
