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

#include "serp_audit/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "serp_audit/io.hpp"
#include "serp_audit/rng.hpp"

namespace serp_audit {

namespace {

std::size_t label_index(AnnotationLabel label) {
  return static_cast<std::size_t>(code(label) + 1);
}

bool filter_listed(const std::vector<SearchFilter>& filters, SearchFilter f) {
  return filters.empty() || std::find(filters.begin(), filters.end(), f) != filters.end();
}

int phase_of(const GeoPersonalization& g, int day) {
  return (g.tilt_start_day > 1 && day >= g.tilt_start_day) ? 1 : 0;
}

bool phase_is_tilted(const GeoPersonalization& g, int phase) {
  return phase == 1 || g.tilt_start_day <= 1;
}

std::vector<AnnotationLabel> stratified_labels(const LabelMix& mix, std::size_t size, Rng& rng) {
  const auto counts = mix.counts(size);
  std::vector<AnnotationLabel> labels;
  labels.reserve(size);
  for (std::size_t i = 0; i < counts.size(); ++i) labels.insert(labels.end(), counts[i], kAllLabels[i]);
  rng.shuffle(labels.begin(), labels.end());
  return labels;
}

// First `count` entries of a uniform random permutation of [0, n).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  count = std::min(count, n);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

double checked_unit(const nlohmann::json& j, const char* key, double fallback, double lo = 0.0,
                    double hi = 1.0) {
  const double v = j.value(key, fallback);
  if (!(v >= lo && v <= hi)) {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("'{}' = {} is outside [{}, {}]", key, v, lo, hi));
  }
  return v;
}

GeoPersonalization geo_from_json(const nlohmann::json& j) {
  GeoPersonalization g;
  g.swap_fraction = checked_unit(j, "swap_fraction", 0.0);
  g.misinfo_tilt = checked_unit(j, "misinfo_tilt", 0.0, -1.0, 1.0);
  g.tilt_start_day = j.value("tilt_start_day", 1);
  if (j.contains("tilt_filters")) {
    for (const auto& f : j.at("tilt_filters")) {
      auto parsed = parse_filter(f.get<std::string>());
      if (!parsed) throw AuditError(ErrorKind::InvalidArgument, "unknown filter in tilt_filters");
      g.tilt_filters.push_back(*parsed);
    }
  }
  return g;
}

nlohmann::json to_json(const GeoPersonalization& g) {
  nlohmann::json j = {{"swap_fraction", g.swap_fraction},
                      {"misinfo_tilt", g.misinfo_tilt},
                      {"tilt_start_day", g.tilt_start_day}};
  if (!g.tilt_filters.empty()) {
    auto& list = j["tilt_filters"] = nlohmann::json::array();
    for (auto f : g.tilt_filters) list.push_back(std::string(to_string(f)));
  }
  return j;
}

}  // namespace

LabelMix::LabelMix(const std::array<double, 7>& weights) : weights_(weights) {
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw AuditError(ErrorKind::InvalidDistribution,
                       fmt::format("label weight {} is outside [0, 1]", w));
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw AuditError(ErrorKind::InvalidDistribution,
                     fmt::format("label weights sum to {}, expected 1", total));
  }
}

LabelMix LabelMix::uniform_default() {
  // opposing, neutral, supporting, origins, irrelevant, non_english, inaccessible
  return LabelMix({0.30, 0.25, 0.25, 0.10, 0.06, 0.02, 0.02});
}

LabelMix LabelMix::only(AnnotationLabel label) {
  std::array<double, 7> w{};
  w[label_index(label)] = 1.0;
  return LabelMix(w);
}

double LabelMix::weight(AnnotationLabel label) const noexcept {
  return weights_[label_index(label)];
}

LabelMix LabelMix::tilted(double t) const {
  if (!(t >= -1.0 && t <= 1.0)) {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("tilt {} is outside [-1, 1]", t));
  }
  if (t == 0.0) return *this;
  const auto target = label_index(t > 0 ? AnnotationLabel::Supporting : AnnotationLabel::Opposing);
  const double share = std::abs(t);
  std::array<double, 7> w{};
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = weights_[i] * (1.0 - share);
  w[target] = weights_[target] + share * (1.0 - weights_[target]);
  // Renormalize away rounding so the constructor's tolerance always holds.
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return LabelMix(w);
}

std::array<std::size_t, 7> LabelMix::counts(std::size_t size) const {
  std::array<std::size_t, 7> out{};
  std::array<double, 7> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double exact = weights_[i] * static_cast<double>(size);
    out[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::array<std::size_t, 7> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < size; ++i, ++assigned) ++out[order[i % order.size()]];
  return out;
}

GeoPersonalization PersonalizationConfig::at(const std::string& location_id) const {
  auto it = by_location.find(location_id);
  return it == by_location.end() ? GeoPersonalization{} : it->second;
}

std::string_view to_string(NoiseMode mode) noexcept {
  return mode == NoiseMode::FixedCount ? "fixed-count" : "per-slot";
}

std::optional<NoiseMode> parse_noise_mode(std::string_view text) noexcept {
  if (text == "fixed-count") return NoiseMode::FixedCount;
  if (text == "per-slot") return NoiseMode::PerSlot;
  return std::nullopt;
}

const std::vector<std::string>* VideoCatalog::pool(const std::string& query_id,
                                                   SearchFilter filter) const {
  auto it = pools_.find({query_id, filter});
  return it == pools_.end() ? nullptr : &it->second;
}

const std::vector<std::string>* VideoCatalog::geo_pool(const std::string& query_id,
                                                       SearchFilter filter,
                                                       const std::string& location_id,
                                                       int phase) const {
  auto it = geo_pools_.find({query_id, filter, location_id, phase});
  return it == geo_pools_.end() ? nullptr : &it->second;
}

VideoCatalog synth_catalog(const ExperimentPlan& plan, std::uint64_t seed, const LabelMix& mix,
                           const PersonalizationConfig& personalization, std::size_t pool_size) {
  const auto top_n = static_cast<std::size_t>(plan.top_n_extract);
  if (pool_size < top_n) {
    throw AuditError(ErrorKind::InvalidArgument,
                     fmt::format("pool size {} is smaller than top_n_extract {}", pool_size, top_n));
  }
  VideoCatalog catalog;
  catalog.top_n_ = top_n;
  for (const auto& query : plan.queries) {
    for (auto filter : plan.filters) {
      const std::string filter_name(to_string(filter));
      Rng rng(derive_seed(seed, {"pool", query.query_id, filter_name}));
      const auto labels = stratified_labels(mix, pool_size, rng);
      auto& ids = catalog.pools_[{query.query_id, filter}];
      ids.reserve(pool_size);
      for (std::size_t i = 0; i < pool_size; ++i) {
        ids.push_back(fmt::format("{}-{}-{:04d}", query.query_id, filter_name, i));
        catalog.labels_.emplace(ids.back(), labels[i]);
      }

      for (const auto& location : plan.geolocations) {
        const auto g = personalization.at(location.location_id);
        if (g.swap_fraction <= 0.0) continue;
        const int phases = g.tilt_start_day > 1 ? 2 : 1;
        for (int phase = 0; phase < phases; ++phase) {
          const bool tilt = phase_is_tilted(g, phase) && filter_listed(g.tilt_filters, filter);
          const LabelMix geo_mix = tilt ? mix.tilted(g.misinfo_tilt) : mix;
          Rng geo_rng(derive_seed(
              seed, {"geo", query.query_id, filter_name, location.location_id, phase == 0 ? "0" : "1"}));
          const auto geo_labels = stratified_labels(geo_mix, top_n, geo_rng);
          auto& geo_ids = catalog.geo_pools_[{query.query_id, filter, location.location_id, phase}];
          geo_ids.reserve(top_n);
          for (std::size_t i = 0; i < top_n; ++i) {
            geo_ids.push_back(fmt::format("{}-{}-{}-p{}-{:02d}", query.query_id, filter_name,
                                          location.location_id, phase, i));
            catalog.labels_.emplace(geo_ids.back(), geo_labels[i]);
          }
        }
      }
    }
  }
  return catalog;
}

std::vector<std::string> synth_search(const SynthRequest& request, const VideoCatalog& catalog,
                                      const PersonalizationConfig& personalization,
                                      const NoiseConfig& noise, std::uint64_t seed) {
  const auto* pool = catalog.pool(request.query_id, request.filter);
  if (pool == nullptr) {
    throw AuditError(ErrorKind::UnknownQuery,
                     fmt::format("catalog has no pool for query '{}' under filter '{}'",
                                 request.query_id, to_string(request.filter)));
  }
  const std::size_t n = catalog.top_n();
  const std::string filter_name(to_string(request.filter));
  std::vector<std::string> serp(pool->begin(), pool->begin() + static_cast<std::ptrdiff_t>(n));

  const auto g = personalization.at(request.location_id);
  const auto swapped = std::min(
      n, static_cast<std::size_t>(std::llround(g.swap_fraction * static_cast<double>(n))));
  if (swapped > 0) {
    const auto* geo = catalog.geo_pool(request.query_id, request.filter, request.location_id,
                                       phase_of(g, request.day));
    if (geo == nullptr) {
      throw AuditError(ErrorKind::InvalidArgument,
                       fmt::format("catalog has no sub-pool for location '{}'", request.location_id));
    }
    // The slot order is shared by every location so two locations' swapped
    // slots are nested; that nesting is what makes the overlap closed-form.
    Rng mask_rng(derive_seed(seed, {"mask", request.query_id, filter_name}));
    const auto slots = sample_indices(n, swapped, mask_rng);
    for (std::size_t j = 0; j < swapped; ++j) serp[slots[j]] = (*geo)[j];
  }

  if (noise.epsilon > 0.0) {
    Rng rng(derive_seed(seed, {"noise", request.query_id, filter_name, request.location_id,
                               request.bot_id, format_timestamp(request.time)}));
    std::vector<std::size_t> slots;
    if (noise.mode == NoiseMode::FixedCount) {
      const double expected = noise.epsilon * static_cast<double>(n);
      auto count = static_cast<std::size_t>(std::floor(expected));
      if (rng.bernoulli(expected - std::floor(expected))) ++count;
      slots = sample_indices(n, count, rng);
    } else {
      for (std::size_t s = 0; s < n; ++s) {
        if (rng.bernoulli(noise.epsilon)) slots.push_back(s);
      }
    }
    const std::size_t reserve = pool->size() - n;
    const auto picks = sample_indices(reserve, slots.size(), rng);
    for (std::size_t j = 0; j < picks.size(); ++j) serp[slots[j]] = (*pool)[n + picks[j]];
  }
  return serp;
}

double swap_fraction_for_gbp(double d, std::size_t n) {
  if (!(d >= 0.0 && d <= 1.0)) {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("target GBP {} is outside [0, 1]", d));
  }
  const double r = std::round(d * static_cast<double>(n) / (2.0 - d));
  return r / static_cast<double>(n);
}

SyntheticBackend::SyntheticBackend(const VideoCatalog& catalog, PersonalizationConfig personalization,
                                   NoiseConfig noise, std::uint64_t seed,
                                   std::vector<InjectedFault> faults)
    : catalog_(catalog),
      personalization_(std::move(personalization)),
      noise_(noise),
      seed_(seed),
      faults_(std::move(faults)) {}

std::vector<std::string> SyntheticBackend::search(const SearchRequest& request) {
  for (const auto& f : faults_) {
    if (f.bot_id != request.bot.bot_id) continue;
    if (f.day != 0 && f.day != request.day) continue;
    if (!f.query_id.empty() && f.query_id != request.query.query_id) continue;
    if (f.unavailable) {
      throw AuditError(ErrorKind::BackendUnavailable, "injected outage");
    }
    throw AuditError(ErrorKind::BackendFailure,
                     fmt::format("injected failure for {}", request.bot.bot_id));
  }
  return synth_search({request.query.query_id, request.filter, request.location.location_id,
                       request.bot.bot_id, request.time, request.day},
                      catalog_, personalization_, noise_, seed_);
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  try {
    if (!j.contains("plan") || (j.at("plan").is_string() && j.at("plan") == "builtin")) {
      s.plan = builtin_plan();
    } else {
      s.plan = plan_from_json(j.at("plan"));
      complete_query_text(s.plan);
    }
    s.seed = j.value("seed", std::uint64_t{0});
    s.plan.seed = s.seed;
    s.pool_size = j.value("pool_size", kDefaultPoolSize);
    if (j.contains("top_n_extract")) s.plan.top_n_extract = j.at("top_n_extract").get<int>();

    if (j.contains("label_mix")) {
      std::array<double, 7> w{};
      for (const auto& [name, weight] : j.at("label_mix").items()) {
        auto label = parse_label_name(name);
        if (!label) {
          throw AuditError(ErrorKind::InvalidDistribution, fmt::format("unknown label '{}'", name));
        }
        w[label_index(*label)] = weight.get<double>();
      }
      s.label_mix = LabelMix(w);
    }

    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      s.noise.epsilon = checked_unit(n, "epsilon", 0.0);
      const auto mode = n.value("mode", std::string("fixed-count"));
      auto parsed = parse_noise_mode(mode);
      if (!parsed) throw AuditError(ErrorKind::InvalidArgument, fmt::format("unknown noise mode '{}'", mode));
      s.noise.mode = *parsed;
    }

    if (j.contains("personalization_by_country")) {
      for (const auto& [country, cfg] : j.at("personalization_by_country").items()) {
        const auto g = geo_from_json(cfg);
        bool matched = false;
        for (const auto& loc : s.plan.geolocations) {
          if (loc.country_code == country) {
            s.personalization.by_location[loc.location_id] = g;
            matched = true;
          }
        }
        if (!matched) {
          throw AuditError(ErrorKind::InvalidArgument,
                           fmt::format("no geolocation in country '{}'", country));
        }
      }
    }
    if (j.contains("personalization")) {
      for (const auto& [location, cfg] : j.at("personalization").items()) {
        if (s.plan.find_location(location) == nullptr) {
          throw AuditError(ErrorKind::InvalidArgument,
                           fmt::format("unknown geolocation '{}'", location));
        }
        s.personalization.by_location[location] = geo_from_json(cfg);
      }
    }

    if (j.contains("faults")) {
      for (const auto& f : j.at("faults")) {
        s.faults.push_back({f.at("bot_id").get<std::string>(), f.value("day", 0),
                            f.value("query_id", std::string{}), f.value("unavailable", false)});
      }
    }
    if (j.contains("rate_policy")) s.rate_policy = rate_policy_from_json(j.at("rate_policy"));
  } catch (const nlohmann::json::exception& e) {
    throw AuditError(ErrorKind::InvalidArgument, fmt::format("malformed scenario: {}", e.what()));
  }
  return s;
}

nlohmann::json to_json(const Scenario& s) {
  nlohmann::json j;
  j["plan"] = plan_to_json(s.plan);
  j["seed"] = s.seed;
  j["pool_size"] = s.pool_size;
  auto& mix = j["label_mix"] = nlohmann::json::object();
  for (auto label : kAllLabels) mix[std::string(to_string(label))] = s.label_mix.weight(label);
  j["noise"] = {{"epsilon", s.noise.epsilon}, {"mode", std::string(to_string(s.noise.mode))}};
  auto& pers = j["personalization"] = nlohmann::json::object();
  for (const auto& [loc, g] : s.personalization.by_location) pers[loc] = to_json(g);
  auto& faults = j["faults"] = nlohmann::json::array();
  for (const auto& f : s.faults) {
    faults.push_back({{"bot_id", f.bot_id}, {"day", f.day}, {"query_id", f.query_id},
                      {"unavailable", f.unavailable}});
  }
  j["rate_policy"] = to_json(s.rate_policy);
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(load_json(path));
}

SimulationOutput simulate(const Scenario& scenario) {
  auto validated = validate_plan(scenario.plan);
  SimulationOutput out{synth_catalog(scenario.plan, derive_seed(scenario.seed, "catalog"),
                                     scenario.label_mix, scenario.personalization,
                                     scenario.pool_size),
                       {}};
  SyntheticBackend backend(out.catalog, scenario.personalization, scenario.noise,
                           derive_seed(scenario.seed, "search"), scenario.faults);
  out.run = run_experiment(validated, backend, scenario.rate_policy);
  return out;
}

}  // namespace serp_audit
