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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "serp_audit/model.hpp"

namespace serp_audit {

// Position of one result toward misinformation.
enum class Stance : int { Opposing = -1, Neither = 0, Supporting = 1 };

constexpr int value(Stance s) noexcept { return static_cast<int>(s); }

// Maps a label to its stance under `policy`. std::nullopt means the
// result is removed from the SERP before scoring (origins under
// ExcludeOrigins).
std::optional<Stance> stance_of(AnnotationLabel label, StancePolicy policy) noexcept;

// Rank-weighted misinformation bias of one ranked list.
//
// With x_r the stance at rank r and n results, the score is
//
//   sum_r x_r * (n - r + 1) / (n (n + 1) / 2)
//
// so the top result carries weight n and the last weight 1. The
// numerator and denominator are kept as exact integers; `value` is their
// single rounded quotient.
struct BiasScore {
  double value = 0.0;
  int n = 0;
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
};

// Throws AuditError(EmptyList) when `stances` is empty.
BiasScore bias_score(std::span<const Stance> stances);

// Scores the first `n` results of `serp` (fewer if the SERP is shorter).
// Under ExcludeOrigins the origins results are dropped first and the
// truncation applies to what remains. Throws MissingLabel when a result
// that would be scored has no label and EmptyAfterExclusion when nothing
// is left to score.
BiasScore bias_score_topn(std::span<const std::string> serp, const LabelMap& labels, int n,
                          StancePolicy policy);

// A SERP compared as a set of video ids; rank is ignored.
class VideoSet {
 public:
  VideoSet() = default;
  // Takes the first `top_k` ids of a ranked list.
  explicit VideoSet(std::span<const std::string> ranked,
                    std::size_t top_k = std::numeric_limits<std::size_t>::max());
  VideoSet(std::initializer_list<std::string> ids);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;  // sorted, unique
};

// |a ∩ b| / |a ∪ b|, and 1.0 when both sets are empty.
double jaccard(const VideoSet& a, const VideoSet& b);

// Geolocation-based personalization between locations x and y.
//   noise_x  = J(treatment_x, control_x)
//   baseline = min(noise_x, noise_y)
//   diff     = J(treatment_x, treatment_y)
//   value    = baseline - diff      (not clamped; may dip below 0)
struct GbpScore {
  double value = 0.0;
  double noise_x = 1.0;
  double noise_y = 1.0;
  double baseline = 1.0;
  double diff = 1.0;
};

GbpScore gbp(const VideoSet& treatment_x, const VideoSet& control_x, const VideoSet& treatment_y,
             const VideoSet& control_y);

// Default Jaccard truncation (the extraction depth of the audit).
inline constexpr std::size_t kDefaultJaccardTopK = kMaxRank;

}  // namespace serp_audit
