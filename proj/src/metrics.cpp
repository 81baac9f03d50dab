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

#include "serp_audit/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <iterator>

namespace serp_audit {

std::optional<Stance> stance_of(AnnotationLabel label, StancePolicy policy) noexcept {
  switch (label) {
    case AnnotationLabel::Opposing:
      return Stance::Opposing;
    case AnnotationLabel::Supporting:
      return Stance::Supporting;
    case AnnotationLabel::Origins:
      if (policy == StancePolicy::ExcludeOrigins) return std::nullopt;
      if (policy == StancePolicy::OriginsAsMisinfo) return Stance::Supporting;
      return Stance::Neither;
    case AnnotationLabel::Neutral:
    case AnnotationLabel::Irrelevant:
    case AnnotationLabel::NonEnglish:
    case AnnotationLabel::Inaccessible:
      return Stance::Neither;
  }
  return Stance::Neither;
}

BiasScore bias_score(std::span<const Stance> stances) {
  if (stances.empty()) throw AuditError(ErrorKind::EmptyList, "bias score of an empty list");
  const auto n = static_cast<std::int64_t>(stances.size());
  std::int64_t numerator = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    numerator += value(stances[static_cast<std::size_t>(i)]) * (n - i);
  }
  const std::int64_t denominator = n * (n + 1) / 2;
  return {static_cast<double>(numerator) / static_cast<double>(denominator),
          static_cast<int>(n), numerator, denominator};
}

BiasScore bias_score_topn(std::span<const std::string> serp, const LabelMap& labels, int n,
                          StancePolicy policy) {
  if (n < 1) throw AuditError(ErrorKind::InvalidArgument, "top-n must be >= 1");
  std::vector<Stance> stances;
  stances.reserve(static_cast<std::size_t>(n));
  for (const auto& id : serp) {
    if (static_cast<int>(stances.size()) == n) break;
    auto it = labels.find(id);
    if (it == labels.end()) {
      throw AuditError(ErrorKind::MissingLabel, fmt::format("no label for video '{}'", id));
    }
    if (auto s = stance_of(it->second, policy)) stances.push_back(*s);
  }
  if (stances.empty()) {
    throw AuditError(ErrorKind::EmptyAfterExclusion,
                     fmt::format("no scorable results in the top {}", n));
  }
  return bias_score(stances);
}

VideoSet::VideoSet(std::span<const std::string> ranked, std::size_t top_k)
    : ids_(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min(top_k, ranked.size()))) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

VideoSet::VideoSet(std::initializer_list<std::string> ids) : ids_(ids) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

double jaccard(const VideoSet& a, const VideoSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto i = a.ids().begin();
  auto j = b.ids().begin();
  while (i != a.ids().end() && j != b.ids().end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

GbpScore gbp(const VideoSet& treatment_x, const VideoSet& control_x, const VideoSet& treatment_y,
             const VideoSet& control_y) {
  GbpScore s;
  s.noise_x = jaccard(treatment_x, control_x);
  s.noise_y = jaccard(treatment_y, control_y);
  s.baseline = std::min(s.noise_x, s.noise_y);
  s.diff = jaccard(treatment_x, treatment_y);
  s.value = s.baseline - s.diff;
  return s;
}

}  // namespace serp_audit
