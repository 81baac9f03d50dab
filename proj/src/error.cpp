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

#include "serp_audit/error.hpp"

#include <fmt/format.h>

#include <utility>

namespace serp_audit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::InvalidPlan: return "InvalidPlan";
    case ErrorKind::MissingTwin: return "MissingTwin";
    case ErrorKind::EmptyDimension: return "EmptyDimension";
    case ErrorKind::EmptyList: return "EmptyList";
    case ErrorKind::MissingLabel: return "MissingLabel";
    case ErrorKind::EmptyAfterExclusion: return "EmptyAfterExclusion";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::TooLargeForExhaustive: return "TooLargeForExhaustive";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::UnknownQuery: return "UnknownQuery";
    case ErrorKind::EmptyQuery: return "EmptyQuery";
    case ErrorKind::AlreadyFormatted: return "AlreadyFormatted";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::BackendFailure: return "BackendFailure";
    case ErrorKind::ResolverUnavailable: return "ResolverUnavailable";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::UnlabeledVideos: return "UnlabeledVideos";
    case ErrorKind::EmptyScope: return "EmptyScope";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) noexcept {
  // 1 is reserved for usage errors reported by the argument parser.
  return 10 + static_cast<int>(kind);
}

SchemaError::SchemaError(std::size_t line, const std::string& message)
    : AuditError(ErrorKind::SchemaViolation,
                 fmt::format("line {}: {}", line, message)),
      line_(line) {}

UnlabeledVideosError::UnlabeledVideosError(std::size_t count,
                                           std::vector<std::string> sample)
    : AuditError(ErrorKind::UnlabeledVideos,
                 fmt::format("{} video id(s) have no label, e.g. {}", count,
                             fmt::join(sample, ", "))),
      count_(count),
      sample_(std::move(sample)) {}

}  // namespace serp_audit
