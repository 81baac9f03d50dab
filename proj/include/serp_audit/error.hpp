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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace serp_audit {

// Error classes surfaced to callers and, by name, to the CLI.
enum class ErrorKind {
  InvalidArgument,
  Io,
  InvalidPlan,
  MissingTwin,
  EmptyDimension,
  EmptyList,
  MissingLabel,
  EmptyAfterExclusion,
  DegenerateSample,
  TooFewSamples,
  TooLargeForExhaustive,
  InvalidDistribution,
  UnknownQuery,
  EmptyQuery,
  AlreadyFormatted,
  BackendUnavailable,
  BackendFailure,
  ResolverUnavailable,
  SchemaViolation,
  UnlabeledVideos,
  EmptyScope,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Process exit code used by the CLI for each error class.
int exit_code(ErrorKind kind) noexcept;

class AuditError : public std::runtime_error {
 public:
  AuditError(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// A malformed row in a SERP log, labels file or config; line is 1-based.
class SchemaError : public AuditError {
 public:
  SchemaError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnlabeledVideosError : public AuditError {
 public:
  UnlabeledVideosError(std::size_t count, std::vector<std::string> sample);
  std::size_t count() const noexcept { return count_; }
  const std::vector<std::string>& sample() const noexcept { return sample_; }

 private:
  std::size_t count_;
  std::vector<std::string> sample_;
};

}  // namespace serp_audit
