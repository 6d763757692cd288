/*
 * Copyright 2026 The Fallacious Authors.
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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fallacious {

/// Every failure the toolkit reports carries one of these codes. Callers
/// branch on the code; the message is for humans.
enum class ErrorCode {
  // records and invariants
  kMalformedRecord,
  kInvariantViolation,
  kDuplicateId,
  kIoError,
  kInvalidConfig,
  // prompt rendering
  kEmptyDocument,
  kEmptySummary,
  kInvalidCount,
  kEmptyContext,
  kEmptyQuestion,
  // question-set parsing
  kNoParsableList,
  kBadItemShape,
  kUnknownAnswerString,
  kEmptyQuestionList,
  kWrongQuestionCount,
  kNonInterrogativeItem,
  kParseExhausted,
  // answering
  kUnmappableAnswer,
  kImageUnreadable,
  // backends
  kBackendError,
  kMalformedBackendReply,
  kScriptExhausted,
  kUnknownQuestion,
  // scoring and statistics
  kLengthMismatch,
  kSampleMismatch,
  kSourceMismatch,
  kEmptyAnswerSets,
  kEmptyCorpus,
  kDegenerateVariance,
  kInsufficientOverlap,
  kAlignmentError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string subject = {},
        std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  /// Field, metric, raw string or other named thing the error is about.
  const std::string& subject() const noexcept { return subject_; }
  /// Position (question index, pair index, line number) when one applies.
  std::optional<std::size_t> index() const noexcept { return index_; }

  /// Transport-level failures that may succeed when re-sent.
  bool retryable() const noexcept { return retryable_; }
  Error& set_retryable(bool value) noexcept {
    retryable_ = value;
    return *this;
  }

  /// Copy of this error with the index replaced (used when a lower layer
  /// fails and the caller knows which item it was working on).
  Error with_index(std::size_t index) const;

  bool is_backend_failure() const noexcept;

 private:
  ErrorCode code_;
  std::string subject_;
  std::optional<std::size_t> index_;
  bool retryable_ = false;
};

}  // namespace fallacious
