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

#include "fallacious/error.hpp"

namespace fallacious {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kEmptySummary: return "EmptySummary";
    case ErrorCode::kInvalidCount: return "InvalidCount";
    case ErrorCode::kEmptyContext: return "EmptyContext";
    case ErrorCode::kEmptyQuestion: return "EmptyQuestion";
    case ErrorCode::kNoParsableList: return "NoParsableList";
    case ErrorCode::kBadItemShape: return "BadItemShape";
    case ErrorCode::kUnknownAnswerString: return "UnknownAnswerString";
    case ErrorCode::kEmptyQuestionList: return "EmptyQuestionList";
    case ErrorCode::kWrongQuestionCount: return "WrongQuestionCount";
    case ErrorCode::kNonInterrogativeItem: return "NonInterrogativeItem";
    case ErrorCode::kParseExhausted: return "ParseExhausted";
    case ErrorCode::kUnmappableAnswer: return "UnmappableAnswer";
    case ErrorCode::kImageUnreadable: return "ImageUnreadable";
    case ErrorCode::kBackendError: return "BackendError";
    case ErrorCode::kMalformedBackendReply: return "MalformedBackendReply";
    case ErrorCode::kScriptExhausted: return "ScriptExhausted";
    case ErrorCode::kUnknownQuestion: return "UnknownQuestion";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kSampleMismatch: return "SampleMismatch";
    case ErrorCode::kSourceMismatch: return "SourceMismatch";
    case ErrorCode::kEmptyAnswerSets: return "EmptyAnswerSets";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::kAlignmentError: return "AlignmentError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string message, std::string subject,
             std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      subject_(std::move(subject)),
      index_(index) {}

Error Error::with_index(std::size_t index) const {
  Error copy = *this;
  copy.index_ = index;
  return copy;
}

bool Error::is_backend_failure() const noexcept {
  switch (code_) {
    case ErrorCode::kBackendError:
    case ErrorCode::kMalformedBackendReply:
    case ErrorCode::kScriptExhausted:
    case ErrorCode::kUnknownQuestion:
    case ErrorCode::kParseExhausted:
      return true;
    default:
      return false;
  }
}

}  // namespace fallacious
