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

// Domain types shared by the question generation, answering, scoring and
// harness layers. All of them are values: once constructed they are not
// mutated, so they can be handed to worker threads freely.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fallacious/error.hpp"
#include "json.hpp"

namespace fallacious {

using Json = nlohmann::ordered_json;

enum class AnswerLabel { kYes, kNo, kNotProvided };

/// Canonical storage spelling: "yes", "no", "not provided".
std::string_view to_string(AnswerLabel label);

/// Storage-layer parse. Accepts only the three canonical spellings (case
/// insensitive); anything else is kMalformedRecord, never NotProvided.
AnswerLabel parse_answer_label(std::string_view text);

enum class Framework { kReferenceBased, kReferenceFree };

std::string_view to_string(Framework framework);
Framework parse_framework(std::string_view text);

/// Which text or image an answer set was produced against.
enum class AnswerSource { kReferenceSummary, kGeneratedSummary, kDocument, kImage };

/// "reference", "generated", "document", "image".
std::string_view to_string(AnswerSource source);
AnswerSource parse_answer_source(std::string_view text);

struct EvalSample {
  std::string sample_id;
  std::string document;
  /// Path to the image, relative to the corpus file when not absolute.
  std::optional<std::string> image;
  std::string generated_summary;
  std::optional<std::string> reference_summary;
  /// Human faithfulness judgement on the 1..5 scale, as annotated.
  std::optional<int> human_score;

  friend bool operator==(const EvalSample&, const EvalSample&) = default;
};

/// Throws kInvariantViolation naming the offending field.
void validate(const EvalSample& sample);

/// One compact JSON object with fields in canonical order
/// (id, document, image_path, summary, reference, human_score). Optional
/// fields are omitted when absent.
std::string serialize_sample(const EvalSample& sample);

/// Inverse of serialize_sample. kMalformedRecord for structural problems,
/// kInvariantViolation for values out of their domain.
EvalSample parse_sample(std::string_view record);

struct Question {
  std::size_t index = 0;
  std::string text;
  /// Document-grounded answer emitted alongside reference-based questions.
  std::optional<AnswerLabel> seed_answer;

  friend bool operator==(const Question&, const Question&) = default;
};

/// Ordered, non-empty list of yes/no questions for one sample.
class QuestionSet {
 public:
  /// Validates: non-empty, indices 0..n-1, every text ends with '?'.
  QuestionSet(std::string sample_id, Framework origin, std::vector<Question> questions);

  const std::string& sample_id() const noexcept { return sample_id_; }
  Framework origin() const noexcept { return origin_; }
  const std::vector<Question>& questions() const noexcept { return questions_; }
  std::size_t size() const noexcept { return questions_.size(); }
  const Question& operator[](std::size_t i) const { return questions_.at(i); }

  friend bool operator==(const QuestionSet&, const QuestionSet&) = default;

 private:
  std::string sample_id_;
  Framework origin_;
  std::vector<Question> questions_;
};

/// Answers to a QuestionSet from one source, aligned by question index.
class AnswerSet {
 public:
  /// Image answer sets must not contain NotProvided.
  AnswerSet(std::string sample_id, AnswerSource source, std::vector<AnswerLabel> answers);

  const std::string& sample_id() const noexcept { return sample_id_; }
  AnswerSource source() const noexcept { return source_; }
  const std::vector<AnswerLabel>& answers() const noexcept { return answers_; }
  std::size_t size() const noexcept { return answers_.size(); }
  AnswerLabel operator[](std::size_t i) const { return answers_.at(i); }

  friend bool operator==(const AnswerSet&, const AnswerSet&) = default;

 private:
  std::string sample_id_;
  AnswerSource source_;
  std::vector<AnswerLabel> answers_;
};

/// Throws kLengthMismatch / kSampleMismatch when the answer set cannot be
/// scored against the question set.
void check_aligned(const QuestionSet& questions, const AnswerSet& answers);

/// A factuality score kept as an exact fraction together with the
/// per-question flags that produced it.
class FactualityScore {
 public:
  /// `counted` marks which questions take part in the fraction; empty means
  /// all of them. numerator = flags that are true and counted,
  /// denominator = counted questions (must be > 0).
  FactualityScore(std::string sample_id, Framework framework, std::vector<bool> per_question,
                  std::vector<bool> counted = {});

  const std::string& sample_id() const noexcept { return sample_id_; }
  Framework framework() const noexcept { return framework_; }
  const std::vector<bool>& per_question() const noexcept { return per_question_; }
  const std::vector<bool>& counted() const noexcept { return counted_; }
  std::int64_t numerator() const noexcept { return numerator_; }
  std::int64_t denominator() const noexcept { return denominator_; }
  std::int64_t question_count() const noexcept { return denominator_; }

  /// Rounded once from the exact fraction.
  double value() const noexcept {
    return static_cast<double>(numerator_) / static_cast<double>(denominator_);
  }
  /// "n/d" without reduction, e.g. "2/4".
  std::string fraction() const;

  friend bool operator==(const FactualityScore&, const FactualityScore&) = default;

 private:
  std::string sample_id_;
  Framework framework_;
  std::vector<bool> per_question_;
  std::vector<bool> counted_;
  std::int64_t numerator_ = 0;
  std::int64_t denominator_ = 0;
};

// JSON records for the stage artifacts (one object per line in files).
Json to_json(const QuestionSet& set);
Json to_json(const AnswerSet& set);
Json to_json(const FactualityScore& score);
QuestionSet question_set_from_json(const Json& j);
AnswerSet answer_set_from_json(const Json& j);
/// Rejects records whose stored numerator/denominator disagree with the
/// flags.
FactualityScore score_from_json(const Json& j);

/// Trims ASCII whitespace and U+00A0 from both ends.
std::string_view trim(std::string_view text);

}  // namespace fallacious
