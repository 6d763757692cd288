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

#include "fallacious/core.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace fallacious {
namespace {

std::string lower_ascii(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and values past U+10FFFF.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
        (extra == 3 && cp < 0x10000) || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

void require_text(std::string_view value, const char* field, bool non_empty) {
  if (!valid_utf8(value)) {
    throw Error(ErrorCode::kInvariantViolation, std::string(field) + " is not valid UTF-8", field);
  }
  if (non_empty && trim(value).empty()) {
    throw Error(ErrorCode::kInvariantViolation, std::string(field) + " is empty", field);
  }
}

const Json& require_field(const Json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) {
    throw Error(ErrorCode::kMalformedRecord, std::string("missing field '") + field + "'", field);
  }
  return *it;
}

std::string require_string(const Json& j, const char* field) {
  const Json& v = require_field(j, field);
  if (!v.is_string()) {
    throw Error(ErrorCode::kMalformedRecord, std::string("field '") + field + "' must be a string",
                field);
  }
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const Json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::kMalformedRecord, std::string("field '") + field + "' must be a string",
                field);
  }
  return it->get<std::string>();
}

Json parse_object(std::string_view record) {
  Json j = Json::parse(record.begin(), record.end(), nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kMalformedRecord, "record is not valid JSON");
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kMalformedRecord, "record is not a JSON object");
  }
  return j;
}

}  // namespace

std::string_view trim(std::string_view text) {
  auto is_space_at = [&](std::size_t pos, bool from_back) -> std::size_t {
    // Returns the byte width of a whitespace character at pos (front) or
    // ending at pos (back), 0 when there is none.
    if (!from_back) {
      const auto c = static_cast<unsigned char>(text[pos]);
      if (std::isspace(c)) return 1;
      if (c == 0xC2 && pos + 1 < text.size() && static_cast<unsigned char>(text[pos + 1]) == 0xA0) {
        return 2;
      }
      return 0;
    }
    const auto c = static_cast<unsigned char>(text[pos]);
    if (std::isspace(c)) return 1;
    if (c == 0xA0 && pos >= 1 && static_cast<unsigned char>(text[pos - 1]) == 0xC2) return 2;
    return 0;
  };
  while (!text.empty()) {
    const std::size_t w = is_space_at(0, false);
    if (w == 0) break;
    text.remove_prefix(w);
  }
  while (!text.empty()) {
    const std::size_t w = is_space_at(text.size() - 1, true);
    if (w == 0) break;
    text.remove_suffix(w);
  }
  return text;
}

std::string_view to_string(AnswerLabel label) {
  switch (label) {
    case AnswerLabel::kYes: return "yes";
    case AnswerLabel::kNo: return "no";
    case AnswerLabel::kNotProvided: return "not provided";
  }
  return "?";
}

AnswerLabel parse_answer_label(std::string_view text) {
  const std::string lowered = lower_ascii(text);
  if (lowered == "yes") return AnswerLabel::kYes;
  if (lowered == "no") return AnswerLabel::kNo;
  if (lowered == "not provided") return AnswerLabel::kNotProvided;
  throw Error(ErrorCode::kMalformedRecord, "unknown answer label '" + std::string(text) + "'",
              std::string(text));
}

std::string_view to_string(Framework framework) {
  return framework == Framework::kReferenceBased ? "reference-based" : "reference-free";
}

Framework parse_framework(std::string_view text) {
  if (text == "reference-based") return Framework::kReferenceBased;
  if (text == "reference-free") return Framework::kReferenceFree;
  throw Error(ErrorCode::kMalformedRecord, "unknown framework '" + std::string(text) + "'",
              std::string(text));
}

std::string_view to_string(AnswerSource source) {
  switch (source) {
    case AnswerSource::kReferenceSummary: return "reference";
    case AnswerSource::kGeneratedSummary: return "generated";
    case AnswerSource::kDocument: return "document";
    case AnswerSource::kImage: return "image";
  }
  return "?";
}

AnswerSource parse_answer_source(std::string_view text) {
  if (text == "reference") return AnswerSource::kReferenceSummary;
  if (text == "generated") return AnswerSource::kGeneratedSummary;
  if (text == "document") return AnswerSource::kDocument;
  if (text == "image") return AnswerSource::kImage;
  throw Error(ErrorCode::kMalformedRecord, "unknown answer source '" + std::string(text) + "'",
              std::string(text));
}

void validate(const EvalSample& sample) {
  require_text(sample.sample_id, "id", true);
  require_text(sample.document, "document", true);
  require_text(sample.generated_summary, "summary", true);
  if (sample.image) require_text(*sample.image, "image_path", true);
  if (sample.reference_summary) require_text(*sample.reference_summary, "reference", true);
  if (sample.human_score && (*sample.human_score < 1 || *sample.human_score > 5)) {
    throw Error(ErrorCode::kInvariantViolation,
                "human_score " + std::to_string(*sample.human_score) + " outside 1..5",
                "human_score");
  }
}

std::string serialize_sample(const EvalSample& sample) {
  Json j;
  j["id"] = sample.sample_id;
  j["document"] = sample.document;
  if (sample.image) j["image_path"] = *sample.image;
  j["summary"] = sample.generated_summary;
  if (sample.reference_summary) j["reference"] = *sample.reference_summary;
  if (sample.human_score) j["human_score"] = *sample.human_score;
  return j.dump();
}

EvalSample parse_sample(std::string_view record) {
  static const std::set<std::string, std::less<>> kKnown = {
      "id", "document", "image_path", "summary", "reference", "human_score"};
  const Json j = parse_object(record);
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.contains(key)) {
      throw Error(ErrorCode::kMalformedRecord, "unknown field '" + key + "'", key);
    }
  }
  EvalSample sample;
  sample.sample_id = require_string(j, "id");
  sample.document = require_string(j, "document");
  sample.image = optional_string(j, "image_path");
  sample.generated_summary = require_string(j, "summary");
  sample.reference_summary = optional_string(j, "reference");
  if (auto it = j.find("human_score"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) {
      throw Error(ErrorCode::kMalformedRecord, "field 'human_score' must be an integer",
                  "human_score");
    }
    const auto value = it->get<std::int64_t>();
    if (value < 1 || value > 5) {
      throw Error(ErrorCode::kInvariantViolation,
                  "human_score " + std::to_string(value) + " outside 1..5", "human_score");
    }
    sample.human_score = static_cast<int>(value);
  }
  validate(sample);
  return sample;
}

QuestionSet::QuestionSet(std::string sample_id, Framework origin, std::vector<Question> questions)
    : sample_id_(std::move(sample_id)), origin_(origin), questions_(std::move(questions)) {
  if (questions_.empty()) {
    throw Error(ErrorCode::kEmptyQuestionList, "question set for '" + sample_id_ + "' is empty",
                sample_id_);
  }
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    if (questions_[i].index != i) {
      throw Error(ErrorCode::kInvariantViolation,
                  "question index " + std::to_string(questions_[i].index) + " at position " +
                      std::to_string(i),
                  "index", i);
    }
    const std::string_view text = trim(questions_[i].text);
    if (text.empty() || text.back() != '?') {
      throw Error(ErrorCode::kNonInterrogativeItem,
                  "question " + std::to_string(i) + " does not end with '?'", questions_[i].text, i);
    }
  }
}

AnswerSet::AnswerSet(std::string sample_id, AnswerSource source, std::vector<AnswerLabel> answers)
    : sample_id_(std::move(sample_id)), source_(source), answers_(std::move(answers)) {
  if (source_ == AnswerSource::kImage) {
    for (std::size_t i = 0; i < answers_.size(); ++i) {
      if (answers_[i] == AnswerLabel::kNotProvided) {
        throw Error(ErrorCode::kInvariantViolation, "image answers are binary", "answers", i);
      }
    }
  }
}

void check_aligned(const QuestionSet& questions, const AnswerSet& answers) {
  if (questions.sample_id() != answers.sample_id()) {
    throw Error(ErrorCode::kSampleMismatch,
                "questions for '" + questions.sample_id() + "' paired with answers for '" +
                    answers.sample_id() + "'",
                answers.sample_id());
  }
  if (questions.size() != answers.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(answers.size()) + " answers for " +
                    std::to_string(questions.size()) + " questions",
                answers.sample_id());
  }
}

FactualityScore::FactualityScore(std::string sample_id, Framework framework,
                                 std::vector<bool> per_question, std::vector<bool> counted)
    : sample_id_(std::move(sample_id)),
      framework_(framework),
      per_question_(std::move(per_question)),
      counted_(std::move(counted)) {
  if (!counted_.empty() && counted_.size() != per_question_.size()) {
    throw Error(ErrorCode::kLengthMismatch, "counted mask length differs from flags", sample_id_);
  }
  for (std::size_t i = 0; i < per_question_.size(); ++i) {
    const bool in = counted_.empty() || counted_[i];
    if (!in) continue;
    ++denominator_;
    if (per_question_[i]) ++numerator_;
  }
  if (denominator_ == 0) {
    throw Error(ErrorCode::kEmptyAnswerSets, "no questions to score for '" + sample_id_ + "'",
                sample_id_);
  }
}

std::string FactualityScore::fraction() const {
  return std::to_string(numerator_) + "/" + std::to_string(denominator_);
}

Json to_json(const QuestionSet& set) {
  Json j;
  j["sample_id"] = set.sample_id();
  j["origin"] = to_string(set.origin());
  Json items = Json::array();
  for (const auto& q : set.questions()) {
    Json item;
    item["index"] = q.index;
    item["text"] = q.text;
    if (q.seed_answer) item["seed_answer"] = to_string(*q.seed_answer);
    items.push_back(std::move(item));
  }
  j["questions"] = std::move(items);
  return j;
}

Json to_json(const AnswerSet& set) {
  Json j;
  j["sample_id"] = set.sample_id();
  j["source"] = to_string(set.source());
  Json items = Json::array();
  for (AnswerLabel a : set.answers()) items.push_back(to_string(a));
  j["answers"] = std::move(items);
  return j;
}

Json to_json(const FactualityScore& score) {
  Json j;
  j["sample_id"] = score.sample_id();
  j["framework"] = to_string(score.framework());
  j["numerator"] = score.numerator();
  j["denominator"] = score.denominator();
  j["value"] = score.value();
  j["per_question"] = score.per_question();
  if (!score.counted().empty()) j["counted"] = score.counted();
  return j;
}

QuestionSet question_set_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "question set is not an object");
  const std::string sample_id = require_string(j, "sample_id");
  const Framework origin = parse_framework(require_string(j, "origin"));
  const Json& items = require_field(j, "questions");
  if (!items.is_array()) {
    throw Error(ErrorCode::kMalformedRecord, "'questions' must be an array", "questions");
  }
  std::vector<Question> questions;
  for (const Json& item : items) {
    if (!item.is_object()) {
      throw Error(ErrorCode::kMalformedRecord, "question entry is not an object", "questions");
    }
    const Json& index = require_field(item, "index");
    if (!index.is_number_unsigned()) {
      throw Error(ErrorCode::kMalformedRecord, "question index must be unsigned", "index");
    }
    Question q;
    q.index = index.get<std::size_t>();
    q.text = require_string(item, "text");
    if (auto seed = optional_string(item, "seed_answer")) q.seed_answer = parse_answer_label(*seed);
    questions.push_back(std::move(q));
  }
  return QuestionSet(sample_id, origin, std::move(questions));
}

AnswerSet answer_set_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "answer set is not an object");
  const std::string sample_id = require_string(j, "sample_id");
  const AnswerSource source = parse_answer_source(require_string(j, "source"));
  const Json& items = require_field(j, "answers");
  if (!items.is_array()) {
    throw Error(ErrorCode::kMalformedRecord, "'answers' must be an array", "answers");
  }
  std::vector<AnswerLabel> answers;
  for (const Json& item : items) {
    if (!item.is_string()) {
      throw Error(ErrorCode::kMalformedRecord, "answer entries must be strings", "answers");
    }
    answers.push_back(parse_answer_label(item.get<std::string>()));
  }
  return AnswerSet(sample_id, source, std::move(answers));
}

FactualityScore score_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "score is not an object");
  const std::string sample_id = require_string(j, "sample_id");
  const Framework framework = parse_framework(require_string(j, "framework"));
  auto bools = [&](const char* field, bool required) {
    std::vector<bool> out;
    auto it = j.find(field);
    if (it == j.end()) {
      if (required) require_field(j, field);
      return out;
    }
    if (!it->is_array()) {
      throw Error(ErrorCode::kMalformedRecord, std::string("'") + field + "' must be an array",
                  field);
    }
    for (const Json& b : *it) {
      if (!b.is_boolean()) {
        throw Error(ErrorCode::kMalformedRecord, std::string("'") + field + "' holds non-booleans",
                    field);
      }
      out.push_back(b.get<bool>());
    }
    return out;
  };
  FactualityScore score(sample_id, framework, bools("per_question", true), bools("counted", false));
  const Json& num = require_field(j, "numerator");
  const Json& den = require_field(j, "denominator");
  if (!num.is_number_integer() || !den.is_number_integer() ||
      num.get<std::int64_t>() != score.numerator() ||
      den.get<std::int64_t>() != score.denominator()) {
    throw Error(ErrorCode::kInvariantViolation, "stored fraction disagrees with per-question flags",
                "numerator");
  }
  return score;
}

}  // namespace fallacious
