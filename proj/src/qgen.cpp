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

#include "fallacious/qgen.hpp"

#include <algorithm>
#include <cctype>

#include "fallacious/prompts.hpp"

namespace fallacious {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Finds a member by case-insensitive key.
const Json* member(const Json& object, std::string_view key) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    if (lower(it.key()) == key) return &it.value();
  }
  return nullptr;
}

std::string checked_question(std::string_view text, std::size_t index) {
  const std::string_view t = trim(text);
  if (t.empty() || t.back() != '?') {
    throw Error(ErrorCode::kNonInterrogativeItem,
                "item " + std::to_string(index) + " is not a question: '" + std::string(text) + "'",
                std::string(text), index);
  }
  return std::string(t);
}

bool is_parse_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoParsableList:
    case ErrorCode::kBadItemShape:
    case ErrorCode::kUnknownAnswerString:
    case ErrorCode::kEmptyQuestionList:
    case ErrorCode::kWrongQuestionCount:
    case ErrorCode::kNonInterrogativeItem:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string build_refbased_qgen_prompt(std::string_view document,
                                       std::optional<std::string_view> reference) {
  if (trim(document).empty()) throw Error(ErrorCode::kEmptyDocument, "document is empty");
  std::string prompt =
      render(prompt_template(TemplateId::kRefBasedQGen).body, {{"article", document}});
  if (reference) {
    if (trim(*reference).empty()) {
      throw Error(ErrorCode::kInvariantViolation, "reference summary is empty", "reference");
    }
    prompt += render(prompt_template(TemplateId::kRefBasedReferenceBlock).body,
                     {{"reference", *reference}});
  }
  return prompt;
}

std::string build_reffree_qgen_prompt(std::string_view summary, int n_questions) {
  if (trim(summary).empty()) throw Error(ErrorCode::kEmptySummary, "summary is empty");
  if (n_questions < 1) {
    throw Error(ErrorCode::kInvalidCount,
                "question count must be >= 1, got " + std::to_string(n_questions));
  }
  const std::string word = count_word(n_questions);
  std::string format_list = "[";
  for (int i = 1; i <= n_questions; ++i) {
    if (i > 1) format_list += ", ";
    format_list += "\"question" + std::to_string(i) + "\"";
  }
  format_list += "]";
  return render(prompt_template(TemplateId::kRefFreeQGen).body,
                {{"n_questions", word},
                 {"question_noun", n_questions == 1 ? "question" : "questions"},
                 {"format_list", format_list},
                 {"summary", summary}});
}

Json extract_json_list(std::string_view raw) {
  std::vector<Json> found;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] != '[') {
      ++i;
      continue;
    }
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t end = std::string_view::npos;
    for (std::size_t j = i; j < raw.size(); ++j) {
      const char c = raw[j];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '[' || c == '{') {
        ++depth;
      } else if (c == ']' || c == '}') {
        if (--depth == 0) {
          end = j;
          break;
        }
      }
    }
    if (end != std::string_view::npos) {
      const std::string_view span = raw.substr(i, end - i + 1);
      Json parsed = Json::parse(span.begin(), span.end(), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_array()) {
        found.push_back(std::move(parsed));
        i = end + 1;
        continue;
      }
    }
    ++i;
  }
  if (found.empty()) throw Error(ErrorCode::kNoParsableList, "no JSON list found in reply");
  if (found.size() > 1) {
    throw Error(ErrorCode::kNoParsableList,
                "reply contains " + std::to_string(found.size()) + " JSON lists, expected one");
  }
  return std::move(found.front());
}

std::optional<AnswerLabel> map_seed_answer(std::string_view raw) {
  std::string s = lower(trim(raw));
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "yes") return AnswerLabel::kYes;
  if (s == "no") return AnswerLabel::kNo;
  if (s == "not provided" || s == "not_provided" || s == "n/a") return AnswerLabel::kNotProvided;
  return std::nullopt;
}

QuestionSet parse_refbased_question_set(std::string_view raw, const std::string& sample_id,
                                        std::size_t min_questions, std::size_t max_questions) {
  const Json list = extract_json_list(raw);
  if (list.empty()) throw Error(ErrorCode::kEmptyQuestionList, "question list is empty");
  if (list.size() < min_questions || list.size() > max_questions) {
    throw Error(ErrorCode::kWrongQuestionCount,
                std::to_string(list.size()) + " questions outside bounds " +
                    std::to_string(min_questions) + ".." + std::to_string(max_questions),
                std::to_string(max_questions), list.size());
  }
  std::vector<Question> questions;
  questions.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Json& item = list[i];
    const Json* q = item.is_object() ? member(item, "question") : nullptr;
    const Json* a = item.is_object() ? member(item, "answer") : nullptr;
    if (!q || !a || !q->is_string() || !a->is_string()) {
      throw Error(ErrorCode::kBadItemShape,
                  "item " + std::to_string(i) + " is not a {\"Question\", \"Answer\"} object",
                  item.dump(), i);
    }
    const std::string answer = a->get<std::string>();
    const auto label = map_seed_answer(answer);
    if (!label) {
      throw Error(ErrorCode::kUnknownAnswerString,
                  "item " + std::to_string(i) + " has answer '" + answer + "'", answer, i);
    }
    questions.push_back(Question{i, checked_question(q->get<std::string>(), i), label});
  }
  return QuestionSet(sample_id, Framework::kReferenceBased, std::move(questions));
}

QuestionSet parse_reffree_question_set(std::string_view raw, const std::string& sample_id,
                                       int expected_n) {
  const Json list = extract_json_list(raw);
  if (list.size() != static_cast<std::size_t>(expected_n)) {
    throw Error(ErrorCode::kWrongQuestionCount,
                "got " + std::to_string(list.size()) + " questions, expected " +
                    std::to_string(expected_n),
                std::to_string(expected_n), list.size());
  }
  std::vector<Question> questions;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!list[i].is_string()) {
      throw Error(ErrorCode::kBadItemShape, "item " + std::to_string(i) + " is not a string",
                  list[i].dump(), i);
    }
    questions.push_back(Question{i, checked_question(list[i].get<std::string>(), i), std::nullopt});
  }
  return QuestionSet(sample_id, Framework::kReferenceFree, std::move(questions));
}

QGenResult generate_questions(ChatClient& client, const EvalSample& sample, Framework framework,
                              const QGenConfig& config) {
  if (config.max_attempts < 1) {
    throw Error(ErrorCode::kInvalidConfig, "max_attempts must be >= 1", "max_attempts");
  }
  std::string prompt;
  const PromptTemplate* tmpl = nullptr;
  if (framework == Framework::kReferenceBased) {
    std::optional<std::string_view> reference;
    if (config.condition_on_reference) {
      if (!sample.reference_summary) {
        throw Error(ErrorCode::kInvariantViolation,
                    "sample '" + sample.sample_id + "' has no reference summary", "reference");
      }
      reference = *sample.reference_summary;
    }
    prompt = build_refbased_qgen_prompt(sample.document, reference);
    tmpl = &prompt_template(TemplateId::kRefBasedQGen);
  } else {
    prompt = build_reffree_qgen_prompt(sample.generated_summary, config.reffree_questions);
    tmpl = &prompt_template(TemplateId::kRefFreeQGen);
  }

  std::vector<BackendTranscript> attempts;
  std::string last_error;
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    Reply reply = client.ask(*tmpl, prompt, attempt);
    attempts.push_back(reply.transcript);
    try {
      QuestionSet set =
          framework == Framework::kReferenceBased
              ? parse_refbased_question_set(reply.text, sample.sample_id, config.min_questions,
                                            config.max_questions)
              : parse_reffree_question_set(reply.text, sample.sample_id, config.reffree_questions);
      return QGenResult{std::move(set), std::move(attempts)};
    } catch (const Error& e) {
      if (!is_parse_failure(e.code())) throw;
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::kParseExhausted,
              "no parsable question list after " + std::to_string(config.max_attempts) +
                  " attempts (last: " + last_error + ")",
              sample.sample_id, static_cast<std::size_t>(config.max_attempts));
}

}  // namespace fallacious
