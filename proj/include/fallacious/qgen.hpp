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

// Question generation: the two question-generation prompts, strict parsers
// for what chat models send back, and the retrying driver that ties them
// to a ChatClient.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fallacious/backend.hpp"
#include "fallacious/core.hpp"

namespace fallacious {

struct QGenConfig {
  /// Questions requested per sample by the reference-free prompt.
  int reffree_questions = 3;
  /// Total attempts per sample; unparsable replies are re-sent unchanged.
  int max_attempts = 3;
  /// Sanity bounds on the reference-based question count.
  std::size_t min_questions = 1;
  std::size_t max_questions = 50;
  /// Append the reference summary to the reference-based prompt.
  bool condition_on_reference = false;
};

/// Reference-based prompt with the article slot filled. When `reference`
/// is given, a delimited reference-summary block follows the article.
std::string build_refbased_qgen_prompt(std::string_view document,
                                       std::optional<std::string_view> reference = std::nullopt);

/// Reference-free prompt asking for `n_questions` questions.
std::string build_reffree_qgen_prompt(std::string_view summary, int n_questions);

/// The single JSON array embedded in `raw`. Code fences and prose around it
/// are tolerated; zero or several candidate arrays are kNoParsableList.
Json extract_json_list(std::string_view raw);

/// Maps a generated answer string to a label: case-insensitive "yes", "no",
/// "not provided", "not_provided", "n/a" (one trailing period allowed).
/// nullopt for anything else.
std::optional<AnswerLabel> map_seed_answer(std::string_view raw);

QuestionSet parse_refbased_question_set(std::string_view raw, const std::string& sample_id,
                                        std::size_t min_questions = 1,
                                        std::size_t max_questions = 50);

QuestionSet parse_reffree_question_set(std::string_view raw, const std::string& sample_id,
                                       int expected_n);

struct QGenResult {
  QuestionSet questions;
  /// One entry per attempt, in order.
  std::vector<BackendTranscript> attempts;
};

/// Builds the prompt for `framework`, sends it and parses the reply,
/// re-sending the identical prompt up to config.max_attempts times while
/// the reply does not parse. kParseExhausted when every attempt failed;
/// transport failures propagate as kBackendError.
QGenResult generate_questions(ChatClient& client, const EvalSample& sample, Framework framework,
                              const QGenConfig& config);

}  // namespace fallacious
