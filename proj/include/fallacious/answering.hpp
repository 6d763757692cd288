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

// Question answering over text (chat backends) and images (VQA backends),
// and the decision tables that turn free-text replies into AnswerLabels.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fallacious/backend.hpp"
#include "fallacious/core.hpp"

namespace fallacious {

enum class AnswerMode { kBinary, kTernary };

std::string_view to_string(AnswerMode mode);
AnswerMode parse_answer_mode(std::string_view text);

/// The 0/1 question-answering prompt.
std::string build_qa_prompt(std::string_view context, std::string_view question);
/// yes / no / not provided variant.
std::string build_ternary_qa_prompt(std::string_view context, std::string_view question);

/// Decision table over the lowercased reply with ASCII punctuation turned
/// into spaces:
///   1. first token "1", or the whole reply "yes"  -> Yes
///   2. first token "0", or the whole reply "no"   -> No
///   3. (ternary only) contains "not provided", "n a" (n/a), "unknown" or
///      "cannot be determined"                     -> NotProvided
///   4. the tokens yes/1 and no/0 occur, but only with one meaning -> it
///   5. otherwise kUnmappableAnswer.
AnswerLabel normalize_binary_answer(std::string_view raw);
AnswerLabel normalize_ternary_answer(std::string_view raw);

/// Reply spelling a backend would use for the label in each mode.
std::string render_answer(AnswerLabel label, AnswerMode mode);

/// One request per question against `context`. Answers are aligned with
/// the question indices. `source` must be a text source.
AnswerSet answer_with_text(ChatClient& client, std::string_view context,
                           const QuestionSet& questions, AnswerMode mode, AnswerSource source,
                           std::size_t parallelism = 1);

struct ImageData {
  std::vector<std::byte> bytes;
  std::string sha256;
};

/// True for PNG, JPEG, GIF, BMP, WebP and binary/ASCII PNM files whose
/// header and trailer are intact.
bool looks_like_image(std::span<const std::byte> bytes);

/// kImageUnreadable when the file is missing, empty or not a recognised
/// image.
ImageData load_image(const std::filesystem::path& path);

/// VQA over the image, binary normalization, source = Image. The image is
/// loaded and checked before any request is made.
AnswerSet answer_with_image(VqaClient& client, const std::filesystem::path& image,
                            const QuestionSet& questions, std::size_t parallelism = 1);
AnswerSet answer_with_image(VqaClient& client, const ImageData& image,
                            const QuestionSet& questions, std::size_t parallelism = 1);

}  // namespace fallacious
