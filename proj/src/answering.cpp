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

#include "fallacious/answering.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "fallacious/digest.hpp"
#include "fallacious/parallel.hpp"
#include "fallacious/prompts.hpp"

namespace fallacious {
namespace {

std::vector<std::string> answer_tokens(std::string_view raw) {
  std::string cleaned;
  cleaned.reserve(raw.size());
  for (unsigned char c : raw) {
    if (std::ispunct(c)) cleaned.push_back(' ');
    else cleaned.push_back(static_cast<char>(std::tolower(c)));
  }
  std::istringstream in(cleaned);
  return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

bool contains_phrase(const std::vector<std::string>& tokens,
                     std::initializer_list<std::string_view> phrase) {
  if (phrase.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
      return true;
    }
  }
  return false;
}

AnswerLabel normalize(std::string_view raw, AnswerMode mode) {
  const auto tokens = answer_tokens(raw);
  auto unmappable = [&] {
    return Error(ErrorCode::kUnmappableAnswer, "cannot map reply '" + std::string(raw) + "'",
                 std::string(raw));
  };
  if (tokens.empty()) throw unmappable();
  if (tokens.front() == "1" || (tokens.size() == 1 && tokens.front() == "yes")) {
    return AnswerLabel::kYes;
  }
  if (tokens.front() == "0" || (tokens.size() == 1 && tokens.front() == "no")) {
    return AnswerLabel::kNo;
  }
  if (mode == AnswerMode::kTernary &&
      (contains_phrase(tokens, {"not", "provided"}) || contains_phrase(tokens, {"n", "a"}) ||
       contains_phrase(tokens, {"unknown"}) ||
       contains_phrase(tokens, {"cannot", "be", "determined"}))) {
    return AnswerLabel::kNotProvided;
  }
  bool saw_yes = false;
  bool saw_no = false;
  for (const auto& t : tokens) {
    if (t == "yes" || t == "1") saw_yes = true;
    if (t == "no" || t == "0") saw_no = true;
  }
  if (saw_yes != saw_no) return saw_yes ? AnswerLabel::kYes : AnswerLabel::kNo;
  throw unmappable();
}

bool starts_with(std::span<const std::byte> bytes, std::string_view magic, std::size_t offset = 0) {
  if (bytes.size() < offset + magic.size()) return false;
  for (std::size_t i = 0; i < magic.size(); ++i) {
    if (bytes[offset + i] != static_cast<std::byte>(magic[i])) return false;
  }
  return true;
}

std::uint32_t be32(std::span<const std::byte> b, std::size_t at) {
  return (std::to_integer<std::uint32_t>(b[at]) << 24) |
         (std::to_integer<std::uint32_t>(b[at + 1]) << 16) |
         (std::to_integer<std::uint32_t>(b[at + 2]) << 8) | std::to_integer<std::uint32_t>(b[at + 3]);
}

}  // namespace

std::string_view to_string(AnswerMode mode) {
  return mode == AnswerMode::kBinary ? "binary" : "ternary";
}

AnswerMode parse_answer_mode(std::string_view text) {
  if (text == "binary") return AnswerMode::kBinary;
  if (text == "ternary") return AnswerMode::kTernary;
  throw Error(ErrorCode::kInvalidConfig, "unknown answer mode '" + std::string(text) + "'",
              std::string(text));
}

std::string build_qa_prompt(std::string_view context, std::string_view question) {
  if (trim(context).empty()) throw Error(ErrorCode::kEmptyContext, "context is empty");
  if (trim(question).empty()) throw Error(ErrorCode::kEmptyQuestion, "question is empty");
  return render(prompt_template(TemplateId::kQaBinary).body,
                {{"context", context}, {"question", question}});
}

std::string build_ternary_qa_prompt(std::string_view context, std::string_view question) {
  if (trim(context).empty()) throw Error(ErrorCode::kEmptyContext, "context is empty");
  if (trim(question).empty()) throw Error(ErrorCode::kEmptyQuestion, "question is empty");
  return render(prompt_template(TemplateId::kQaTernary).body,
                {{"context", context}, {"question", question}});
}

AnswerLabel normalize_binary_answer(std::string_view raw) {
  return normalize(raw, AnswerMode::kBinary);
}

AnswerLabel normalize_ternary_answer(std::string_view raw) {
  return normalize(raw, AnswerMode::kTernary);
}

std::string render_answer(AnswerLabel label, AnswerMode mode) {
  if (mode == AnswerMode::kTernary) return std::string(to_string(label));
  switch (label) {
    case AnswerLabel::kYes: return "1";
    case AnswerLabel::kNo: return "0";
    case AnswerLabel::kNotProvided: break;
  }
  throw Error(ErrorCode::kInvalidConfig, "NotProvided has no binary rendering");
}

AnswerSet answer_with_text(ChatClient& client, std::string_view context,
                           const QuestionSet& questions, AnswerMode mode, AnswerSource source,
                           std::size_t parallelism) {
  if (source == AnswerSource::kImage) {
    throw Error(ErrorCode::kInvalidConfig, "text answering cannot produce image answers", "source");
  }
  if (trim(context).empty()) throw Error(ErrorCode::kEmptyContext, "context is empty");
  const PromptTemplate& tmpl =
      prompt_template(mode == AnswerMode::kBinary ? TemplateId::kQaBinary : TemplateId::kQaTernary);
  std::vector<AnswerLabel> answers(questions.size());
  parallel_for(questions.size(), parallelism, [&](std::size_t i) {
    const std::string& question = questions[i].text;
    const std::string prompt = mode == AnswerMode::kBinary
                                   ? build_qa_prompt(context, question)
                                   : build_ternary_qa_prompt(context, question);
    try {
      const Reply reply = client.ask(tmpl, prompt);
      answers[i] = mode == AnswerMode::kBinary ? normalize_binary_answer(reply.text)
                                               : normalize_ternary_answer(reply.text);
    } catch (const Error& e) {
      throw e.with_index(i);
    }
  });
  return AnswerSet(questions.sample_id(), source, std::move(answers));
}

bool looks_like_image(std::span<const std::byte> b) {
  if (starts_with(b, "\x89PNG\r\n\x1a\n")) {
    // Signature, IHDR with non-zero dimensions, IEND trailer.
    return b.size() >= 8 + 25 + 12 && starts_with(b, "IHDR", 12) && be32(b, 16) > 0 &&
           be32(b, 20) > 0 && starts_with(b, "IEND", b.size() - 8);
  }
  if (b.size() >= 4 && starts_with(b, "\xFF\xD8\xFF")) {
    return b[b.size() - 2] == std::byte{0xFF} && b[b.size() - 1] == std::byte{0xD9};
  }
  if (starts_with(b, "GIF87a") || starts_with(b, "GIF89a")) {
    return b.size() > 13 && b.back() == std::byte{0x3B};
  }
  if (starts_with(b, "BM")) return b.size() > 54;
  if (starts_with(b, "RIFF") && starts_with(b, "WEBP", 8)) return b.size() > 20;
  if (b.size() > 3 && b[0] == std::byte{'P'}) {
    const auto kind = std::to_integer<char>(b[1]);
    return kind >= '1' && kind <= '6' && std::isspace(std::to_integer<unsigned char>(b[2]));
  }
  return false;
}

ImageData load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kImageUnreadable, "cannot open image " + path.string(), path.string());
  }
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ImageData image;
  image.bytes.resize(raw.size());
  std::transform(raw.begin(), raw.end(), image.bytes.begin(),
                 [](char c) { return static_cast<std::byte>(c); });
  if (image.bytes.empty() || !looks_like_image(image.bytes)) {
    throw Error(ErrorCode::kImageUnreadable, "not a decodable image: " + path.string(),
                path.string());
  }
  image.sha256 = sha256_hex(raw);
  return image;
}

AnswerSet answer_with_image(VqaClient& client, const std::filesystem::path& image,
                            const QuestionSet& questions, std::size_t parallelism) {
  return answer_with_image(client, load_image(image), questions, parallelism);
}

AnswerSet answer_with_image(VqaClient& client, const ImageData& image,
                            const QuestionSet& questions, std::size_t parallelism) {
  std::vector<AnswerLabel> answers(questions.size());
  parallel_for(questions.size(), parallelism, [&](std::size_t i) {
    try {
      const Reply reply = client.ask(image.bytes, image.sha256, questions[i].text);
      answers[i] = normalize_binary_answer(reply.text);
    } catch (const Error& e) {
      throw e.with_index(i);
    }
  });
  return AnswerSet(questions.sample_id(), AnswerSource::kImage, std::move(answers));
}

}  // namespace fallacious
