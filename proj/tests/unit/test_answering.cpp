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

#include <gtest/gtest.h>

#include <sstream>

#include "fallacious/answering.hpp"
#include "fallacious/mocklab.hpp"
#include "test_support.hpp"

namespace fallacious {
namespace {

using testing_support::fixture;
using testing_support::read_text;
using testing_support::TempDir;
using testing_support::write_text;

BackendConfig quick_config() {
  BackendConfig c;
  c.kind = "scripted";
  c.retry_backoff_seconds = 0;
  c.max_retries = 0;
  return c;
}

QuestionSet two_questions() {
  return QuestionSet("s", Framework::kReferenceFree,
                     {Question{0, "Is it raining?", std::nullopt}, Question{1, "Is it cold?", std::nullopt}});
}

std::vector<std::byte> bytes_of(const std::string& s) {
  std::vector<std::byte> out;
  for (char c : s) out.push_back(static_cast<std::byte>(c));
  return out;
}

TEST(Normalization, HandLabelledReplies) {
  std::istringstream in(read_text(fixture("answer_normalization.tsv")));
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.rfind('\t');
    ASSERT_NE(t1, t2) << line;
    const std::string mode = line.substr(0, t1);
    std::string reply = line.substr(t1 + 1, t2 - t1 - 1);
    for (std::size_t p; (p = reply.find("\\n")) != std::string::npos;) reply.replace(p, 2, "\n");
    const std::string expected = line.substr(t2 + 1);
    auto normalize = mode == "binary" ? normalize_binary_answer : normalize_ternary_answer;
    if (expected == "unmappable") {
      try {
        normalize(reply);
        ADD_FAILURE() << mode << " '" << reply << "' should not map";
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kUnmappableAnswer);
        EXPECT_EQ(e.subject(), reply);
      }
    } else {
      EXPECT_EQ(to_string(normalize(reply)), expected) << mode << " '" << reply << "'";
    }
    ++cases;
  }
  EXPECT_GE(cases, 20);
}

TEST(Normalization, RenderedAnswersRoundTrip) {
  for (AnswerLabel l : {AnswerLabel::kYes, AnswerLabel::kNo, AnswerLabel::kNotProvided}) {
    EXPECT_EQ(normalize_ternary_answer(render_answer(l, AnswerMode::kTernary)), l);
  }
  EXPECT_EQ(normalize_binary_answer(render_answer(AnswerLabel::kYes, AnswerMode::kBinary)),
            AnswerLabel::kYes);
  EXPECT_THROW(render_answer(AnswerLabel::kNotProvided, AnswerMode::kBinary), Error);
}

TEST(QaPrompts, RejectEmptyOperands) {
  try {
    build_qa_prompt(" ", "Is it?");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyContext);
  }
  try {
    build_ternary_qa_prompt("ctx", "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyQuestion);
  }
  EXPECT_NE(build_ternary_qa_prompt("ctx", "Is it?").find("not provided"), std::string::npos);
}

TEST(AnswerWithText, AlignsAnswersWithQuestions) {
  auto backend = std::make_shared<mocklab::ScriptedChatBackend>(std::vector<std::string>{"1", "0"});
  ChatClient client(backend, quick_config());
  const AnswerSet a =
      answer_with_text(client, "ctx", two_questions(), AnswerMode::kBinary, AnswerSource::kDocument);
  EXPECT_EQ(a.answers(), (std::vector<AnswerLabel>{AnswerLabel::kYes, AnswerLabel::kNo}));
  EXPECT_EQ(a.source(), AnswerSource::kDocument);
  EXPECT_EQ(backend->requests().at(1).messages.at(0).content, build_qa_prompt("ctx", "Is it cold?"));
}

TEST(AnswerWithText, UnmappableReplyCarriesIndex) {
  auto backend =
      std::make_shared<mocklab::ScriptedChatBackend>(std::vector<std::string>{"1", "perhaps"});
  ChatClient client(backend, quick_config());
  try {
    answer_with_text(client, "ctx", two_questions(), AnswerMode::kBinary, AnswerSource::kDocument);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnmappableAnswer);
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(AnswerWithText, ImageSourceRejected) {
  auto backend = std::make_shared<mocklab::ScriptedChatBackend>(std::vector<std::string>{"1"});
  ChatClient client(backend, quick_config());
  EXPECT_THROW(
      answer_with_text(client, "ctx", two_questions(), AnswerMode::kBinary, AnswerSource::kImage),
      Error);
  EXPECT_EQ(backend->calls(), 0u);
}

TEST(Images, RecognisesCommonFormats) {
  EXPECT_TRUE(looks_like_image(load_image(testing_support::toy_dir() / "images" / "s01.png").bytes));
  EXPECT_TRUE(looks_like_image(bytes_of("P3\n1 1\n255\n0 0 0\n")));
  EXPECT_TRUE(looks_like_image(bytes_of("\xFF\xD8\xFF\xE0 body \xFF\xD9")));
  EXPECT_FALSE(looks_like_image(bytes_of("\xFF\xD8\xFF\xE0 truncated")));
  EXPECT_FALSE(looks_like_image(bytes_of("hello world")));
  EXPECT_FALSE(looks_like_image({}));
  std::string png = read_text(testing_support::toy_dir() / "images" / "s01.png");
  png.resize(png.size() - 12);
  EXPECT_FALSE(looks_like_image(bytes_of(png)));
}

TEST(Images, LoadFailures) {
  TempDir dir;
  write_text(dir / "empty.png", "");
  write_text(dir / "text.png", "not an image");
  for (const char* name : {"missing.png", "empty.png", "text.png"}) {
    try {
      load_image(dir / name);
      ADD_FAILURE() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kImageUnreadable) << name;
    }
  }
  const ImageData img = load_image(testing_support::toy_dir() / "images" / "s01.png");
  EXPECT_EQ(img.sha256.size(), 64u);
}

TEST(AnswerWithImage, UnreadableImageFailsBeforeAnyRequest) {
  TempDir dir;
  write_text(dir / "bad.png", "garbage");
  auto backend = std::make_shared<mocklab::ScriptedVqaBackend>(std::vector<std::string>{"yes", "yes"});
  VqaClient client(backend, quick_config());
  EXPECT_THROW(answer_with_image(client, dir / "bad.png", two_questions()), Error);
  EXPECT_EQ(backend->calls(), 0u);
}

TEST(AnswerWithImage, BinaryNormalization) {
  auto backend =
      std::make_shared<mocklab::ScriptedVqaBackend>(std::vector<std::string>{"Yes.", "no"});
  VqaClient client(backend, quick_config());
  const AnswerSet a =
      answer_with_image(client, testing_support::toy_dir() / "images" / "s01.png", two_questions());
  EXPECT_EQ(a.source(), AnswerSource::kImage);
  EXPECT_EQ(a.answers(), (std::vector<AnswerLabel>{AnswerLabel::kYes, AnswerLabel::kNo}));
}

TEST(AnswerWithImage, NotProvidedIsUnmappableForImages) {
  auto backend = std::make_shared<mocklab::ScriptedVqaBackend>(
      std::vector<std::string>{"yes", "not provided"});
  VqaClient client(backend, quick_config());
  try {
    answer_with_image(client, testing_support::toy_dir() / "images" / "s01.png", two_questions());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnmappableAnswer);
    EXPECT_EQ(e.index(), 1u);
  }
}

}  // namespace
}  // namespace fallacious
