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

#include <random>
#include <set>

#include "fallacious/answering.hpp"
#include "fallacious/mocklab.hpp"
#include "fallacious/prompts.hpp"
#include "fallacious/qgen.hpp"
#include "test_support.hpp"

namespace fallacious {
namespace {

using testing_support::fixture;
using testing_support::read_text;

constexpr const char* kWorkedArticle =
    "u.s. , albanian , croatian and macedonian soldiers began a monthlong joint military "
    "exercise tuesday , the u.s. embassy said tuesday .";
constexpr const char* kWorkedSummary =
    "u.s. albanian croatian and macedonian soldiers joint military exercise.s.";

template <class Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error thrown";
  return Error(ErrorCode::kInvariantViolation, "none");
}

TEST(Prompts, RefBasedPromptMatchesPublishedText) {
  EXPECT_EQ(build_refbased_qgen_prompt(kWorkedArticle), read_text(fixture("worked_refbased_prompt.txt")));
}

TEST(Prompts, RefFreePromptMatchesPublishedText) {
  EXPECT_EQ(build_reffree_qgen_prompt(kWorkedSummary, 3), read_text(fixture("worked_reffree_prompt.txt")));
}

TEST(Prompts, QaPromptMatchesPublishedText) {
  const std::string context =
      "u.s. , albanian , croatian and macedonian soldiers began a monthlong joint military "
      "exercise Tuesday, the u.s. embassy said Tuesday.";
  EXPECT_EQ(build_qa_prompt(context, "Are U.S. soldiers participating in a joint military "
                                     "exercise with Albanian soldiers?"),
            read_text(fixture("worked_qa_prompt.txt")));
}

TEST(Prompts, ArticleSubstitution) {
  EXPECT_NE(build_refbased_qgen_prompt("x.").find(R"(The news article is:"x.")"), std::string::npos);
  const std::string quoted = build_refbased_qgen_prompt(R"(He said "no" twice.)");
  EXPECT_NE(quoted.find(R"("He said "no" twice.")"), std::string::npos);
}

TEST(Prompts, ReferenceConditioningAppendsBlock) {
  const std::string p = build_refbased_qgen_prompt("doc.", std::string_view("ref."));
  EXPECT_EQ(p.rfind(build_refbased_qgen_prompt("doc."), 0), 0u);
  EXPECT_NE(p.find(R"(The reference summary is:"ref.")"), std::string::npos);
}

TEST(Prompts, SixQuestionsForCepsumConfiguration) {
  const std::string p = build_reffree_qgen_prompt("s.", 6);
  EXPECT_NE(p.find("generate six yes/no questions"), std::string::npos);
  EXPECT_NE(p.find(R"(["question1", "question2", "question3", "question4", "question5", "question6"])"),
            std::string::npos);
}

TEST(Prompts, SingleQuestionBoundary) {
  const std::string p = build_reffree_qgen_prompt("s.", 1);
  EXPECT_NE(p.find("generate one yes/no question regarding"), std::string::npos);
  EXPECT_NE(p.find(R"(format of ["question1"].)"), std::string::npos);
}

TEST(Prompts, InvalidInputs) {
  EXPECT_EQ(error_of([] { build_refbased_qgen_prompt("  "); }).code(), ErrorCode::kEmptyDocument);
  EXPECT_EQ(error_of([] { build_reffree_qgen_prompt("", 3); }).code(), ErrorCode::kEmptySummary);
  EXPECT_EQ(error_of([] { build_reffree_qgen_prompt("s", 0); }).code(), ErrorCode::kInvalidCount);
}

TEST(Prompts, RenderingLeavesNoPlaceholders) {
  EXPECT_EQ(render("a {x} b {y}", {{"x", "{y}"}, {"y", "2"}}), "a {y} b 2");
  EXPECT_EQ(error_of([] { render("a {missing}", {}); }).code(), ErrorCode::kInvalidConfig);
  // JSON braces in the template body are not placeholders.
  EXPECT_EQ(render(R"([{"Question": q}] {v})", {{"v", "1"}}), R"([{"Question": q}] 1)");
}

TEST(Prompts, TemplateHashesAreDistinctAndStable) {
  std::set<std::string> hashes;
  for (TemplateId id : all_template_ids()) {
    const auto& t = prompt_template(id);
    EXPECT_EQ(t.hash.size(), 64u);
    hashes.insert(t.hash);
  }
  EXPECT_EQ(hashes.size(), all_template_ids().size());
  EXPECT_EQ(count_word(20), "twenty");
  EXPECT_EQ(count_word(21), "21");
}

TEST(ParseRefBased, PublishedOutputParses) {
  const QuestionSet qs =
      parse_refbased_question_set(read_text(fixture("worked_refbased_output.txt")), "t3");
  ASSERT_EQ(qs.size(), 10u);
  EXPECT_EQ(qs[0].text, "Did the joint military exercise begin on Tuesday?");
  EXPECT_EQ(qs[0].seed_answer, AnswerLabel::kYes);
  const std::vector<AnswerLabel> expected{
      AnswerLabel::kYes, AnswerLabel::kNo,  AnswerLabel::kYes, AnswerLabel::kNo,
      AnswerLabel::kYes, AnswerLabel::kNo,  AnswerLabel::kYes, AnswerLabel::kNo,
      AnswerLabel::kNo,  AnswerLabel::kYes};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(qs[i].index, i);
    EXPECT_EQ(qs[i].seed_answer, expected[i]) << i;
  }
}

TEST(ParseRefBased, UnknownAnswerString) {
  const Error e = error_of([] {
    parse_refbased_question_set(R"([{"Question": "Is x?", "Answer": "maybe"}])", "a");
  });
  EXPECT_EQ(e.code(), ErrorCode::kUnknownAnswerString);
  EXPECT_EQ(e.index(), 0u);
  EXPECT_EQ(e.subject(), "maybe");
}

TEST(ParseRefBased, EmptyListAndBadShapes) {
  EXPECT_EQ(error_of([] { parse_refbased_question_set("[]", "a"); }).code(),
            ErrorCode::kEmptyQuestionList);
  EXPECT_EQ(error_of([] { parse_refbased_question_set(R"(["Is x?"])", "a"); }).code(),
            ErrorCode::kBadItemShape);
  EXPECT_EQ(error_of([] { parse_refbased_question_set("no list here", "a"); }).code(),
            ErrorCode::kNoParsableList);
  EXPECT_EQ(error_of([] {
              parse_refbased_question_set(R"([{"Question": "Is x?", "Answer": "yes"}])", "a", 2, 50);
            }).code(),
            ErrorCode::kWrongQuestionCount);
}

TEST(ParseRefBased, AnswerMappingTable) {
  EXPECT_EQ(map_seed_answer("YES"), AnswerLabel::kYes);
  EXPECT_EQ(map_seed_answer("No."), AnswerLabel::kNo);
  EXPECT_EQ(map_seed_answer("not_provided"), AnswerLabel::kNotProvided);
  EXPECT_EQ(map_seed_answer("N/A"), AnswerLabel::kNotProvided);
  EXPECT_EQ(map_seed_answer("maybe"), std::nullopt);
  EXPECT_EQ(map_seed_answer("yes!"), std::nullopt);
}

TEST(ParseRefFree, PublishedOutputParses) {
  const QuestionSet qs =
      parse_reffree_question_set(read_text(fixture("worked_reffree_output.txt")), "t3", 3);
  ASSERT_EQ(qs.size(), 3u);
  EXPECT_EQ(qs[0].text,
            "Are U.S. soldiers participating in a joint military exercise with Albanian soldiers?");
  EXPECT_EQ(qs[2].text,
            "Are U.S. soldiers participating in a joint military exercise with Macedonian soldiers?");
  EXPECT_EQ(qs.origin(), Framework::kReferenceFree);
}

TEST(ParseRefFree, WrongCount) {
  const Error e = error_of([] { parse_reffree_question_set(R"(["A?", "B?"])", "a", 3); });
  EXPECT_EQ(e.code(), ErrorCode::kWrongQuestionCount);
  EXPECT_EQ(e.index(), 2u);
  EXPECT_EQ(e.subject(), "3");
}

TEST(ParseRefFree, NonInterrogative) {
  const Error e = error_of([] { parse_reffree_question_set(R"(["Soldiers are training."])", "a", 1); });
  EXPECT_EQ(e.code(), ErrorCode::kNonInterrogativeItem);
  EXPECT_EQ(e.index(), 0u);
}

TEST(ExtractList, ToleratesFencesAndProse) {
  EXPECT_EQ(extract_json_list("Sure! ```json\n[\"A?\"]\n``` hope this helps").size(), 1u);
  EXPECT_EQ(extract_json_list(R"(Here: ["a [b] c?", "d?"])").size(), 2u);
  EXPECT_EQ(error_of([] { extract_json_list(R"(["a?"] and ["b?"])"); }).code(),
            ErrorCode::kNoParsableList);
  EXPECT_EQ(error_of([] { extract_json_list("[unbalanced"); }).code(), ErrorCode::kNoParsableList);
}

TEST(ExtractList, IsTotalOnArbitraryText) {
  std::mt19937 rng(3);
  const std::string alphabet = "[]{}\",:?ab \\\n";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const int n = static_cast<int>(rng() % 24);
    for (int k = 0; k < n; ++k) s += alphabet[rng() % alphabet.size()];
    try {
      parse_reffree_question_set(s, "a", 1);
      parse_refbased_question_set(s, "a");
    } catch (const Error&) {
    }
  }
}

BackendConfig quick_config() {
  BackendConfig c;
  c.kind = "scripted";
  c.retry_backoff_seconds = 0;
  return c;
}

EvalSample worked_sample() {
  EvalSample s;
  s.sample_id = "t3";
  s.document = kWorkedArticle;
  s.generated_summary = kWorkedSummary;
  return s;
}

TEST(GenerateQuestions, ScriptedPublishedOutput) {
  auto backend = std::make_shared<mocklab::ScriptedChatBackend>(
      std::vector<std::string>{read_text(fixture("worked_refbased_output.txt"))});
  ChatClient client(backend, quick_config());
  const QGenResult r = generate_questions(client, worked_sample(), Framework::kReferenceBased, {});
  EXPECT_EQ(r.questions.size(), 10u);
  EXPECT_EQ(r.attempts.size(), 1u);
  EXPECT_EQ(backend->requests().at(0).messages.at(0).content,
            read_text(fixture("worked_refbased_prompt.txt")));
}

TEST(GenerateQuestions, RetriesIdenticalPromptUntilParse) {
  auto backend = std::make_shared<mocklab::ScriptedChatBackend>(std::vector<std::string>{
      "garbage", "still garbage", read_text(fixture("worked_reffree_output.txt"))});
  ChatClient client(backend, quick_config());
  QGenConfig config;
  config.max_attempts = 3;
  const QGenResult r = generate_questions(client, worked_sample(), Framework::kReferenceFree, config);
  EXPECT_EQ(r.questions.size(), 3u);
  ASSERT_EQ(r.attempts.size(), 3u);
  const auto requests = backend->requests();
  EXPECT_EQ(requests[0].messages[0].content, requests[2].messages[0].content);
  EXPECT_EQ(r.attempts[2].attempt, 3);
}

TEST(GenerateQuestions, SucceedsOnSecondAttemptWithLimitTwo) {
  auto backend = std::make_shared<mocklab::ScriptedChatBackend>(
      std::vector<std::string>{"garbage", read_text(fixture("worked_reffree_output.txt"))});
  ChatClient client(backend, quick_config());
  QGenConfig config;
  config.max_attempts = 2;
  EXPECT_EQ(generate_questions(client, worked_sample(), Framework::kReferenceFree, config).attempts.size(),
            2u);
}

TEST(GenerateQuestions, ExhaustsAfterLimit) {
  auto backend = std::make_shared<mocklab::ScriptedChatBackend>(
      std::vector<std::string>{"garbage", "garbage", "garbage"});
  ChatClient client(backend, quick_config());
  QGenConfig config;
  config.max_attempts = 2;
  const Error e = error_of(
      [&] { generate_questions(client, worked_sample(), Framework::kReferenceFree, config); });
  EXPECT_EQ(e.code(), ErrorCode::kParseExhausted);
  EXPECT_EQ(backend->calls(), 2u);
}

TEST(GenerateQuestions, ConditioningNeedsReference) {
  auto backend = std::make_shared<mocklab::ScriptedChatBackend>(std::vector<std::string>{"x"});
  ChatClient client(backend, quick_config());
  QGenConfig config;
  config.condition_on_reference = true;
  EXPECT_EQ(error_of([&] {
              generate_questions(client, worked_sample(), Framework::kReferenceBased, config);
            }).code(),
            ErrorCode::kInvariantViolation);
  EXPECT_EQ(backend->calls(), 0u);
}

}  // namespace
}  // namespace fallacious
