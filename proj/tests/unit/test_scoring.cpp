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

#include <functional>
#include <random>

#include "fallacious/scoring.hpp"
#include "oracles.hpp"

namespace fallacious {
namespace {

constexpr AnswerLabel Y = AnswerLabel::kYes;
constexpr AnswerLabel N = AnswerLabel::kNo;
constexpr AnswerLabel NP = AnswerLabel::kNotProvided;

AnswerSet ref(std::vector<AnswerLabel> a, std::string id = "s") {
  return AnswerSet(std::move(id), AnswerSource::kReferenceSummary, std::move(a));
}
AnswerSet gen(std::vector<AnswerLabel> a, std::string id = "s") {
  return AnswerSet(std::move(id), AnswerSource::kGeneratedSummary, std::move(a));
}
AnswerSet doc(std::vector<AnswerLabel> a, std::string id = "s") {
  return AnswerSet(std::move(id), AnswerSource::kDocument, std::move(a));
}
AnswerSet img(std::vector<AnswerLabel> a, std::string id = "s") {
  return AnswerSet(std::move(id), AnswerSource::kImage, std::move(a));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvariantViolation;
}

TEST(ReferenceBased, WorkedExamples) {
  const auto s = score_reference_based(ref({Y, N, NP}), gen({Y, Y, N}));
  EXPECT_EQ(s.fraction(), "1/3");
  EXPECT_EQ(s.per_question(), (std::vector<bool>{true, false, false}));
  EXPECT_EQ(score_reference_based(ref({Y, N, Y, N}), gen({Y, N, N, Y})).fraction(), "2/4");
  EXPECT_DOUBLE_EQ(score_reference_based(ref({Y, N, NP}), gen({Y, N, NP})).value(), 1.0);
}

TEST(ReferenceBased, NotProvidedPairsCountUnlessExcluded) {
  EXPECT_EQ(score_reference_based(ref({NP, Y}), gen({NP, N})).fraction(), "1/2");
  ScoringOptions strict;
  strict.exclude_not_provided_pairs = true;
  EXPECT_EQ(score_reference_based(ref({NP, Y}), gen({NP, N}), strict).fraction(), "0/1");
  EXPECT_EQ(code_of([&] { score_reference_based(ref({NP}), gen({NP}), strict); }),
            ErrorCode::kEmptyAnswerSets);
}

TEST(ReferenceFree, WorkedExamples) {
  EXPECT_EQ(score_reference_free(doc({Y, N, N}), img({N, N, Y})).fraction(), "2/3");
  EXPECT_EQ(score_reference_free(doc({NP, NP}), img({N, N})).fraction(), "0/2");
  EXPECT_EQ(score_reference_free(doc({Y, Y}), img({N, N})).fraction(), "2/2");
  EXPECT_EQ(score_document_only(doc({Y, N, N})).fraction(), "1/3");
  EXPECT_EQ(score_image_only(img({N, N, Y})).fraction(), "1/3");
}

TEST(Scoring, RejectsMismatchedInputs) {
  EXPECT_EQ(code_of([] { score_reference_based(ref({Y}), gen({Y, N})); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([] { score_reference_based(ref({Y}), gen({Y}, "t")); }),
            ErrorCode::kSampleMismatch);
  EXPECT_EQ(code_of([] { score_reference_based(gen({Y}), ref({Y})); }), ErrorCode::kSourceMismatch);
  EXPECT_EQ(code_of([] { score_reference_free(doc({Y}), doc({Y})); }), ErrorCode::kSourceMismatch);
  EXPECT_EQ(code_of([] { score_reference_free(doc({}), img({})); }), ErrorCode::kEmptyAnswerSets);
}

TEST(Scoring, AgreesWithOracleOnRandomInputs) {
  std::mt19937 rng(11);
  const AnswerLabel labels[] = {Y, N, NP};
  for (int c = 0; c < 500; ++c) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<AnswerLabel> a(n), b(n), d(n), i(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = labels[rng() % 3];
      b[k] = labels[rng() % 3];
      d[k] = labels[rng() % 3];
      i[k] = labels[rng() % 2];
    }
    const auto rb = score_reference_based(ref(a), gen(b));
    const auto expected_rb = oracle::reference_based(a, b);
    EXPECT_EQ(rb.numerator(), expected_rb.num);
    EXPECT_EQ(rb.denominator(), expected_rb.den);
    const auto rf = score_reference_free(doc(d), img(i));
    const auto expected_rf = oracle::reference_free(d, i);
    EXPECT_EQ(rf.numerator(), expected_rf.num);
    EXPECT_EQ(rf.denominator(), expected_rf.den);
    EXPECT_GE(rf.value(), score_document_only(doc(d)).value());
    EXPECT_GE(rf.value(), score_image_only(img(i)).value());
  }
}

TEST(Batch, ScoresInOrderAndReportsFailingPair) {
  std::vector<AnswerPair> pairs{{ref({Y}, "a"), gen({Y}, "a")}, {ref({Y, N}, "b"), gen({N, N}, "b")}};
  const BatchScores b = score_batch(pairs, Framework::kReferenceBased);
  ASSERT_EQ(b.scores.size(), 2u);
  EXPECT_EQ(b.scores[1].sample_id(), "b");
  EXPECT_DOUBLE_EQ(b.mean, 0.75);
  pairs.push_back({ref({Y}, "c"), gen({Y, Y}, "c")});
  try {
    score_batch(pairs, Framework::kReferenceBased);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
    EXPECT_EQ(e.index(), 2u);
  }
  EXPECT_EQ(code_of([] { corpus_mean({}); }), ErrorCode::kEmptyCorpus);
}

}  // namespace
}  // namespace fallacious
