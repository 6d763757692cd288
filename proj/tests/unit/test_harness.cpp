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

#include <algorithm>
#include <functional>

#include "fallacious/digest.hpp"
#include "fallacious/harness.hpp"
#include "fallacious/mocklab.hpp"
#include "test_support.hpp"

namespace fallacious::harness {
namespace {

using testing_support::read_text;
using testing_support::TempDir;
using testing_support::toy_dir;
using testing_support::write_text;

/// Chat backend answering from a function of the prompt.
class FnChat : public ChatBackend {
 public:
  explicit FnChat(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const ChatRequest& request) override {
    return fn_(request.messages.at(0).content);
  }

 private:
  std::function<std::string(const std::string&)> fn_;
};

class FnVqa : public VqaBackend {
 public:
  explicit FnVqa(std::string reply) : reply_(std::move(reply)) {}
  std::string answer(std::span<const std::byte>, std::string_view) override { return reply_; }

 private:
  std::string reply_;
};

constexpr const char* kRefBasedList =
    R"([{"Question": "Is the sky blue?", "Answer": "yes"}, {"Question": "Is grass red?", "Answer": "no"}, {"Question": "Did it rain?", "Answer": "not provided"}])";
constexpr const char* kRefFreeList = R"(["Is the sky blue?", "Is grass red?", "Did it rain?"])";

bool is_qgen(const std::string& prompt) {
  return prompt.rfind("Now, you will receive", 0) == 0 || prompt.rfind("I will now provide", 0) == 0;
}

/// Text answers that depend on both the context and the question.
std::string hashed_answer(const std::string& prompt) {
  const char c = sha256_hex(prompt).back();
  const bool ternary = prompt.find("not provided") != std::string::npos;
  switch (c % 3) {
    case 0: return ternary ? "yes" : "1";
    case 1: return ternary ? "no" : "0";
    default: return ternary ? "not provided" : "0";
  }
}

Backends scripted_backends(std::function<std::string(const std::string&)> qa,
                           std::string vqa_reply = "no") {
  Backends b;
  b.qgen = std::make_shared<FnChat>([](const std::string& p) {
    return std::string(p.rfind("Now, you will receive", 0) == 0 ? kRefBasedList : kRefFreeList);
  });
  b.qa = std::make_shared<FnChat>(std::move(qa));
  b.vqa = std::make_shared<FnVqa>(std::move(vqa_reply));
  return b;
}

RunConfig quiet_config(const TempDir& dir) {
  RunConfig c;
  c.qgen = c.qa = c.vqa = backend_of_kind("scripted");
  c.qgen.retry_backoff_seconds = c.qa.retry_backoff_seconds = c.vqa.retry_backoff_seconds = 0;
  c.metrics = {std::string(kRefBasedMetric), std::string(kRefFreeMetric), "rouge1", "rougeL", "bleu"};
  c.out_dir = (dir.path() / "out").string();
  c.run_id = "unit";
  return c;
}

std::string sample_line(const std::string& id, const std::string& summary,
                        std::optional<std::string> reference, std::optional<std::string> image,
                        std::optional<int> human = std::nullopt) {
  EvalSample s;
  s.sample_id = id;
  s.document = "The sky was blue over the green grass.";
  s.generated_summary = summary;
  s.reference_summary = std::move(reference);
  s.image = std::move(image);
  s.human_score = human;
  return serialize_sample(s) + "\n";
}

Corpus small_corpus(const TempDir& dir, const std::string& text) {
  write_text(dir / "corpus.jsonl", text);
  std::filesystem::copy_file(toy_dir() / "images" / "s01.png", dir / "ok.png");
  write_text(dir / "broken.png", "not a png");
  return load_corpus(dir / "corpus.jsonl");
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

TEST(Corpus, BadLinesAreReportedTogether) {
  const std::string good = sample_line("a", "Blue sky.", "Blue sky.", "ok.png");
  const std::string text = good + "{\"id\": \"b\"}\n" + sample_line("c", "x.", std::nullopt, std::nullopt);
  try {
    parse_corpus(text, ".");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.index(), 2u);
    const std::string what = e.what();
    EXPECT_NE(what.find("1 of 3 corpus records are invalid"), std::string::npos) << what;
    EXPECT_NE(what.find("line 2:"), std::string::npos);
  }
}

TEST(Corpus, DuplicateIds) {
  const std::string line = sample_line("a", "Blue sky.", std::nullopt, std::nullopt);
  try {
    parse_corpus(line + sample_line("b", "x.", std::nullopt, std::nullopt) + line, ".");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
    EXPECT_EQ(e.subject(), "a");
    EXPECT_EQ(e.index(), 3u);
  }
}

TEST(Corpus, ResolvesImagesAgainstCorpusDirectory) {
  const Corpus c = load_corpus(toy_dir() / "corpus.jsonl");
  EXPECT_EQ(c.samples.size(), 12u);
  EXPECT_EQ(*c.image_path(c.samples[0]), toy_dir() / "images" / "s01.png");
  EXPECT_EQ(code_of([] { load_corpus("/nonexistent/corpus.jsonl"); }), ErrorCode::kIoError);
}

TEST(RunConfig, JsonOverlayAndValidation) {
  RunConfig c = run_config_from_json(Json::parse(R"({"questions": 6, "metrics": ["bleu"],
      "backends": {"qa": {"kind": "scripted", "script": ["1"]}}})"));
  EXPECT_EQ(c.questions, 6);
  EXPECT_EQ(c.qgen_config().reffree_questions, 6);
  EXPECT_EQ(c.qa.kind, "scripted");
  EXPECT_EQ(c.effective_metrics(), std::vector<std::string>{"bleu"});
  EXPECT_EQ(code_of([] { run_config_from_json(Json::parse(R"({"questionz": 6})")); }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { run_config_from_json(Json::parse(R"({"metrics": ["meteor"]})")).validate(); }),
            ErrorCode::kInvalidConfig);
  // HTTP kinds need an endpoint once loaded.
  EXPECT_EQ(code_of([] { run_config_from_json(Json::parse(R"({"backends": {"qa": {"kind": "openai"}}})")); }),
            ErrorCode::kInvalidConfig);
  const RunConfig toy = load_run_config(toy_dir() / "config.json");
  EXPECT_EQ(toy.qa.kind, "oracle");
  EXPECT_EQ(toy.qa.fact_table, (toy_dir() / "facts.json").string());
  EXPECT_EQ(to_json(run_config_from_json(to_json(toy))), to_json(toy));
}

TEST(ReferenceBased, IdenticalSummariesScoreOne) {
  TempDir dir;
  std::string text;
  for (int i = 0; i < 8; ++i) {
    const std::string summary = "Summary number " + std::to_string(i) + " about the sky.";
    text += sample_line("s" + std::to_string(i), summary, summary, std::nullopt);
  }
  const Corpus corpus = small_corpus(dir, text);
  RunConfig config = quiet_config(dir);
  Clients clients = make_clients(config, scripted_backends(hashed_answer));
  for (const auto& o : run_reference_based(corpus, config, clients)) {
    ASSERT_TRUE(o.score) << o.sample_id;
    EXPECT_DOUBLE_EQ(o.score->value(), 1.0);
    EXPECT_EQ(o.score->denominator(), 3);
  }
}

TEST(ReferenceBased, MissingReferenceFailsOnlyThatSample) {
  TempDir dir;
  const Corpus corpus = small_corpus(
      dir, sample_line("a", "Blue sky.", "Blue sky.", std::nullopt) +
               sample_line("b", "Blue sky.", std::nullopt, std::nullopt) +
               sample_line("c", "Red grass.", "Blue sky.", std::nullopt));
  RunConfig config = quiet_config(dir);
  Clients clients = make_clients(config, scripted_backends(hashed_answer));
  const auto out = run_reference_based(corpus, config, clients);
  EXPECT_TRUE(out[0].score);
  ASSERT_TRUE(out[1].failure);
  EXPECT_EQ(out[1].failure->code(), ErrorCode::kInvariantViolation);
  EXPECT_EQ(out[1].failure->subject(), "reference");
  EXPECT_FALSE(out[1].score);
  EXPECT_TRUE(out[2].score);
}

TEST(ReferenceFree, DocumentAlwaysYesScoresOne) {
  TempDir dir;
  const Corpus corpus = small_corpus(dir, sample_line("a", "Blue sky.", std::nullopt, "ok.png") +
                                              sample_line("b", "Red grass.", std::nullopt, "ok.png"));
  RunConfig config = quiet_config(dir);
  Clients clients = make_clients(config, scripted_backends([](const std::string&) { return "1"; }));
  for (const auto& o : run_reference_free(corpus, config, clients)) {
    ASSERT_TRUE(o.score);
    EXPECT_DOUBLE_EQ(o.score->value(), 1.0);
    EXPECT_DOUBLE_EQ(o.image_only->value(), 0.0);
    EXPECT_DOUBLE_EQ(o.document_only->value(), 1.0);
  }
}

TEST(ReferenceFree, UnreadableImageFailsOnlyThatSample) {
  TempDir dir;
  const Corpus corpus = small_corpus(dir, sample_line("a", "Blue sky.", std::nullopt, "ok.png") +
                                              sample_line("b", "Blue sky.", std::nullopt, "broken.png") +
                                              sample_line("c", "Blue sky.", std::nullopt, std::nullopt));
  RunConfig config = quiet_config(dir);
  int qgen_calls = 0;
  Backends backends = scripted_backends(hashed_answer);
  backends.qgen = std::make_shared<FnChat>([&](const std::string&) {
    ++qgen_calls;
    return std::string(kRefFreeList);
  });
  config.parallelism = 1;
  Clients clients = make_clients(config, backends);
  const auto out = run_reference_free(corpus, config, clients);
  EXPECT_TRUE(out[0].score);
  ASSERT_TRUE(out[1].failure);
  EXPECT_EQ(out[1].failure->code(), ErrorCode::kImageUnreadable);
  ASSERT_TRUE(out[2].failure);
  EXPECT_EQ(out[2].failure->subject(), "image_path");
  EXPECT_EQ(qgen_calls, 1);  // no requests spent on the failing samples

  config.strict = true;
  Clients strict_clients = make_clients(config, backends);
  EXPECT_EQ(code_of([&] { run_reference_free(corpus, config, strict_clients); }),
            ErrorCode::kImageUnreadable);
}

TEST(Evaluate, StrictModeWritesNoReport) {
  TempDir dir;
  const Corpus corpus = small_corpus(dir, sample_line("a", "Blue sky.", "Blue sky.", "ok.png") +
                                              sample_line("b", "Blue sky.", "Blue sky.", "broken.png"));
  RunConfig config = quiet_config(dir);
  config.strict = true;
  EXPECT_THROW(evaluate(corpus, config, {}, scripted_backends(hashed_answer)), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "report.json"));
  config.strict = false;
  const EvalRun run = evaluate(corpus, config, {}, scripted_backends(hashed_answer));
  EXPECT_EQ(run.report.failed_samples(), 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.json"));
}

TEST(Report, EmittedTwiceIsIdenticalAndCsvHasOneRowPerSample) {
  TempDir dir;
  const Corpus corpus = small_corpus(dir, sample_line("a", "Blue sky.", "Blue sky.", "ok.png", 4) +
                                              sample_line("b", "Red grass.", "Blue sky.", "ok.png", 2));
  RunConfig config = quiet_config(dir);
  const EvalRun run = evaluate(corpus, config, {}, scripted_backends(hashed_answer));
  emit_report(run.report, {"json", "csv", "md"}, dir / "first");
  emit_report(run.report, {"json", "csv", "md"}, dir / "second");
  for (const char* f : {"report.json", "report.csv", "report.md"}) {
    EXPECT_EQ(read_text(dir / "first" / f), read_text(dir / "second" / f)) << f;
  }
  const std::string csv = read_text(dir / "first" / "report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "sample_id,fallacious_ref_based,fallacious_ref_free,rouge1,rougeL,bleu,human_score,status");
  const Json j = Json::parse(read_text(dir / "first" / "report.json"));
  EXPECT_EQ(j.at("schema"), "fallacious.report/1");
  // Two annotated samples: the coefficient is defined only when the metric varies.
  EXPECT_EQ(code_of([] { emit_report(MetricReport{}, {"pdf"}, "/tmp"); }), ErrorCode::kInvalidConfig);
}

TEST(Report, CorrelationTableWithoutCoefficients) {
  EXPECT_EQ(render_correlation_table({}), "insufficient data\n");
  EXPECT_EQ(render_correlation_table({CorrelationEntry{"bleu", 1, std::nullopt, "InsufficientOverlap"}}),
            "insufficient data\n");
  const std::string table =
      render_correlation_table({CorrelationEntry{"bleu", 5, 0.123, {}},
                                CorrelationEntry{std::string(kRefFreeMetric), 5, -0.5, {}}});
  EXPECT_NE(table.find("| BLEU | 0.12 | - | 0.12 |"), std::string::npos) << table;
  EXPECT_NE(table.find("FALLACIOUS (reference-free)"), std::string::npos);
  EXPECT_NE(table.find("-0.50"), std::string::npos);
}

std::vector<AnnotationRecord> humans(std::vector<int> scores) {
  std::vector<AnnotationRecord> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({"s" + std::to_string(i), scores[i], {}});
  return out;
}

TEST(Correlation, PerfectAgreementAndInnerJoin) {
  const auto h = humans({1, 2, 3, 4, 5});
  MetricValues up{{"s0", 0.1}, {"s1", 0.2}, {"s2", 0.3}, {"s3", 0.4}, {"s4", 0.5}, {"zz", 9.0}};
  MetricValues down{{"s0", 5}, {"s1", 4}, {"s2", 3}, {"s3", 2}, {"s4", 1}};
  const Correlation c = correlate_metric("m", up, h);
  EXPECT_EQ(c.n, 5u);
  EXPECT_NEAR(c.r, 1.0, 1e-12);
  EXPECT_NEAR(correlate_metric("m", down, h).r, -1.0, 1e-12);
  const auto all = correlate_with_humans({{"up", up}, {"down", down}}, h);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[1].metric, "down");
}

TEST(Correlation, TooFewJoinedSamples) {
  try {
    correlate_metric("bleu", MetricValues{{"s0", 0.3}}, humans({1, 2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientOverlap);
    EXPECT_EQ(e.subject(), "bleu");
  }
  EXPECT_EQ(code_of([] {
              correlate_metric("bleu", MetricValues{{"s0", 0.3}, {"s1", 0.3}}, humans({1, 2}));
            }),
            ErrorCode::kDegenerateVariance);
}

TEST(Annotations, ParsingAndErrors) {
  const AnnotationRecord a = parse_annotation(
      R"({"sample_id": "s1", "human_faithfulness": 4, "gold_answers": {"document": {"0": "yes", "1": "no"}}})");
  EXPECT_EQ(a.human_faithfulness, 4);
  EXPECT_EQ(a.gold_answers.at(AnswerSource::kDocument).at(1), AnswerLabel::kNo);
  EXPECT_EQ(code_of([] { parse_annotation(R"({"sample_id": "s1", "human_faithfulness": 6})"); }),
            ErrorCode::kInvariantViolation);
  EXPECT_EQ(code_of([] { parse_annotation(R"({"sample_id": "s1"})"); }), ErrorCode::kMalformedRecord);
  TempDir dir;
  write_text(dir / "a.jsonl", R"({"sample_id": "s1", "human_faithfulness": 4})"
                              "\n"
                              R"({"sample_id": "s1", "human_faithfulness": 3})"
                              "\n");
  EXPECT_EQ(code_of([&] { load_annotations(dir / "a.jsonl"); }), ErrorCode::kDuplicateId);
  EXPECT_EQ(load_annotations(toy_dir() / "annotations.jsonl").size(), 12u);
}

TEST(Reliability, AccuracyOverThousandGoldAnswers) {
  std::vector<AnnotationRecord> annotations;
  std::vector<AnswerSet> answers;
  int wrong = 0;
  for (int s = 0; s < 100; ++s) {
    AnnotationRecord rec{"s" + std::to_string(s), 3, {}};
    std::vector<AnswerLabel> model;
    for (std::size_t q = 0; q < 10; ++q) {
      const AnswerLabel gold = (s + q) % 2 ? AnswerLabel::kYes : AnswerLabel::kNo;
      rec.gold_answers[AnswerSource::kDocument][q] = gold;
      const bool flip = wrong < 47 && (s * 10 + q) % 21 == 0;
      if (flip) ++wrong;
      model.push_back(flip ? (gold == AnswerLabel::kYes ? AnswerLabel::kNo : AnswerLabel::kYes) : gold);
    }
    annotations.push_back(rec);
    answers.emplace_back(rec.sample_id, AnswerSource::kDocument, model);
  }
  ASSERT_EQ(wrong, 47);
  const auto r = qa_reliability(annotations, answers);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].matches, 953u);
  EXPECT_EQ(r[0].total, 1000u);
  EXPECT_DOUBLE_EQ(r[0].accuracy(), 0.953);
}

TEST(Reliability, MisalignedGoldAnswers) {
  AnnotationRecord rec{"s", 3, {}};
  rec.gold_answers[AnswerSource::kImage] = {{0, AnswerLabel::kYes}, {2, AnswerLabel::kNo}};
  const AnswerSet img("s", AnswerSource::kImage, {AnswerLabel::kYes, AnswerLabel::kNo});
  EXPECT_EQ(code_of([&] { qa_reliability({rec}, {img}); }), ErrorCode::kAlignmentError);
  EXPECT_EQ(code_of([&] { qa_reliability({rec}, {}); }), ErrorCode::kAlignmentError);
  EXPECT_EQ(code_of([] { qa_reliability({AnnotationRecord{"s", 3, {}}}, {}); }),
            ErrorCode::kAlignmentError);
}

TEST(Artifacts, JsonlRoundTrip) {
  TempDir dir;
  write_jsonl(dir / "x.jsonl", {Json{{"a", 1}}, Json{{"b", "two"}}});
  const auto back = read_jsonl(dir / "x.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].at("b"), "two");
}

}  // namespace
}  // namespace fallacious::harness
