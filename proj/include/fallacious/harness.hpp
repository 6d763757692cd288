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

// Corpus ingestion, pipeline orchestration for both frameworks,
// human-annotation ingestion, correlation with human judgments and report
// emission.
//
// Corpus file: one JSON object per line, see serialize_sample(). Image paths
// are resolved relative to the directory of the corpus file.
//
// Annotation file: one JSON object per line,
//
//   {"sample_id": "s1", "human_faithfulness": 4,
//    "gold_answers": {"document": {"0": "yes", "1": "no"}, "image": {...}}}
//
// gold_answers is optional and keyed by role, then by question index.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fallacious/answering.hpp"
#include "fallacious/backend.hpp"
#include "fallacious/baselines.hpp"
#include "fallacious/core.hpp"
#include "fallacious/qgen.hpp"
#include "fallacious/scoring.hpp"

namespace fallacious::harness {

struct Corpus {
  std::filesystem::path base_dir;
  std::vector<EvalSample> samples;

  /// Image path of the sample resolved against base_dir. nullopt when the
  /// sample has no image.
  std::optional<std::filesystem::path> image_path(const EvalSample& sample) const;
  const EvalSample* find(const std::string& sample_id) const;
};

/// Every malformed line is reported in one kMalformedRecord (or
/// kInvariantViolation) error whose message lists "line N: ..." entries;
/// index() is the first bad line. kDuplicateId names the repeated id.
Corpus parse_corpus(std::string_view text, std::filesystem::path base_dir);
Corpus load_corpus(const std::filesystem::path& path);

// Metric names used in reports and correlation tables.
inline constexpr std::string_view kRefBasedMetric = "fallacious_ref_based";
inline constexpr std::string_view kRefFreeMetric = "fallacious_ref_free";
inline constexpr std::string_view kRefFreeDocumentMetric = "fallacious_ref_free_document";
inline constexpr std::string_view kRefFreeImageMetric = "fallacious_ref_free_image";

/// Every known metric in report column order.
const std::vector<std::string>& all_metrics();

inline BackendConfig backend_of_kind(std::string kind) {
  BackendConfig c;
  c.kind = std::move(kind);
  return c;
}

struct RunConfig {
  std::vector<Framework> frameworks{Framework::kReferenceBased, Framework::kReferenceFree};
  /// Reference-free questions per sample.
  int questions = 3;
  int qgen_attempts = 3;
  std::size_t min_questions = 1;
  std::size_t max_questions = 50;
  bool condition_on_reference = false;
  bool strict_not_provided = false;
  /// Abort on the first failing sample instead of recording it.
  bool strict = false;
  BackendConfig qgen;
  BackendConfig qa;
  BackendConfig vqa = backend_of_kind("vqa-http");
  /// Only needed for bertscore, clipscore and clipbertscore.
  std::optional<BackendConfig> scoring;
  /// Empty disables the response cache.
  std::string cache_dir;
  /// Samples processed concurrently.
  int parallelism = 4;
  std::vector<std::string> formats{"json", "csv", "md"};
  /// Empty selects every metric the frameworks and backends can produce.
  std::vector<std::string> metrics;
  baselines::ClipBertWeights clipbert_weights;
  /// Text the native baselines compare the summary against: "document" or
  /// "reference".
  std::string baseline_reference = "document";
  std::string run_id = "run";
  std::string out_dir = "out";

  void validate() const;
  bool runs(Framework framework) const;
  QGenConfig qgen_config() const;
  /// Metrics this configuration reports, in column order.
  std::vector<std::string> effective_metrics() const;
};

Json to_json(const RunConfig& config);
/// Overlays the keys of `j` onto `base`. Unknown keys are rejected.
RunConfig run_config_from_json(const Json& j, RunConfig base = {});
/// Relative fact_table paths are resolved against the config file.
RunConfig load_run_config(const std::filesystem::path& path);

struct Backends {
  std::shared_ptr<ChatBackend> qgen;
  std::shared_ptr<ChatBackend> qa;
  std::shared_ptr<VqaBackend> vqa;
  std::shared_ptr<ScoringBackend> scoring;
};

enum class Role { kQGen, kQa, kVqa, kScoring };

/// Roles a full evaluation under `config` needs.
std::vector<Role> roles_needed(const RunConfig& config);

/// Instantiates the configured backend kinds for `roles` (default: the
/// roles_needed). Oracle kinds need the corpus to recognise prompts.
Backends make_backends(const RunConfig& config, const Corpus& corpus,
                       std::optional<std::vector<Role>> roles = std::nullopt);

struct Clients {
  std::shared_ptr<ChatClient> qgen;
  std::shared_ptr<ChatClient> qa;
  std::shared_ptr<VqaClient> vqa;
  std::shared_ptr<ScoringClient> scoring;
};

/// Wraps the backends in clients sharing one cache under config.cache_dir.
Clients make_clients(const RunConfig& config, const Backends& backends);

/// Sum of backend requests and cache hits over all clients.
ClientStats total_stats(const Clients& clients);

/// Outcome of one framework on one sample. `first`/`second` are the
/// reference/generated answer sets, or the document/image ones.
struct SampleOutcome {
  std::string sample_id;
  std::optional<QuestionSet> questions;
  std::optional<AnswerSet> first;
  std::optional<AnswerSet> second;
  std::optional<FactualityScore> score;
  std::optional<FactualityScore> document_only;
  std::optional<FactualityScore> image_only;
  std::optional<Error> failure;
};

/// Question generation for one sample (checks the framework's sample
/// preconditions first).
QuestionSet generate_for_sample(const EvalSample& sample, Framework framework,
                                const RunConfig& config, ChatClient& client);

/// Answers for one role. Reference-based question sets are answered in
/// ternary mode, reference-free ones in binary mode; the image role goes
/// through VQA.
AnswerSet answer_for_sample(const Corpus& corpus, const EvalSample& sample,
                            const QuestionSet& questions, AnswerSource role, Clients& clients);

std::vector<SampleOutcome> run_reference_based(const Corpus& corpus, const RunConfig& config,
                                               Clients& clients);
std::vector<SampleOutcome> run_reference_free(const Corpus& corpus, const RunConfig& config,
                                              Clients& clients);

struct AnnotationRecord {
  std::string sample_id;
  int human_faithfulness = 0;
  std::map<AnswerSource, std::map<std::size_t, AnswerLabel>> gold_answers;
};

AnnotationRecord parse_annotation(std::string_view line);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);

/// sample_id -> metric value.
using MetricValues = std::map<std::string, double>;

struct Correlation {
  std::string metric;
  /// Samples in the join of scored and annotated ids.
  std::size_t n = 0;
  double r = 0.0;
};

/// Pearson r per metric over the inner join with the human scores.
/// kInsufficientOverlap / kDegenerateVariance with the metric as subject.
Correlation correlate_metric(const std::string& metric, const MetricValues& values,
                             const std::vector<AnnotationRecord>& annotations);
std::vector<Correlation> correlate_with_humans(
    const std::vector<std::pair<std::string, MetricValues>>& scores,
    const std::vector<AnnotationRecord>& annotations);

struct Reliability {
  AnswerSource role;
  std::size_t matches = 0;
  std::size_t total = 0;
  double accuracy() const { return static_cast<double>(matches) / static_cast<double>(total); }
};

/// Accuracy of the model answers against the gold answers, per role that
/// has gold labels. kAlignmentError when a gold entry has no model answer
/// set or its indices are not exactly 0..n-1 of that set.
std::vector<Reliability> qa_reliability(const std::vector<AnnotationRecord>& annotations,
                                        const std::vector<AnswerSet>& answers);

struct TraceRow {
  std::size_t index = 0;
  std::string question;
  AnswerLabel first = AnswerLabel::kNo;
  AnswerLabel second = AnswerLabel::kNo;
  bool flag = false;
  bool counted = true;
};

struct FailureNote {
  std::string stage;
  std::string code;
  std::string message;
};

struct SampleRow {
  std::string sample_id;
  std::optional<int> human_score;
  std::map<std::string, double> values;
  std::map<std::string, std::string> fractions;
  std::vector<TraceRow> ref_based_trace;
  std::vector<TraceRow> ref_free_trace;
  std::vector<FailureNote> failures;
};

struct CorrelationEntry {
  std::string metric;
  std::size_t n = 0;
  std::optional<double> r;
  /// Why r is absent.
  std::string note;
};

struct MetricReport {
  std::string run_id;
  std::vector<Framework> frameworks;
  std::vector<std::string> metrics;
  std::vector<SampleRow> rows;
  std::vector<CorrelationEntry> correlations;
  /// Provenance: template name -> hash, role -> "kind model".
  std::vector<std::pair<std::string, std::string>> templates;
  std::vector<std::pair<std::string, std::string>> backends;

  std::size_t failed_samples() const;
  /// Mean and count of the samples carrying a value.
  std::pair<std::optional<double>, std::size_t> aggregate(const std::string& metric) const;
};

/// Builds the report from framework outcomes plus native and external
/// baselines. Rows follow corpus order. Human scores come from the
/// annotations when given, else from the corpus records.
MetricReport build_report(const Corpus& corpus, const RunConfig& config,
                          const std::vector<SampleOutcome>& ref_based,
                          const std::vector<SampleOutcome>& ref_free, Clients& clients,
                          const std::vector<AnnotationRecord>& annotations = {});

/// The correlation entries laid out as rows of metric x Document / Image /
/// Combined, markdown table syntax. "insufficient data" when no entry has
/// a coefficient.
std::string render_correlation_table(const std::vector<CorrelationEntry>& entries);

std::string render_json(const MetricReport& report);
std::string render_csv(const MetricReport& report);
std::string render_markdown(const MetricReport& report);

/// Writes report.<format> for each format into `dir`. Returns the paths.
std::vector<std::filesystem::path> emit_report(const MetricReport& report,
                                               const std::vector<std::string>& formats,
                                               const std::filesystem::path& dir);

/// Everything cmd eval does: backends, both frameworks, baselines, report,
/// stage artifacts under out_dir/artifacts.
struct EvalRun {
  MetricReport report;
  Backends backends;
  ClientStats stats;
};
EvalRun evaluate(const Corpus& corpus, const RunConfig& config,
                 const std::vector<AnnotationRecord>& annotations = {},
                 std::optional<Backends> backends = std::nullopt);

/// Stage files: one JSON record per line.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);
std::vector<Json> read_jsonl(const std::filesystem::path& path);

}  // namespace fallacious::harness
