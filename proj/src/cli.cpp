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

#include "fallacious/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "fallacious/harness.hpp"
#include "fallacious/mocklab.hpp"
#include "fallacious/parallel.hpp"

namespace fallacious::cli {
namespace {

namespace fs = std::filesystem;
using harness::Role;

constexpr const char* kVersion = "0.1.0";

/// Options shared by the subcommands that talk to backends. Flags given on
/// the command line override the config file, which overrides defaults.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> frameworks;
  int questions = 0;
  std::string cache_dir;
  int parallelism = 0;
  std::string metrics;
  bool strict = false;
  bool strict_not_provided = false;
  std::string run_id;
  std::string out_dir;
  std::string formats;
  bool print_config = false;

  void add_to(CLI::App* app, bool eval_flags) {
    app->add_option("--config", config_file, "Run configuration (JSON)")->check(CLI::ExistingFile);
    app->add_option("--questions", questions, "Reference-free questions per sample")
        ->check(CLI::PositiveNumber);
    app->add_option("--cache-dir", cache_dir, "Response cache directory");
    app->add_option("--parallelism", parallelism, "Samples processed concurrently")
        ->check(CLI::PositiveNumber);
    app->add_flag("--strict", strict, "Abort on the first failing sample");
    app->add_flag("--print-config", print_config, "Print the effective configuration and exit");
    if (eval_flags) {
      app->add_option("--framework", frameworks,
                      "reference-based and/or reference-free (default: both)");
      app->add_option("--metrics", metrics, "Comma-separated metric selection");
      app->add_flag("--strict-not-provided", strict_not_provided,
                    "Exclude questions both summaries leave unanswered");
      app->add_option("--run-id", run_id, "Run identifier recorded in the report");
      app->add_option("--out-dir", out_dir, "Output directory");
      app->add_option("--formats", formats, "Comma-separated report formats (json,csv,md)");
    }
  }

  harness::RunConfig resolve() const {
    harness::RunConfig c = config_file.empty() ? harness::RunConfig{}
                                               : harness::load_run_config(config_file);
    if (!frameworks.empty()) {
      c.frameworks.clear();
      for (const auto& f : frameworks) c.frameworks.push_back(parse_framework(f));
    }
    if (questions > 0) c.questions = questions;
    if (!cache_dir.empty()) c.cache_dir = cache_dir;
    if (parallelism > 0) c.parallelism = parallelism;
    if (!metrics.empty()) c.metrics = split(metrics);
    if (strict) c.strict = true;
    if (strict_not_provided) c.strict_not_provided = true;
    if (!run_id.empty()) c.run_id = run_id;
    if (!out_dir.empty()) c.out_dir = out_dir;
    if (!formats.empty()) c.formats = split(formats);
    c.validate();
    return c;
  }

  static std::vector<std::string> split(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
      const auto t = trim(item);
      if (!t.empty()) out.emplace_back(t);
    }
    return out;
  }
};

int exit_code_for(const Error& e) {
  return e.is_backend_failure() ? kBackendFailure : kDataError;
}

struct Failure {
  std::string sample_id;
  Error error;
};

int report_failures(const std::vector<Failure>& failures, std::ostream& err) {
  if (failures.empty()) return kOk;
  err << failures.size() << " sample(s) failed:\n";
  for (const auto& f : failures) err << "  " << f.sample_id << ": " << f.error.what() << "\n";
  return kSampleFailures;
}

void print_stats(const harness::Clients& clients, std::ostream& out) {
  const ClientStats s = harness::total_stats(clients);
  out << "backend requests: " << s.requests << ", cache hits: " << s.cache_hits
      << ", retries: " << s.retries << "\n";
}

harness::MetricReport read_report(const Json& j) {
  harness::MetricReport r;
  for (const auto& m : j.at("metrics")) r.metrics.push_back(m.get<std::string>());
  for (const auto& s : j.at("samples")) {
    harness::SampleRow row;
    row.sample_id = s.at("sample_id").get<std::string>();
    for (const auto& [m, v] : s.at("metrics").items()) {
      if (v.is_number()) row.values[m] = v.get<double>();
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

std::string metric_for(Framework f) {
  return std::string(f == Framework::kReferenceBased ? harness::kRefBasedMetric
                                                     : harness::kRefFreeMetric);
}

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int qgen(const std::string& corpus_path, const std::string& framework_name,
           const std::string& out_path, const ConfigFlags& flags) {
    harness::RunConfig config = flags.resolve();
    const Framework framework = parse_framework(framework_name);
    config.frameworks = {framework};
    if (flags.print_config) return print_config(config);
    const harness::Corpus corpus = harness::load_corpus(corpus_path);
    harness::Clients clients =
        harness::make_clients(config, harness::make_backends(config, corpus, {{Role::kQGen}}));
    std::vector<std::optional<QuestionSet>> sets(corpus.samples.size());
    std::vector<std::optional<Error>> errors(corpus.samples.size());
    parallel_for(corpus.samples.size(), static_cast<std::size_t>(config.parallelism),
                 [&](std::size_t i) {
                   try {
                     sets[i] = harness::generate_for_sample(corpus.samples[i], framework, config,
                                                            *clients.qgen);
                   } catch (const Error& e) {
                     if (config.strict) throw;
                     errors[i] = e;
                   }
                 });
    std::vector<Json> records;
    std::vector<Failure> failures;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (sets[i]) records.push_back(to_json(*sets[i]));
      if (errors[i]) failures.push_back({corpus.samples[i].sample_id, *errors[i]});
    }
    harness::write_jsonl(out_path, records);
    out_ << "question sets: " << records.size() << " -> " << out_path << "\n";
    print_stats(clients, out_);
    return report_failures(failures, err_);
  }

  int answer(const std::string& sets_path, const std::string& corpus_path,
             const std::string& role_name, const std::string& out_path, const ConfigFlags& flags) {
    harness::RunConfig config = flags.resolve();
    if (flags.print_config) return print_config(config);
    const AnswerSource role = parse_answer_source(role_name);
    const harness::Corpus corpus = harness::load_corpus(corpus_path);
    std::vector<QuestionSet> sets;
    for (const auto& j : harness::read_jsonl(sets_path)) sets.push_back(question_set_from_json(j));
    std::vector<const EvalSample*> samples;
    for (const auto& qs : sets) {
      const EvalSample* s = corpus.find(qs.sample_id());
      if (s == nullptr) {
        throw Error(ErrorCode::kSampleMismatch,
                    "question set for unknown sample '" + qs.sample_id() + "'", qs.sample_id());
      }
      samples.push_back(s);
    }
    // Preconditions are checked for every sample before any request.
    for (const EvalSample* s : samples) {
      if (role == AnswerSource::kImage && !s->image) {
        throw Error(ErrorCode::kInvariantViolation, "sample '" + s->sample_id + "' has no image",
                    "image_path");
      }
      if (role == AnswerSource::kReferenceSummary && !s->reference_summary) {
        throw Error(ErrorCode::kInvariantViolation,
                    "sample '" + s->sample_id + "' has no reference summary", "reference");
      }
    }
    const Role backend_role = role == AnswerSource::kImage ? Role::kVqa : Role::kQa;
    harness::Clients clients =
        harness::make_clients(config, harness::make_backends(config, corpus, {{backend_role}}));
    std::vector<std::optional<AnswerSet>> answers(sets.size());
    std::vector<std::optional<Error>> errors(sets.size());
    parallel_for(sets.size(), static_cast<std::size_t>(config.parallelism), [&](std::size_t i) {
      try {
        answers[i] = harness::answer_for_sample(corpus, *samples[i], sets[i], role, clients);
      } catch (const Error& e) {
        if (config.strict) throw;
        errors[i] = e;
      }
    });
    std::vector<Json> records;
    std::vector<Failure> failures;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (answers[i]) records.push_back(to_json(*answers[i]));
      if (errors[i]) failures.push_back({sets[i].sample_id(), *errors[i]});
    }
    harness::write_jsonl(out_path, records);
    out_ << "answer sets (" << to_string(role) << "): " << records.size() << " -> " << out_path
         << "\n";
    print_stats(clients, out_);
    return report_failures(failures, err_);
  }

  int score(const std::vector<std::string>& answer_paths, const std::string& framework_name,
            const std::string& out_path, bool strict_not_provided) {
    const Framework framework = parse_framework(framework_name);
    const auto [first_role, second_role] =
        framework == Framework::kReferenceBased
            ? std::pair{AnswerSource::kReferenceSummary, AnswerSource::kGeneratedSummary}
            : std::pair{AnswerSource::kDocument, AnswerSource::kImage};
    std::vector<std::string> order;
    std::map<std::pair<std::string, AnswerSource>, AnswerSet> by_key;
    for (const auto& path : answer_paths) {
      for (const auto& j : harness::read_jsonl(path)) {
        AnswerSet set = answer_set_from_json(j);
        if (std::find(order.begin(), order.end(), set.sample_id()) == order.end()) {
          order.push_back(set.sample_id());
        }
        by_key.insert_or_assign({set.sample_id(), set.source()}, std::move(set));
      }
    }
    if (order.empty()) {
      throw Error(ErrorCode::kEmptyAnswerSets, "no answer sets in the given files");
    }
    const ScoringOptions options{.exclude_not_provided_pairs = strict_not_provided};
    std::vector<Json> records;
    std::vector<Failure> failures;
    for (const auto& id : order) {
      try {
        const auto a = by_key.find({id, first_role});
        const auto b = by_key.find({id, second_role});
        if (a == by_key.end() || b == by_key.end()) {
          const AnswerSource missing = a == by_key.end() ? first_role : second_role;
          throw Error(ErrorCode::kSourceMismatch,
                      "sample '" + id + "' has no " + std::string(to_string(missing)) + " answers",
                      id);
        }
        const FactualityScore s = framework == Framework::kReferenceBased
                                      ? score_reference_based(a->second, b->second, options)
                                      : score_reference_free(a->second, b->second);
        Json record = to_json(s);
        record["answers"] = {{std::string(to_string(first_role)), to_json(a->second)["answers"]},
                             {std::string(to_string(second_role)), to_json(b->second)["answers"]}};
        records.push_back(std::move(record));
        out_ << id << " " << s.fraction() << " " << s.value() << "\n";
      } catch (const Error& e) {
        failures.push_back({id, e});
      }
    }
    harness::write_jsonl(out_path, records);
    out_ << "scores: " << records.size() << " -> " << out_path << "\n";
    return report_failures(failures, err_);
  }

  int eval(const std::string& corpus_path, const std::string& annotations_path,
           const ConfigFlags& flags) {
    const harness::RunConfig config = flags.resolve();
    if (flags.print_config) return print_config(config);
    const harness::Corpus corpus = harness::load_corpus(corpus_path);
    std::vector<harness::AnnotationRecord> annotations;
    if (!annotations_path.empty()) annotations = harness::load_annotations(annotations_path);
    const harness::EvalRun run = harness::evaluate(corpus, config, annotations);
    const fs::path dir(config.out_dir);
    for (const auto& f : config.formats) out_ << "report: " << (dir / ("report." + f)).string() << "\n";
    out_ << "samples: " << run.report.rows.size() << ", failed: " << run.report.failed_samples()
         << "\n";
    out_ << "backend requests: " << run.stats.requests << ", cache hits: " << run.stats.cache_hits
         << ", retries: " << run.stats.retries << "\n";
    for (const auto& row : run.report.rows) {
      for (const auto& f : row.failures) err_ << row.sample_id << ": " << f.message << "\n";
    }
    return run.report.failed_samples() > 0 ? kSampleFailures : kOk;
  }

  int correlate(const std::vector<std::string>& score_paths, const std::string& annotations_path,
                const std::vector<std::string>& only, const std::string& out_path) {
    const auto annotations = harness::load_annotations(annotations_path);
    std::map<std::string, harness::MetricValues> values;
    std::vector<std::string> order;
    auto put = [&](const std::string& metric, const std::string& id, double v) {
      if (!only.empty() && std::find(only.begin(), only.end(), metric) == only.end()) return;
      if (!values.contains(metric)) order.push_back(metric);
      values[metric][id] = v;
    };
    for (const auto& path : score_paths) {
      if (fs::path(path).extension() == ".json") {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path, path);
        std::stringstream ss;
        ss << in.rdbuf();
        const Json j = Json::parse(ss.str(), nullptr, false);
        if (j.is_discarded() || j.value("schema", "") != "fallacious.report/1") {
          throw Error(ErrorCode::kMalformedRecord, path + " is not a report", path);
        }
        for (const auto& row : read_report(j).rows) {
          for (const auto& [m, v] : row.values) put(m, row.sample_id, v);
        }
      } else {
        for (const auto& j : harness::read_jsonl(path)) {
          const FactualityScore s = score_from_json(j);
          put(metric_for(s.framework()), s.sample_id(), s.value());
        }
      }
    }
    std::vector<std::pair<std::string, harness::MetricValues>> scores;
    for (const auto& m : order) scores.emplace_back(m, values[m]);
    const auto correlations = harness::correlate_with_humans(scores, annotations);
    std::vector<harness::CorrelationEntry> entries;
    Json j = Json::array();
    for (const auto& c : correlations) {
      entries.push_back({c.metric, c.n, c.r, {}});
      j.push_back({{"metric", c.metric}, {"n", c.n}, {"r", c.r}});
      out_ << c.metric << ": r = " << c.r << " (n = " << c.n << ")\n";
    }
    out_ << "\n" << harness::render_correlation_table(entries);
    if (!out_path.empty()) {
      harness::write_jsonl(out_path, {Json{{"correlation", j}}});
      out_ << "correlations -> " << out_path << "\n";
    }
    return kOk;
  }

  int reliability(const std::string& annotations_path, const std::vector<std::string>& answer_paths) {
    const auto annotations = harness::load_annotations(annotations_path);
    std::vector<AnswerSet> sets;
    for (const auto& path : answer_paths) {
      for (const auto& j : harness::read_jsonl(path)) sets.push_back(answer_set_from_json(j));
    }
    for (const auto& r : harness::qa_reliability(annotations, sets)) {
      out_ << to_string(r.role) << ": " << r.matches << "/" << r.total << " = " << r.accuracy()
           << "\n";
    }
    return kOk;
  }

  int mock_serve(const std::string& facts, const std::string& corpus_path, int port,
                 const std::string& host, bool condition_on_reference) {
    const auto table =
        std::make_shared<const mocklab::GoldFactTable>(mocklab::GoldFactTable::load(facts));
    const harness::Corpus corpus = harness::load_corpus(corpus_path);
    auto chat = std::make_shared<mocklab::PromptRouter>(
        std::make_shared<mocklab::OracleQGenBackend>(table, corpus.samples, condition_on_reference),
        std::make_shared<mocklab::OracleTextBackend>(table, corpus.samples));
    mocklab::MockServer server(chat, std::make_shared<mocklab::OracleVqaBackend>(table),
                               std::make_shared<mocklab::OracleScoringBackend>(table, corpus.samples));
    out_ << "serving on http://" << host << ":" << port
         << " (/v1/chat/completions, /vqa, /score)" << std::endl;
    server.serve_blocking(port, host);
    return kOk;
  }

 private:
  int print_config(const harness::RunConfig& config) {
    out_ << to_json(config).dump(2) << "\n";
    return kOk;
  }

  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Factuality evaluation for multimodal summaries", "fallacious"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Cli cli(out, err);
  std::function<int()> action;

  std::string corpus, framework, out_path, sets_path, role, annotations, facts, host = "127.0.0.1";
  std::vector<std::string> files;
  std::vector<std::string> only;
  bool strict_np = false;
  bool condition = false;
  int port = 8089;

  ConfigFlags qgen_flags;
  auto* qgen = app.add_subcommand("qgen", "Generate question sets for every sample");
  qgen->add_option("--corpus", corpus, "Corpus file (JSONL)")->required();
  qgen->add_option("--framework", framework, "reference-based or reference-free")->required();
  qgen->add_option("--out", out_path, "Question-set file to write")->required();
  qgen_flags.add_to(qgen, false);
  qgen->callback([&] { action = [&] { return cli.qgen(corpus, framework, out_path, qgen_flags); }; });

  ConfigFlags answer_flags;
  auto* answer = app.add_subcommand("answer", "Answer question sets against one source");
  answer->add_option("--question-sets", sets_path, "Question-set file")->required();
  answer->add_option("--corpus", corpus, "Corpus file (JSONL)")->required();
  answer->add_option("--role", role, "reference, generated, document or image")->required();
  answer->add_option("--out", out_path, "Answer-set file to write")->required();
  answer_flags.add_to(answer, false);
  answer->callback([&] {
    action = [&] { return cli.answer(sets_path, corpus, role, out_path, answer_flags); };
  });

  auto* score = app.add_subcommand("score", "Score paired answer sets");
  score->add_option("--answers", files, "Answer-set files")->required();
  score->add_option("--framework", framework, "reference-based or reference-free")->required();
  score->add_option("--out", out_path, "Score file to write")->required();
  score->add_flag("--strict-not-provided", strict_np,
                  "Exclude questions both summaries leave unanswered");
  score->callback([&] { action = [&] { return cli.score(files, framework, out_path, strict_np); }; });

  ConfigFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Run every stage and write the report");
  eval->add_option("--corpus", corpus, "Corpus file (JSONL)")->required();
  eval->add_option("--annotations", annotations, "Human annotations (JSONL)");
  eval_flags.add_to(eval, true);
  eval->callback([&] { action = [&] { return cli.eval(corpus, annotations, eval_flags); }; });

  auto* correlate = app.add_subcommand("correlate", "Correlate metric scores with human scores");
  correlate->add_option("--scores", files, "Score files or report.json")->required();
  correlate->add_option("--annotations", annotations, "Human annotations (JSONL)")->required();
  correlate->add_option("--metric", only, "Restrict to these metrics");
  correlate->add_option("--out", out_path, "Correlation file to write");
  correlate->callback(
      [&] { action = [&] { return cli.correlate(files, annotations, only, out_path); }; });

  auto* reliability = app.add_subcommand("reliability", "QA/VQA accuracy against gold answers");
  reliability->add_option("--annotations", annotations, "Annotations with gold answers")->required();
  reliability->add_option("--answers", files, "Answer-set files")->required();
  reliability->callback([&] { action = [&] { return cli.reliability(annotations, files); }; });

  auto* serve = app.add_subcommand("mock-serve", "Serve oracle backends over HTTP on loopback");
  serve->add_option("--facts", facts, "Gold fact table")->required();
  serve->add_option("--corpus", corpus, "Corpus file (JSONL)")->required();
  serve->add_option("--port", port, "Port");
  serve->add_option("--host", host, "Bind address");
  serve->add_flag("--condition-on-reference", condition,
                  "Expect reference-conditioned question prompts");
  serve->callback([&] {
    action = [&] { return cli.mock_serve(facts, corpus, port, host, condition); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace fallacious::cli
