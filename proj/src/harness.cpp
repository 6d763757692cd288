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

#include "fallacious/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fallacious/http_backends.hpp"
#include "fallacious/mocklab.hpp"
#include "fallacious/parallel.hpp"
#include "fallacious/prompts.hpp"

namespace fallacious::harness {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + std::string(what) + " " + path.string(),
                path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(content.data(), static_cast<std::streamsize>(content.size()))) {
    throw Error(ErrorCode::kIoError, "cannot write " + path.string(), path.string());
  }
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

bool contains(const std::vector<std::string>& xs, std::string_view x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

constexpr std::string_view kBaselineMetrics[] = {"rouge1", "rougeL", "bleu"};
constexpr std::string_view kExternalMetrics[] = {"bertscore", "clipscore", "clipbertscore"};

bool any_selected(const std::vector<std::string>& metrics, std::span<const std::string_view> names) {
  return std::any_of(names.begin(), names.end(),
                     [&](std::string_view n) { return contains(metrics, n); });
}

}  // namespace

std::optional<fs::path> Corpus::image_path(const EvalSample& sample) const {
  if (!sample.image) return std::nullopt;
  const fs::path p(*sample.image);
  return p.is_absolute() ? p : base_dir / p;
}

const EvalSample* Corpus::find(const std::string& sample_id) const {
  for (const auto& s : samples) {
    if (s.sample_id == sample_id) return &s;
  }
  return nullptr;
}

Corpus parse_corpus(std::string_view text, fs::path base_dir) {
  Corpus corpus{std::move(base_dir), {}};
  std::vector<std::size_t> lines_of;
  std::optional<Error> first;
  std::string problems;
  std::size_t bad = 0;
  std::size_t records = 0;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    ++records;
    try {
      corpus.samples.push_back(parse_sample(lines[i]));
      lines_of.push_back(i + 1);
    } catch (const Error& e) {
      ++bad;
      if (!first) first = e.with_index(i + 1);
      problems += "\n  line " + std::to_string(i + 1) + ": " + e.what();
    }
  }
  if (first) {
    throw Error(first->code(),
                std::to_string(bad) + " of " + std::to_string(records) +
                    " corpus records are invalid; the others parsed" + problems,
                first->subject(), first->index());
  }
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const auto [it, inserted] = seen.emplace(corpus.samples[i].sample_id, lines_of[i]);
    if (!inserted) {
      throw Error(ErrorCode::kDuplicateId,
                  "sample id '" + it->first + "' on line " + std::to_string(lines_of[i]) +
                      " was already used on line " + std::to_string(it->second),
                  it->first, lines_of[i]);
    }
  }
  return corpus;
}

Corpus load_corpus(const fs::path& path) {
  const std::string text = read_file(path, "corpus");
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_corpus(text, base);
}

const std::vector<std::string>& all_metrics() {
  static const std::vector<std::string> names{
      std::string(kRefBasedMetric), std::string(kRefFreeMetric),
      std::string(kRefFreeDocumentMetric), std::string(kRefFreeImageMetric),
      "rouge1", "rougeL", "bleu", "bertscore", "clipscore", "clipbertscore"};
  return names;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, field + " " + why, field);
  };
  if (frameworks.empty()) fail("frameworks", "must name at least one framework");
  if (questions < 1) fail("questions", "must be at least 1");
  if (qgen_attempts < 1) fail("qgen_attempts", "must be at least 1");
  if (min_questions < 1 || max_questions < min_questions) {
    fail("question_bounds", "must satisfy 1 <= min <= max");
  }
  if (parallelism < 1) fail("parallelism", "must be at least 1");
  for (const auto& f : formats) {
    if (f != "json" && f != "csv" && f != "md") fail("formats", "has unknown format '" + f + "'");
  }
  for (const auto& m : metrics) {
    if (!contains(all_metrics(), m)) fail("metrics", "has unknown metric '" + m + "'");
  }
  if (baseline_reference != "document" && baseline_reference != "reference") {
    fail("baseline_reference", "must be 'document' or 'reference'");
  }
  if (run_id.empty()) fail("run_id", "must not be empty");
  const double w = clipbert_weights.bert + clipbert_weights.clip;
  if (clipbert_weights.bert < 0 || clipbert_weights.clip < 0 || std::abs(w - 1.0) > 1e-9) {
    fail("clipbert_weights", "must be non-negative and sum to 1");
  }
}

bool RunConfig::runs(Framework framework) const {
  if (std::find(frameworks.begin(), frameworks.end(), framework) == frameworks.end()) return false;
  if (metrics.empty()) return true;
  if (framework == Framework::kReferenceBased) return contains(metrics, kRefBasedMetric);
  return contains(metrics, kRefFreeMetric) || contains(metrics, kRefFreeDocumentMetric) ||
         contains(metrics, kRefFreeImageMetric);
}

QGenConfig RunConfig::qgen_config() const {
  QGenConfig q;
  q.reffree_questions = questions;
  q.max_attempts = qgen_attempts;
  q.min_questions = min_questions;
  q.max_questions = max_questions;
  q.condition_on_reference = condition_on_reference;
  return q;
}

std::vector<std::string> RunConfig::effective_metrics() const {
  std::vector<std::string> out;
  for (const auto& m : all_metrics()) {
    if (!metrics.empty()) {
      if (contains(metrics, m)) out.push_back(m);
      continue;
    }
    const bool wanted =
        (m == kRefBasedMetric && runs(Framework::kReferenceBased)) ||
        ((m == kRefFreeMetric || m == kRefFreeDocumentMetric || m == kRefFreeImageMetric) &&
         runs(Framework::kReferenceFree)) ||
        m == "rouge1" || m == "rougeL" || m == "bleu" || (scoring && m == "bertscore") ||
        (scoring && runs(Framework::kReferenceFree) && (m == "clipscore" || m == "clipbertscore"));
    if (wanted) out.push_back(m);
  }
  return out;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["frameworks"] = Json::array();
  for (auto f : c.frameworks) j["frameworks"].push_back(std::string(to_string(f)));
  j["questions"] = c.questions;
  j["qgen_attempts"] = c.qgen_attempts;
  j["min_questions"] = c.min_questions;
  j["max_questions"] = c.max_questions;
  j["condition_on_reference"] = c.condition_on_reference;
  j["strict_not_provided"] = c.strict_not_provided;
  j["strict"] = c.strict;
  j["backends"] = {{"qgen", to_json(c.qgen)}, {"qa", to_json(c.qa)}, {"vqa", to_json(c.vqa)}};
  if (c.scoring) j["backends"]["scoring"] = to_json(*c.scoring);
  j["cache_dir"] = c.cache_dir;
  j["parallelism"] = c.parallelism;
  j["formats"] = c.formats;
  j["metrics"] = c.metrics;
  j["clipbert_weights"] = {{"bert", c.clipbert_weights.bert}, {"clip", c.clipbert_weights.clip}};
  j["baseline_reference"] = c.baseline_reference;
  j["run_id"] = c.run_id;
  j["out_dir"] = c.out_dir;
  return j;
}

namespace {

BackendConfig overlay_backend(const BackendConfig& base, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "backend entry must be an object");
  Json merged = to_json(base);
  for (const auto& [k, v] : j.items()) merged[k] = v;
  return backend_config_from_json(merged);
}

template <class T>
T get_field(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kInvalidConfig, "config field '" + key + "' has the wrong type", key);
  }
}

}  // namespace

RunConfig run_config_from_json(const Json& j, RunConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "run config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "frameworks") {
      c.frameworks.clear();
      for (const auto& f : get_field<std::vector<std::string>>(v, key)) {
        c.frameworks.push_back(parse_framework(f));
      }
    } else if (key == "questions") {
      c.questions = get_field<int>(v, key);
    } else if (key == "qgen_attempts") {
      c.qgen_attempts = get_field<int>(v, key);
    } else if (key == "min_questions") {
      c.min_questions = get_field<std::size_t>(v, key);
    } else if (key == "max_questions") {
      c.max_questions = get_field<std::size_t>(v, key);
    } else if (key == "condition_on_reference") {
      c.condition_on_reference = get_field<bool>(v, key);
    } else if (key == "strict_not_provided") {
      c.strict_not_provided = get_field<bool>(v, key);
    } else if (key == "strict") {
      c.strict = get_field<bool>(v, key);
    } else if (key == "backends") {
      if (!v.is_object()) throw Error(ErrorCode::kInvalidConfig, "backends must be an object", key);
      for (const auto& [role, b] : v.items()) {
        if (role == "qgen") {
          c.qgen = overlay_backend(c.qgen, b);
        } else if (role == "qa") {
          c.qa = overlay_backend(c.qa, b);
        } else if (role == "vqa") {
          c.vqa = overlay_backend(c.vqa, b);
        } else if (role == "scoring") {
          c.scoring = overlay_backend(c.scoring.value_or(backend_of_kind("scoring-http")), b);
        } else {
          throw Error(ErrorCode::kInvalidConfig, "unknown backend role '" + role + "'", role);
        }
      }
    } else if (key == "cache_dir") {
      c.cache_dir = get_field<std::string>(v, key);
    } else if (key == "parallelism") {
      c.parallelism = get_field<int>(v, key);
    } else if (key == "formats") {
      c.formats = get_field<std::vector<std::string>>(v, key);
    } else if (key == "metrics") {
      c.metrics = get_field<std::vector<std::string>>(v, key);
    } else if (key == "clipbert_weights") {
      c.clipbert_weights.bert = get_field<double>(v.value("bert", Json(c.clipbert_weights.bert)), key);
      c.clipbert_weights.clip = get_field<double>(v.value("clip", Json(c.clipbert_weights.clip)), key);
    } else if (key == "baseline_reference") {
      c.baseline_reference = get_field<std::string>(v, key);
    } else if (key == "run_id") {
      c.run_id = get_field<std::string>(v, key);
    } else if (key == "out_dir") {
      c.out_dir = get_field<std::string>(v, key);
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'", key);
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  const Json j = Json::parse(read_file(path, "config"), nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + " is not valid JSON", path.string());
  }
  RunConfig c = run_config_from_json(j);
  const fs::path dir = path.parent_path();
  auto resolve = [&](BackendConfig& b) {
    if (!b.fact_table.empty() && fs::path(b.fact_table).is_relative()) {
      b.fact_table = (dir / b.fact_table).lexically_normal().string();
    }
  };
  resolve(c.qgen);
  resolve(c.qa);
  resolve(c.vqa);
  if (c.scoring) resolve(*c.scoring);
  return c;
}

namespace {

bool needs_scoring(const RunConfig& config) {
  return any_selected(config.effective_metrics(), kExternalMetrics);
}

std::vector<double> parse_score_script(const std::vector<std::string>& script) {
  std::vector<double> out;
  for (const auto& s : script) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) {
      throw Error(ErrorCode::kInvalidConfig, "scoring script entry '" + s + "' is not a number",
                  "script");
    }
    out.push_back(v);
  }
  return out;
}

class TableCache {
 public:
  std::shared_ptr<const mocklab::GoldFactTable> get(const BackendConfig& c) {
    if (c.fact_table.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "oracle backends need a fact_table", "fact_table");
    }
    auto& slot = tables_[c.fact_table];
    if (!slot) {
      slot = std::make_shared<const mocklab::GoldFactTable>(
          mocklab::GoldFactTable::load(c.fact_table));
    }
    return slot;
  }

 private:
  std::map<std::string, std::shared_ptr<const mocklab::GoldFactTable>> tables_;
};

[[noreturn]] void unknown_kind(const std::string& role, const std::string& kind) {
  throw Error(ErrorCode::kInvalidConfig,
              "backend kind '" + kind + "' cannot serve the " + role + " role", role);
}

}  // namespace

std::vector<Role> roles_needed(const RunConfig& config) {
  std::vector<Role> roles;
  if (config.runs(Framework::kReferenceBased) || config.runs(Framework::kReferenceFree)) {
    roles.push_back(Role::kQGen);
    roles.push_back(Role::kQa);
  }
  if (config.runs(Framework::kReferenceFree)) roles.push_back(Role::kVqa);
  if (needs_scoring(config)) roles.push_back(Role::kScoring);
  return roles;
}

Backends make_backends(const RunConfig& config, const Corpus& corpus,
                       std::optional<std::vector<Role>> roles) {
  if (!roles) roles = roles_needed(config);
  auto wants = [&](Role r) { return std::find(roles->begin(), roles->end(), r) != roles->end(); };
  Backends b;
  TableCache tables;
  auto chat = [&](const BackendConfig& c, const std::string& role) -> std::shared_ptr<ChatBackend> {
    c.validate();
    if (c.kind == "openai") return std::make_shared<OpenAiChatBackend>(c);
    if (c.kind == "scripted") return std::make_shared<mocklab::ScriptedChatBackend>(c.script);
    if (c.kind == "oracle") {
      if (role == "qgen") {
        return std::make_shared<mocklab::OracleQGenBackend>(tables.get(c), corpus.samples,
                                                            config.condition_on_reference);
      }
      return std::make_shared<mocklab::OracleTextBackend>(tables.get(c), corpus.samples);
    }
    unknown_kind(role, c.kind);
  };
  if (wants(Role::kQGen)) b.qgen = chat(config.qgen, "qgen");
  if (wants(Role::kQa)) b.qa = chat(config.qa, "qa");
  if (wants(Role::kVqa)) {
    const BackendConfig& c = config.vqa;
    c.validate();
    if (c.kind == "vqa-http") {
      b.vqa = std::make_shared<HttpVqaBackend>(c);
    } else if (c.kind == "scripted") {
      b.vqa = std::make_shared<mocklab::ScriptedVqaBackend>(c.script);
    } else if (c.kind == "oracle") {
      b.vqa = std::make_shared<mocklab::OracleVqaBackend>(tables.get(c));
    } else {
      unknown_kind("vqa", c.kind);
    }
  }
  if (wants(Role::kScoring)) {
    if (!config.scoring) {
      throw Error(ErrorCode::kInvalidConfig,
                  "bertscore, clipscore and clipbertscore need a scoring backend", "scoring");
    }
    const BackendConfig& c = *config.scoring;
    c.validate();
    if (c.kind == "scoring-http") {
      b.scoring = std::make_shared<HttpScoringBackend>(c);
    } else if (c.kind == "scripted") {
      b.scoring = std::make_shared<mocklab::ScriptedScoringBackend>(parse_score_script(c.script));
    } else if (c.kind == "oracle") {
      b.scoring = std::make_shared<mocklab::OracleScoringBackend>(tables.get(c), corpus.samples);
    } else {
      unknown_kind("scoring", c.kind);
    }
  }
  return b;
}

Clients make_clients(const RunConfig& config, const Backends& backends) {
  std::shared_ptr<ResponseCache> cache;
  if (!config.cache_dir.empty()) cache = std::make_shared<ResponseCache>(config.cache_dir);
  Clients c;
  if (backends.qgen) c.qgen = std::make_shared<ChatClient>(backends.qgen, config.qgen, cache);
  if (backends.qa) c.qa = std::make_shared<ChatClient>(backends.qa, config.qa, cache);
  if (backends.vqa) c.vqa = std::make_shared<VqaClient>(backends.vqa, config.vqa, cache);
  if (backends.scoring) {
    c.scoring = std::make_shared<ScoringClient>(backends.scoring,
                                                config.scoring.value_or(BackendConfig{}), cache);
  }
  return c;
}

ClientStats total_stats(const Clients& clients) {
  ClientStats total;
  auto add = [&](const ClientBase* c) {
    if (c == nullptr) return;
    const ClientStats s = c->stats();
    total.requests += s.requests;
    total.cache_hits += s.cache_hits;
    total.retries += s.retries;
  };
  add(clients.qgen.get());
  add(clients.qa.get());
  add(clients.vqa.get());
  add(clients.scoring.get());
  return total;
}

namespace {

template <class T>
T& require(const std::shared_ptr<T>& client, const char* role) {
  if (!client) {
    throw Error(ErrorCode::kInvalidConfig, std::string("no ") + role + " backend configured", role);
  }
  return *client;
}

void check_preconditions(const EvalSample& sample, Framework framework) {
  if (framework == Framework::kReferenceBased && !sample.reference_summary) {
    throw Error(ErrorCode::kInvariantViolation,
                "sample '" + sample.sample_id + "' has no reference summary", "reference");
  }
  if (framework == Framework::kReferenceFree && !sample.image) {
    throw Error(ErrorCode::kInvariantViolation, "sample '" + sample.sample_id + "' has no image",
                "image_path");
  }
}

template <class Body>
std::vector<SampleOutcome> run_samples(const Corpus& corpus, const RunConfig& config, Body body) {
  std::vector<SampleOutcome> outcomes(corpus.samples.size());
  std::atomic<bool> abort{false};
  parallel_for(corpus.samples.size(), static_cast<std::size_t>(config.parallelism),
               [&](std::size_t i) {
                 SampleOutcome& out = outcomes[i];
                 out.sample_id = corpus.samples[i].sample_id;
                 if (abort.load()) return;
                 try {
                   body(corpus.samples[i], out);
                 } catch (const Error& e) {
                   if (config.strict) {
                     abort.store(true);
                     throw;
                   }
                   out.failure = e;
                 }
               });
  return outcomes;
}

}  // namespace

QuestionSet generate_for_sample(const EvalSample& sample, Framework framework,
                                const RunConfig& config, ChatClient& client) {
  check_preconditions(sample, framework);
  return generate_questions(client, sample, framework, config.qgen_config()).questions;
}

AnswerSet answer_for_sample(const Corpus& corpus, const EvalSample& sample,
                            const QuestionSet& questions, AnswerSource role, Clients& clients) {
  if (questions.sample_id() != sample.sample_id) {
    throw Error(ErrorCode::kSampleMismatch,
                "question set of '" + questions.sample_id() + "' used for '" + sample.sample_id +
                    "'",
                sample.sample_id);
  }
  const AnswerMode mode = questions.origin() == Framework::kReferenceBased ? AnswerMode::kTernary
                                                                           : AnswerMode::kBinary;
  switch (role) {
    case AnswerSource::kReferenceSummary:
      if (!sample.reference_summary) {
        throw Error(ErrorCode::kInvariantViolation,
                    "sample '" + sample.sample_id + "' has no reference summary", "reference");
      }
      return answer_with_text(require(clients.qa, "qa"), *sample.reference_summary, questions,
                              mode, role);
    case AnswerSource::kGeneratedSummary:
      return answer_with_text(require(clients.qa, "qa"), sample.generated_summary, questions,
                              mode, role);
    case AnswerSource::kDocument:
      return answer_with_text(require(clients.qa, "qa"), sample.document, questions, mode, role);
    case AnswerSource::kImage: {
      const auto path = corpus.image_path(sample);
      if (!path) {
        throw Error(ErrorCode::kInvariantViolation,
                    "sample '" + sample.sample_id + "' has no image", "image_path");
      }
      return answer_with_image(require(clients.vqa, "vqa"), *path, questions);
    }
  }
  throw Error(ErrorCode::kInvariantViolation, "unknown answer source");
}

std::vector<SampleOutcome> run_reference_based(const Corpus& corpus, const RunConfig& config,
                                               Clients& clients) {
  const ScoringOptions options{.exclude_not_provided_pairs = config.strict_not_provided};
  return run_samples(corpus, config, [&](const EvalSample& sample, SampleOutcome& out) {
    out.questions =
        generate_for_sample(sample, Framework::kReferenceBased, config, require(clients.qgen, "qgen"));
    out.first = answer_for_sample(corpus, sample, *out.questions, AnswerSource::kReferenceSummary,
                                  clients);
    out.second = answer_for_sample(corpus, sample, *out.questions,
                                   AnswerSource::kGeneratedSummary, clients);
    out.score = score_reference_based(*out.first, *out.second, options);
  });
}

std::vector<SampleOutcome> run_reference_free(const Corpus& corpus, const RunConfig& config,
                                              Clients& clients) {
  return run_samples(corpus, config, [&](const EvalSample& sample, SampleOutcome& out) {
    check_preconditions(sample, Framework::kReferenceFree);
    // The image is checked before any request is spent on the sample.
    const ImageData image = load_image(*corpus.image_path(sample));
    out.questions =
        generate_for_sample(sample, Framework::kReferenceFree, config, require(clients.qgen, "qgen"));
    out.first = answer_with_text(require(clients.qa, "qa"), sample.document, *out.questions,
                                 AnswerMode::kBinary, AnswerSource::kDocument);
    out.second = answer_with_image(require(clients.vqa, "vqa"), image, *out.questions);
    out.score = score_reference_free(*out.first, *out.second);
    out.document_only = score_document_only(*out.first);
    out.image_only = score_image_only(*out.second);
  });
}

AnnotationRecord parse_annotation(std::string_view line) {
  const Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kMalformedRecord, "annotation is not a JSON object");
  }
  AnnotationRecord a;
  for (const auto& [key, v] : j.items()) {
    if (key == "sample_id") {
      if (!v.is_string() || v.get<std::string>().empty()) {
        throw Error(ErrorCode::kMalformedRecord, "sample_id must be a non-empty string", key);
      }
      a.sample_id = v.get<std::string>();
    } else if (key == "human_faithfulness") {
      if (!v.is_number_integer()) {
        throw Error(ErrorCode::kMalformedRecord, "human_faithfulness must be an integer", key);
      }
      const auto h = v.get<std::int64_t>();
      if (h < 1 || h > 5) {
        throw Error(ErrorCode::kInvariantViolation, "human_faithfulness must lie in 1..5", key);
      }
      a.human_faithfulness = static_cast<int>(h);
    } else if (key == "gold_answers") {
      if (!v.is_object()) {
        throw Error(ErrorCode::kMalformedRecord, "gold_answers must be an object", key);
      }
      for (const auto& [role, answers] : v.items()) {
        const AnswerSource source = parse_answer_source(role);
        if (!answers.is_object()) {
          throw Error(ErrorCode::kMalformedRecord, "gold answers for a role must be an object", role);
        }
        auto& slot = a.gold_answers[source];
        for (const auto& [index, label] : answers.items()) {
          if (index.empty() || !std::all_of(index.begin(), index.end(), ::isdigit) ||
              !label.is_string()) {
            throw Error(ErrorCode::kMalformedRecord,
                        "gold answers map question indices to labels", index);
          }
          slot[std::stoul(index)] = parse_answer_label(label.get<std::string>());
        }
      }
    } else {
      throw Error(ErrorCode::kMalformedRecord, "unknown annotation field '" + key + "'", key);
    }
  }
  if (a.sample_id.empty() || a.human_faithfulness == 0) {
    throw Error(ErrorCode::kMalformedRecord, "annotation needs sample_id and human_faithfulness");
  }
  return a;
}

std::vector<AnnotationRecord> load_annotations(const fs::path& path) {
  const std::string text = read_file(path, "annotations");
  std::vector<AnnotationRecord> out;
  std::set<std::string> seen;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      out.push_back(parse_annotation(lines[i]));
    } catch (const Error& e) {
      throw Error(e.code(), "annotation line " + std::to_string(i + 1) + ": " + e.what(),
                  e.subject(), i + 1);
    }
    if (!seen.insert(out.back().sample_id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate annotation for '" + out.back().sample_id + "'",
                  out.back().sample_id, i + 1);
    }
  }
  return out;
}

Correlation correlate_metric(const std::string& metric, const MetricValues& values,
                             const std::vector<AnnotationRecord>& annotations) {
  std::map<std::string, int> human;
  for (const auto& a : annotations) human[a.sample_id] = a.human_faithfulness;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [id, v] : values) {
    const auto it = human.find(id);
    if (it == human.end()) continue;
    xs.push_back(v);
    ys.push_back(it->second);
  }
  Correlation c{metric, xs.size(), 0.0};
  try {
    c.r = baselines::pearson(xs, ys);
  } catch (const Error& e) {
    throw Error(e.code(), metric + " over " + std::to_string(xs.size()) + " joined samples", metric);
  }
  return c;
}

std::vector<Correlation> correlate_with_humans(
    const std::vector<std::pair<std::string, MetricValues>>& scores,
    const std::vector<AnnotationRecord>& annotations) {
  std::vector<Correlation> out;
  for (const auto& [metric, values] : scores) {
    out.push_back(correlate_metric(metric, values, annotations));
  }
  return out;
}

std::vector<Reliability> qa_reliability(const std::vector<AnnotationRecord>& annotations,
                                        const std::vector<AnswerSet>& answers) {
  std::map<std::pair<std::string, AnswerSource>, const AnswerSet*> model;
  for (const auto& set : answers) model[{set.sample_id(), set.source()}] = &set;
  std::map<AnswerSource, Reliability> by_role;
  for (const auto& a : annotations) {
    for (const auto& [role, gold] : a.gold_answers) {
      const auto it = model.find({a.sample_id, role});
      if (it == model.end()) {
        throw Error(ErrorCode::kAlignmentError,
                    "no " + std::string(to_string(role)) + " answers for '" + a.sample_id + "'",
                    a.sample_id);
      }
      const AnswerSet& set = *it->second;
      if (gold.size() != set.size() || (!gold.empty() && gold.rbegin()->first != set.size() - 1)) {
        throw Error(ErrorCode::kAlignmentError,
                    std::string(to_string(role)) + " gold answers for '" + a.sample_id +
                        "' do not cover questions 0.." + std::to_string(set.size() - 1),
                    a.sample_id);
      }
      auto& r = by_role.try_emplace(role, Reliability{role}).first->second;
      for (const auto& [i, label] : gold) {
        ++r.total;
        if (set[i] == label) ++r.matches;
      }
    }
  }
  std::vector<Reliability> out;
  for (const auto& [role, r] : by_role) {
    if (r.total > 0) out.push_back(r);
  }
  if (out.empty()) {
    throw Error(ErrorCode::kAlignmentError, "annotations carry no gold answers to compare");
  }
  return out;
}

std::size_t MetricReport::failed_samples() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const SampleRow& r) { return !r.failures.empty(); }));
}

std::pair<std::optional<double>, std::size_t> MetricReport::aggregate(
    const std::string& metric) const {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& row : rows) {
    const auto it = row.values.find(metric);
    if (it == row.values.end()) continue;
    sum += it->second;
    ++n;
  }
  if (n == 0) return {std::nullopt, 0};
  return {sum / static_cast<double>(n), n};
}

namespace {

std::vector<TraceRow> trace_of(const SampleOutcome& o) {
  std::vector<TraceRow> rows;
  if (!o.questions || !o.first || !o.second || !o.score) return rows;
  const auto& flags = o.score->per_question();
  const auto& counted = o.score->counted();
  for (std::size_t i = 0; i < o.questions->size(); ++i) {
    rows.push_back({i, (*o.questions)[i].text, (*o.first)[i], (*o.second)[i], flags[i],
                    counted.empty() || counted[i]});
  }
  return rows;
}

FailureNote note_of(std::string stage, const Error& e) {
  return {std::move(stage), std::string(to_string(e.code())), e.what()};
}

void add_framework(SampleRow& row, const SampleOutcome& o, Framework f) {
  if (o.failure) {
    row.failures.push_back(note_of(std::string(to_string(f)), *o.failure));
    return;
  }
  auto put = [&](std::string_view metric, const std::optional<FactualityScore>& s) {
    if (!s) return;
    row.values[std::string(metric)] = s->value();
    row.fractions[std::string(metric)] = s->fraction();
  };
  if (f == Framework::kReferenceBased) {
    put(kRefBasedMetric, o.score);
    row.ref_based_trace = trace_of(o);
  } else {
    put(kRefFreeMetric, o.score);
    put(kRefFreeDocumentMetric, o.document_only);
    put(kRefFreeImageMetric, o.image_only);
    row.ref_free_trace = trace_of(o);
  }
}

void add_baselines(SampleRow& row, const EvalSample& sample, const RunConfig& config) {
  const std::optional<std::string>& ref = config.baseline_reference == "document"
                                              ? std::optional<std::string>(sample.document)
                                              : sample.reference_summary;
  if (!ref) {
    row.failures.push_back(note_of(
        "baselines", Error(ErrorCode::kInvariantViolation,
                           "sample '" + sample.sample_id + "' has no reference summary",
                           "reference")));
    return;
  }
  const auto cand = baselines::tokenize(sample.generated_summary);
  const auto refs = baselines::tokenize(*ref);
  row.values["rouge1"] = baselines::rouge_n(cand, refs, 1).f1;
  row.values["rougeL"] = baselines::rouge_l(cand, refs).f1;
  row.values["bleu"] = baselines::bleu(cand, refs);
}

void add_external(SampleRow& row, const Corpus& corpus, const EvalSample& sample,
                  const RunConfig& config, const std::vector<std::string>& metrics,
                  ScoringClient& client) {
  const bool want_bert = contains(metrics, "bertscore") || contains(metrics, "clipbertscore");
  const bool want_clip = contains(metrics, "clipscore") || contains(metrics, "clipbertscore");
  try {
    std::optional<double> bert;
    std::optional<double> clip;
    if (want_bert) {
      ScoringRequest req;
      req.kind = ScoreKind::kBertScore;
      req.candidate = sample.generated_summary;
      if (config.baseline_reference == "document") {
        req.reference = sample.document;
      } else if (sample.reference_summary) {
        req.reference = *sample.reference_summary;
      }
      bert = baselines::external_score(client, req);
      row.values["bertscore"] = *bert;
    }
    if (want_clip) {
      const auto path = corpus.image_path(sample);
      if (!path) {
        throw Error(ErrorCode::kInvariantViolation,
                    "sample '" + sample.sample_id + "' has no image", "image_path");
      }
      ScoringRequest req;
      req.kind = ScoreKind::kClipScore;
      req.candidate = sample.generated_summary;
      req.image = load_image(*path).bytes;
      clip = baselines::external_score(client, req);
      row.values["clipscore"] = *clip;
    }
    if (bert && clip) {
      row.values["clipbertscore"] = baselines::clip_bert_score(*bert, *clip, config.clipbert_weights);
    }
  } catch (const Error& e) {
    row.failures.push_back(note_of("external-scores", e));
  }
}

struct TableRow {
  std::string_view label;
  std::string_view document;
  std::string_view image;
  std::string_view combined;
};

constexpr TableRow kTableRows[] = {
    {"BLEU", "bleu", "", "bleu"},
    {"ROUGE-1", "rouge1", "", "rouge1"},
    {"ROUGE-L", "rougeL", "", "rougeL"},
    {"BERTScore", "bertscore", "", "bertscore"},
    {"CLIPScore", "", "clipscore", "clipscore"},
    {"CLIPBERTScore", "bertscore", "clipscore", "clipbertscore"},
    {"FALLACIOUS (reference-based)", kRefBasedMetric, "", kRefBasedMetric},
    {"FALLACIOUS (reference-free)", kRefFreeDocumentMetric, kRefFreeImageMetric, kRefFreeMetric},
};

const CorrelationEntry* find_entry(const std::vector<CorrelationEntry>& entries,
                                   std::string_view metric) {
  for (const auto& e : entries) {
    if (e.metric == metric) return &e;
  }
  return nullptr;
}

std::string cell(const std::vector<CorrelationEntry>& entries, std::string_view metric) {
  if (metric.empty()) return "-";
  const CorrelationEntry* e = find_entry(entries, metric);
  if (e == nullptr || !e->r) return "n/a";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", *e->r);
  return buf;
}

Json label_json(AnswerLabel l) { return std::string(to_string(l)); }

}  // namespace

MetricReport build_report(const Corpus& corpus, const RunConfig& config,
                          const std::vector<SampleOutcome>& ref_based,
                          const std::vector<SampleOutcome>& ref_free, Clients& clients,
                          const std::vector<AnnotationRecord>& annotations) {
  MetricReport report;
  report.run_id = config.run_id;
  for (auto f : config.frameworks) {
    if (config.runs(f)) report.frameworks.push_back(f);
  }
  report.metrics = config.effective_metrics();
  std::map<std::string, int> human;
  for (const auto& a : annotations) human[a.sample_id] = a.human_faithfulness;

  const bool baselines_on = any_selected(report.metrics, kBaselineMetrics);
  const bool external_on = any_selected(report.metrics, kExternalMetrics);
  if (external_on && !clients.scoring) {
    throw Error(ErrorCode::kInvalidConfig, "external metrics selected without a scoring backend",
                "scoring");
  }
  report.rows.resize(corpus.samples.size());
  parallel_for(corpus.samples.size(), static_cast<std::size_t>(config.parallelism),
               [&](std::size_t i) {
                 const EvalSample& sample = corpus.samples[i];
                 SampleRow& row = report.rows[i];
                 row.sample_id = sample.sample_id;
                 if (const auto it = human.find(sample.sample_id); it != human.end()) {
                   row.human_score = it->second;
                 } else {
                   row.human_score = sample.human_score;
                 }
                 if (i < ref_based.size()) add_framework(row, ref_based[i], Framework::kReferenceBased);
                 if (i < ref_free.size()) add_framework(row, ref_free[i], Framework::kReferenceFree);
                 if (baselines_on) add_baselines(row, sample, config);
                 if (external_on) add_external(row, corpus, sample, config, report.metrics, *clients.scoring);
                 if (config.strict && !row.failures.empty()) {
                   throw Error(ErrorCode::kInvariantViolation, row.failures.front().message,
                               sample.sample_id, i);
                 }
                 // Keep only the selected metric columns.
                 std::erase_if(row.values, [&](const auto& kv) { return !contains(report.metrics, kv.first); });
                 std::erase_if(row.fractions, [&](const auto& kv) { return !contains(report.metrics, kv.first); });
               });

  std::vector<AnnotationRecord> humans;
  for (const auto& row : report.rows) {
    if (row.human_score) humans.push_back({row.sample_id, *row.human_score, {}});
  }
  for (const auto& metric : report.metrics) {
    MetricValues values;
    for (const auto& row : report.rows) {
      if (const auto it = row.values.find(metric); it != row.values.end()) {
        values[row.sample_id] = it->second;
      }
    }
    CorrelationEntry entry{metric, 0, std::nullopt, {}};
    try {
      const Correlation c = correlate_metric(metric, values, humans);
      entry.n = c.n;
      entry.r = c.r;
    } catch (const Error& e) {
      std::size_t n = 0;
      for (const auto& h : humans) n += values.contains(h.sample_id) ? 1 : 0;
      entry.n = n;
      entry.note = std::string(to_string(e.code()));
    }
    report.correlations.push_back(std::move(entry));
  }

  for (TemplateId id : all_template_ids()) {
    const PromptTemplate& t = prompt_template(id);
    report.templates.emplace_back(t.name, t.hash);
  }
  auto describe = [](const BackendConfig& c) {
    return c.model_name.empty() ? c.kind : c.kind + " " + c.model_name;
  };
  if (clients.qgen) report.backends.emplace_back("qgen", describe(config.qgen));
  if (clients.qa) report.backends.emplace_back("qa", describe(config.qa));
  if (clients.vqa) report.backends.emplace_back("vqa", describe(config.vqa));
  if (clients.scoring && config.scoring) report.backends.emplace_back("scoring", describe(*config.scoring));
  return report;
}

std::string render_correlation_table(const std::vector<CorrelationEntry>& entries) {
  const bool any = std::any_of(entries.begin(), entries.end(),
                               [](const CorrelationEntry& e) { return e.r.has_value(); });
  if (!any) return "insufficient data\n";
  std::string out = "| Metric | Document | Image | Combined |\n|---|---|---|---|\n";
  for (const auto& row : kTableRows) {
    if (find_entry(entries, row.combined) == nullptr) continue;
    out += "| " + std::string(row.label) + " | " + cell(entries, row.document) + " | " +
           cell(entries, row.image) + " | " + cell(entries, row.combined) + " |\n";
  }
  return out;
}

std::string render_json(const MetricReport& report) {
  Json j;
  j["schema"] = "fallacious.report/1";
  j["run_id"] = report.run_id;
  j["frameworks"] = Json::array();
  for (auto f : report.frameworks) j["frameworks"].push_back(std::string(to_string(f)));
  j["metrics"] = report.metrics;
  j["samples"] = Json::array();
  for (const auto& row : report.rows) {
    Json r;
    r["sample_id"] = row.sample_id;
    r["human_score"] = row.human_score ? Json(*row.human_score) : Json(nullptr);
    r["metrics"] = Json::object();
    for (const auto& m : report.metrics) {
      const auto it = row.values.find(m);
      r["metrics"][m] = it == row.values.end() ? Json(nullptr) : Json(it->second);
    }
    r["fractions"] = Json::object();
    for (const auto& m : report.metrics) {
      if (const auto it = row.fractions.find(m); it != row.fractions.end()) r["fractions"][m] = it->second;
    }
    if (!row.ref_based_trace.empty()) {
      Json t = Json::array();
      for (const auto& q : row.ref_based_trace) {
        t.push_back({{"index", q.index}, {"question", q.question},
                     {"reference", label_json(q.first)}, {"generated", label_json(q.second)},
                     {"match", q.flag}, {"counted", q.counted}});
      }
      r["trace"]["reference-based"] = std::move(t);
    }
    if (!row.ref_free_trace.empty()) {
      Json t = Json::array();
      for (const auto& q : row.ref_free_trace) {
        t.push_back({{"index", q.index}, {"question", q.question},
                     {"document", label_json(q.first)}, {"image", label_json(q.second)},
                     {"supported", q.flag}});
      }
      r["trace"]["reference-free"] = std::move(t);
    }
    r["failures"] = Json::array();
    for (const auto& f : row.failures) {
      r["failures"].push_back({{"stage", f.stage}, {"code", f.code}, {"message", f.message}});
    }
    j["samples"].push_back(std::move(r));
  }
  j["aggregates"] = Json::object();
  for (const auto& m : report.metrics) {
    const auto [mean, n] = report.aggregate(m);
    j["aggregates"][m] = {{"mean", mean ? Json(*mean) : Json(nullptr)}, {"n", n}};
  }
  j["correlation"] = Json::array();
  for (const auto& c : report.correlations) {
    Json e{{"metric", c.metric}, {"n", c.n}, {"r", c.r ? Json(*c.r) : Json(nullptr)}};
    if (!c.r) e["status"] = "insufficient data: " + c.note;
    j["correlation"].push_back(std::move(e));
  }
  j["failed_samples"] = report.failed_samples();
  Json prov;
  prov["run_id"] = report.run_id;
  prov["templates"] = Json::object();
  for (const auto& [name, hash] : report.templates) prov["templates"][name] = hash;
  prov["backends"] = Json::object();
  for (const auto& [role, desc] : report.backends) prov["backends"][role] = desc;
  j["provenance"] = std::move(prov);
  return j.dump(2) + "\n";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

}  // namespace

std::string render_csv(const MetricReport& report) {
  std::string out = "sample_id";
  for (const auto& m : report.metrics) out += "," + m;
  out += ",human_score,status\n";
  for (const auto& row : report.rows) {
    out += csv_field(row.sample_id);
    for (const auto& m : report.metrics) {
      const auto it = row.values.find(m);
      out += "," + (it == row.values.end() ? std::string() : format_value(it->second));
    }
    out += "," + (row.human_score ? std::to_string(*row.human_score) : std::string());
    out += row.failures.empty() ? ",ok\n" : ",failed\n";
  }
  return out;
}

std::string render_markdown(const MetricReport& report) {
  std::string out = "# Evaluation report `" + report.run_id + "`\n\n";
  out += "Samples: " + std::to_string(report.rows.size()) +
         " (failed: " + std::to_string(report.failed_samples()) + ")\n\n";
  out += "## Corpus means\n\n| Metric | Mean | n |\n|---|---|---|\n";
  for (const auto& m : report.metrics) {
    const auto [mean, n] = report.aggregate(m);
    out += "| " + m + " | " + (mean ? format_value(*mean) : std::string("-")) + " | " +
           std::to_string(n) + " |\n";
  }
  out += "\n## Correlation with human judgments\n\n" + render_correlation_table(report.correlations);
  bool joined = false;
  for (const auto& c : report.correlations) joined = joined || c.n > 0;
  if (joined) {
    out += "\nJoined samples per metric:";
    for (const auto& c : report.correlations) out += " " + c.metric + "=" + std::to_string(c.n);
    out += "\n";
  }
  out += "\n## Samples\n";
  for (const auto& row : report.rows) {
    out += "\n### " + row.sample_id + "\n\n";
    if (row.human_score) out += "Human score: " + std::to_string(*row.human_score) + "\n\n";
    if (!row.values.empty()) {
      out += "| Metric | Value |\n|---|---|\n";
      for (const auto& m : report.metrics) {
        const auto it = row.values.find(m);
        if (it == row.values.end()) continue;
        std::string v = format_value(it->second);
        if (const auto f = row.fractions.find(m); f != row.fractions.end()) v += " (" + f->second + ")";
        out += "| " + m + " | " + v + " |\n";
      }
      out += "\n";
    }
    if (!row.ref_based_trace.empty()) {
      out += "Reference-based questions:\n\n| # | Question | Reference | Generated | Match |\n"
             "|---|---|---|---|---|\n";
      for (const auto& q : row.ref_based_trace) {
        out += "| " + std::to_string(q.index) + " | " + md_escape(q.question) + " | " +
               std::string(to_string(q.first)) + " | " + std::string(to_string(q.second)) + " | " +
               (!q.counted ? "excluded" : q.flag ? "yes" : "no") + " |\n";
      }
      out += "\n";
    }
    if (!row.ref_free_trace.empty()) {
      out += "Reference-free questions:\n\n| # | Question | Document | Image | Supported |\n"
             "|---|---|---|---|---|\n";
      for (const auto& q : row.ref_free_trace) {
        out += "| " + std::to_string(q.index) + " | " + md_escape(q.question) + " | " +
               std::string(to_string(q.first)) + " | " + std::string(to_string(q.second)) + " | " +
               (q.flag ? "yes" : "no") + " |\n";
      }
      out += "\n";
    }
    for (const auto& f : row.failures) out += "- failed (" + f.stage + "): " + md_escape(f.message) + "\n";
  }
  return out;
}

std::vector<fs::path> emit_report(const MetricReport& report,
                                  const std::vector<std::string>& formats, const fs::path& dir) {
  std::vector<fs::path> written;
  for (const auto& f : formats) {
    const fs::path path = dir / ("report." + f);
    if (f == "json") {
      write_file(path, render_json(report));
    } else if (f == "csv") {
      write_file(path, render_csv(report));
    } else if (f == "md") {
      write_file(path, render_markdown(report));
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown report format '" + f + "'", f);
    }
    written.push_back(path);
  }
  return written;
}

void write_jsonl(const fs::path& path, const std::vector<Json>& records) {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  write_file(path, text);
}

std::vector<Json> read_jsonl(const fs::path& path) {
  const std::string text = read_file(path, "file");
  std::vector<Json> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    Json j = Json::parse(lines[i], nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + " line " + std::to_string(i + 1) + " is not JSON", path.string(),
                  i + 1);
    }
    out.push_back(std::move(j));
  }
  return out;
}

namespace {

void write_artifacts(const fs::path& dir, const std::vector<SampleOutcome>& outcomes) {
  std::vector<Json> questions;
  std::vector<Json> answers;
  std::vector<Json> scores;
  for (const auto& o : outcomes) {
    if (o.questions) questions.push_back(to_json(*o.questions));
    if (o.first) answers.push_back(to_json(*o.first));
    if (o.second) answers.push_back(to_json(*o.second));
    if (o.score) scores.push_back(to_json(*o.score));
  }
  write_jsonl(dir / "questions.jsonl", questions);
  write_jsonl(dir / "answers.jsonl", answers);
  write_jsonl(dir / "scores.jsonl", scores);
}

}  // namespace

EvalRun evaluate(const Corpus& corpus, const RunConfig& config,
                 const std::vector<AnnotationRecord>& annotations,
                 std::optional<Backends> backends) {
  config.validate();
  EvalRun run;
  run.backends = backends ? std::move(*backends) : make_backends(config, corpus);
  Clients clients = make_clients(config, run.backends);
  std::vector<SampleOutcome> rb;
  std::vector<SampleOutcome> rf;
  if (config.runs(Framework::kReferenceBased)) rb = run_reference_based(corpus, config, clients);
  if (config.runs(Framework::kReferenceFree)) rf = run_reference_free(corpus, config, clients);
  run.report = build_report(corpus, config, rb, rf, clients, annotations);
  run.stats = total_stats(clients);

  const fs::path out(config.out_dir);
  if (!rb.empty()) write_artifacts(out / "artifacts" / "reference-based", rb);
  if (!rf.empty()) write_artifacts(out / "artifacts" / "reference-free", rf);
  emit_report(run.report, config.formats, out);
  // Cache statistics change between otherwise identical runs, so they live
  // outside the canonical report.
  Json summary;
  summary["run_id"] = config.run_id;
  summary["backend_requests"] = run.stats.requests;
  summary["cache_hits"] = run.stats.cache_hits;
  summary["retries"] = run.stats.retries;
  const std::size_t total = run.stats.requests + run.stats.cache_hits;
  summary["cache_hit_rate"] =
      total == 0 ? Json(nullptr) : Json(static_cast<double>(run.stats.cache_hits) / total);
  summary["failed_samples"] = run.report.failed_samples();
  write_file(out / "run_summary.json", summary.dump(2) + "\n");
  return run;
}

}  // namespace fallacious::harness
