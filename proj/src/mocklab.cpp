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

#include "fallacious/mocklab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "fallacious/answering.hpp"
#include "fallacious/digest.hpp"
#include "fallacious/http_backends.hpp"
#include "fallacious/prompts.hpp"
#include "fallacious/qgen.hpp"
#include "httplib.h"

namespace fallacious::mocklab {
namespace {

constexpr std::string_view kFormat = "fallacious-gold-facts";
constexpr std::string_view kQuestionMarker = " question: ";

std::string_view prefix_before(TemplateId id, std::string_view placeholder) {
  const std::string_view body = prompt_template(id).body;
  return body.substr(0, body.find(placeholder));
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

const std::string& last_user_message(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  throw Error(ErrorCode::kBackendError, "request has no user message");
}

AnswerLabel label_field(const Json& item, const char* field, const std::string& sample_id) {
  const auto it = item.find(field);
  if (it == item.end() || !it->is_string()) {
    throw Error(ErrorCode::kInvalidConfig,
                "fact table entry for '" + sample_id + "' lacks '" + field + "'", field);
  }
  return parse_answer_label(it->get<std::string>());
}

std::string text_hash(std::string_view text) { return sha256_hex(trim(text)); }

}  // namespace

std::string canonical_question(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : trim(text)) {
    if (std::isspace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string question_key(std::string_view text) { return sha256_hex(canonical_question(text)); }

GoldFactTable GoldFactTable::from_json(const Json& j) {
  if (!j.is_object() || j.value("format", "") != kFormat) {
    throw Error(ErrorCode::kInvalidConfig, "not a gold fact table", "format");
  }
  if (j.value("version", 0) != kVersion) {
    throw Error(ErrorCode::kInvalidConfig,
                "unsupported fact table version " + std::to_string(j.value("version", 0)),
                "version");
  }
  GoldFactTable table;
  const auto samples = j.find("samples");
  if (samples == j.end() || !samples->is_array()) {
    throw Error(ErrorCode::kInvalidConfig, "fact table has no 'samples' array", "samples");
  }
  auto remember = [&](AnswerSource role, const std::string& text, AnswerLabel label) {
    const auto key = std::make_pair(role, question_key(text));
    const auto [it, inserted] = table.by_key_.emplace(key, label);
    if (!inserted && it->second != label) {
      throw Error(ErrorCode::kInvalidConfig,
                  "question '" + text + "' has conflicting " + std::string(to_string(role)) +
                      " labels",
                  text);
    }
  };
  for (const Json& s : *samples) {
    GoldSample sample;
    try {
      sample.sample_id = s.at("sample_id").get<std::string>();
      if (s.contains("bertscore")) sample.bertscore = s["bertscore"].get<double>();
      if (s.contains("clipscore")) sample.clipscore = s["clipscore"].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidConfig, std::string("bad fact table sample: ") + e.what());
    }
    if (table.by_id_.contains(sample.sample_id)) {
      throw Error(ErrorCode::kDuplicateId, "duplicate sample '" + sample.sample_id + "'",
                  sample.sample_id);
    }
    if (auto rb = s.find("reference_based"); rb != s.end()) {
      for (const Json& item : *rb) {
        GoldQuestion q;
        q.text = item.at("question").get<std::string>();
        if (item.contains("seed")) q.seed = parse_answer_label(item["seed"].get<std::string>());
        q.labels[AnswerSource::kReferenceSummary] =
            label_field(item, "reference", sample.sample_id);
        q.labels[AnswerSource::kGeneratedSummary] =
            label_field(item, "generated", sample.sample_id);
        for (const auto& [role, label] : q.labels) remember(role, q.text, label);
        sample.reference_based.push_back(std::move(q));
      }
    }
    if (auto rf = s.find("reference_free"); rf != s.end()) {
      for (const Json& item : *rf) {
        GoldQuestion q;
        q.text = item.at("question").get<std::string>();
        q.labels[AnswerSource::kDocument] = label_field(item, "document", sample.sample_id);
        const AnswerLabel image = label_field(item, "image", sample.sample_id);
        if (image == AnswerLabel::kNotProvided) {
          throw Error(ErrorCode::kInvalidConfig, "image labels must be yes or no", q.text);
        }
        q.labels[AnswerSource::kImage] = image;
        for (const auto& [role, label] : q.labels) remember(role, q.text, label);
        sample.reference_free.push_back(std::move(q));
      }
    }
    table.by_id_.emplace(sample.sample_id, table.samples_.size());
    table.samples_.push_back(std::move(sample));
  }
  return table;
}

GoldFactTable GoldFactTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open fact table " + path.string(), path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const Json j = Json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kInvalidConfig, "fact table " + path.string() + " is not JSON",
                path.string());
  }
  return from_json(j);
}

const GoldSample& GoldFactTable::sample(const std::string& sample_id) const {
  const auto it = by_id_.find(sample_id);
  if (it == by_id_.end()) {
    throw Error(ErrorCode::kUnknownQuestion, "no facts for sample '" + sample_id + "'", sample_id);
  }
  return samples_[it->second];
}

AnswerLabel GoldFactTable::lookup(AnswerSource role, std::string_view question) const {
  const std::string key = question_key(question);
  const auto it = by_key_.find({role, key});
  if (it == by_key_.end()) {
    throw Error(ErrorCode::kUnknownQuestion,
                "no " + std::string(to_string(role)) + " label for question '" +
                    std::string(question) + "'",
                key);
  }
  return it->second;
}

AnswerLabel GoldFactTable::lookup(const std::string& sample_id, Framework framework,
                                  std::size_t index, AnswerSource role) const {
  const GoldSample& s = sample(sample_id);
  const auto& list = framework == Framework::kReferenceBased ? s.reference_based : s.reference_free;
  if (index >= list.size()) {
    throw Error(ErrorCode::kUnknownQuestion,
                "sample '" + sample_id + "' has no question " + std::to_string(index), sample_id,
                index);
  }
  const auto it = list[index].labels.find(role);
  if (it == list[index].labels.end()) {
    throw Error(ErrorCode::kUnknownQuestion, "no label for that role", sample_id, index);
  }
  return it->second;
}

std::string GoldFactTable::qgen_reply(const std::string& sample_id, Framework framework) const {
  const GoldSample& s = sample(sample_id);
  Json reply = Json::array();
  if (framework == Framework::kReferenceBased) {
    for (const auto& q : s.reference_based) {
      Json item;
      item["Question"] = q.text;
      // Seed answers are capitalised the way chat models emit them.
      std::string seed(to_string(q.seed.value_or(q.labels.at(AnswerSource::kReferenceSummary))));
      seed[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(seed[0])));
      item["Answer"] = seed;
      reply.push_back(std::move(item));
    }
  } else {
    for (const auto& q : s.reference_free) reply.push_back(q.text);
  }
  return reply.dump(2);
}

ScriptedChatBackend::ScriptedChatBackend(std::vector<std::string> script)
    : script_(std::move(script)) {
  if (script_.empty()) throw Error(ErrorCode::kInvalidConfig, "script must not be empty", "script");
}

std::string ScriptedChatBackend::complete(const ChatRequest& request) {
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
  }
  const std::size_t i = calls_.fetch_add(1);
  if (i >= script_.size()) {
    throw Error(ErrorCode::kScriptExhausted,
                "script of " + std::to_string(script_.size()) + " replies exhausted on call " +
                    std::to_string(i + 1),
                "", i);
  }
  return script_[i];
}

std::vector<ChatRequest> ScriptedChatBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

ScriptedVqaBackend::ScriptedVqaBackend(std::vector<std::string> script)
    : script_(std::move(script)) {
  if (script_.empty()) throw Error(ErrorCode::kInvalidConfig, "script must not be empty", "script");
}

std::string ScriptedVqaBackend::answer(std::span<const std::byte>, std::string_view) {
  const std::size_t i = calls_.fetch_add(1);
  if (i >= script_.size()) {
    throw Error(ErrorCode::kScriptExhausted, "VQA script exhausted", "", i);
  }
  return script_[i];
}

ScriptedScoringBackend::ScriptedScoringBackend(std::vector<double> script)
    : script_(std::move(script)) {
  if (script_.empty()) throw Error(ErrorCode::kInvalidConfig, "script must not be empty", "script");
}

double ScriptedScoringBackend::score(const ScoringRequest&) {
  const std::size_t i = calls_.fetch_add(1);
  if (i >= script_.size()) {
    throw Error(ErrorCode::kScriptExhausted, "scoring script exhausted", "", i);
  }
  return script_[i];
}

OracleQGenBackend::OracleQGenBackend(std::shared_ptr<const GoldFactTable> table,
                                     const std::vector<EvalSample>& corpus,
                                     bool reference_conditioned)
    : table_(std::move(table)) {
  for (const auto& sample : corpus) {
    const auto* gold = [&]() -> const GoldSample* {
      try {
        return &table_->sample(sample.sample_id);
      } catch (const Error&) {
        return nullptr;
      }
    }();
    if (gold == nullptr) continue;
    if (!gold->reference_based.empty()) {
      std::optional<std::string_view> reference;
      if (reference_conditioned && sample.reference_summary) reference = *sample.reference_summary;
      if (!reference_conditioned || reference) {
        replies_[sha256_hex(build_refbased_qgen_prompt(sample.document, reference))] =
            table_->qgen_reply(sample.sample_id, Framework::kReferenceBased);
      }
    }
    if (!gold->reference_free.empty()) {
      const auto n = static_cast<int>(gold->reference_free.size());
      replies_[sha256_hex(build_reffree_qgen_prompt(sample.generated_summary, n))] =
          table_->qgen_reply(sample.sample_id, Framework::kReferenceFree);
    }
  }
}

std::string OracleQGenBackend::complete(const ChatRequest& request) {
  ++calls_;
  const std::string& prompt = last_user_message(request);
  const auto it = replies_.find(sha256_hex(prompt));
  if (it == replies_.end()) {
    throw Error(ErrorCode::kUnknownQuestion, "question-generation prompt not in the fact table",
                sha256_hex(prompt));
  }
  return it->second;
}

std::string extract_question(std::string_view prompt) {
  const auto pos = prompt.rfind(kQuestionMarker);
  if (pos == std::string_view::npos) {
    throw Error(ErrorCode::kUnknownQuestion, "prompt embeds no question");
  }
  return std::string(trim(prompt.substr(pos + kQuestionMarker.size())));
}

std::string extract_context(std::string_view prompt) {
  for (TemplateId id : {TemplateId::kQaBinary, TemplateId::kQaTernary}) {
    const std::string_view prefix = prefix_before(id, "{context}");
    if (starts_with(prompt, prefix)) {
      const auto pos = prompt.rfind(kQuestionMarker);
      if (pos == std::string_view::npos || pos < prefix.size()) break;
      return std::string(prompt.substr(prefix.size(), pos - prefix.size()));
    }
  }
  throw Error(ErrorCode::kUnknownQuestion, "prompt is not a question-answering prompt");
}

namespace {

std::string render_for_prompt(std::string_view prompt, AnswerLabel label) {
  if (starts_with(prompt, prefix_before(TemplateId::kQaTernary, "{context}"))) {
    return std::string(to_string(label));
  }
  if (label == AnswerLabel::kNotProvided) return "not provided";
  return render_answer(label, AnswerMode::kBinary);
}

}  // namespace

OracleQaBackend::OracleQaBackend(std::shared_ptr<const GoldFactTable> table, AnswerSource role)
    : table_(std::move(table)), role_(role) {}

std::string OracleQaBackend::complete(const ChatRequest& request) {
  ++calls_;
  const std::string& prompt = last_user_message(request);
  return render_for_prompt(prompt, table_->lookup(role_, extract_question(prompt)));
}

OracleTextBackend::OracleTextBackend(std::shared_ptr<const GoldFactTable> table,
                                     const std::vector<EvalSample>& corpus)
    : table_(std::move(table)) {
  for (const auto& s : corpus) {
    roles_.emplace(text_hash(s.document), AnswerSource::kDocument);
    roles_.emplace(text_hash(s.generated_summary), AnswerSource::kGeneratedSummary);
    if (s.reference_summary) {
      roles_.emplace(text_hash(*s.reference_summary), AnswerSource::kReferenceSummary);
    }
  }
}

std::string OracleTextBackend::complete(const ChatRequest& request) {
  ++calls_;
  const std::string& prompt = last_user_message(request);
  const std::string question = extract_question(prompt);
  const std::string context_hash = text_hash(extract_context(prompt));
  // A text can serve several roles (e.g. generated == reference); every
  // role that knows the question must agree.
  std::optional<AnswerLabel> label;
  for (auto [it, end] = roles_.equal_range(context_hash); it != end; ++it) {
    std::optional<AnswerLabel> l;
    try {
      l = table_->lookup(it->second, question);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnknownQuestion) throw;
    }
    if (l && label && *label != *l) {
      throw Error(ErrorCode::kUnknownQuestion, "context serves roles that disagree", question);
    }
    if (l) label = l;
  }
  if (!label) {
    throw Error(ErrorCode::kUnknownQuestion, "no label for question '" + question + "'", question);
  }
  return render_for_prompt(prompt, *label);
}

OracleVqaBackend::OracleVqaBackend(std::shared_ptr<const GoldFactTable> table)
    : table_(std::move(table)) {}

std::string OracleVqaBackend::answer(std::span<const std::byte> image, std::string_view question) {
  ++calls_;
  if (image.empty() || !looks_like_image(image)) {
    throw Error(ErrorCode::kImageUnreadable, "oracle VQA received no decodable image");
  }
  return std::string(to_string(table_->lookup(AnswerSource::kImage, question)));
}

OracleScoringBackend::OracleScoringBackend(std::shared_ptr<const GoldFactTable> table,
                                           const std::vector<EvalSample>& corpus)
    : table_(std::move(table)) {
  for (const auto& s : corpus) by_summary_.emplace(text_hash(s.generated_summary), s.sample_id);
}

double OracleScoringBackend::score(const ScoringRequest& request) {
  ++calls_;
  const auto it = by_summary_.find(text_hash(request.candidate));
  if (it == by_summary_.end()) {
    throw Error(ErrorCode::kUnknownQuestion, "candidate not in corpus", request.candidate);
  }
  const GoldSample& s = table_->sample(it->second);
  const auto& value = request.kind == ScoreKind::kBertScore ? s.bertscore : s.clipscore;
  if (!value) {
    throw Error(ErrorCode::kUnknownQuestion,
                "no " + std::string(to_string(request.kind)) + " for '" + s.sample_id + "'",
                s.sample_id);
  }
  return *value;
}

PromptRouter::PromptRouter(std::shared_ptr<ChatBackend> qgen, std::shared_ptr<ChatBackend> qa)
    : qgen_(std::move(qgen)), qa_(std::move(qa)) {}

std::string PromptRouter::complete(const ChatRequest& request) {
  const std::string& prompt = last_user_message(request);
  const bool is_qgen = starts_with(prompt, prefix_before(TemplateId::kRefBasedQGen, "{article}")) ||
                       starts_with(prompt, prefix_before(TemplateId::kRefFreeQGen, "{n_questions}"));
  return is_qgen ? qgen_->complete(request) : qa_->complete(request);
}

MockServer::MockServer(std::shared_ptr<ChatBackend> chat, std::shared_ptr<VqaBackend> vqa,
                       std::shared_ptr<ScoringBackend> scoring)
    : chat_(std::move(chat)),
      vqa_(std::move(vqa)),
      scoring_(std::move(scoring)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

MockServer::~MockServer() { stop(); }

namespace {

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  Json body;
  body["error"] = {{"message", message}};
  res.set_content(body.dump(), "application/json");
}

// Backend errors become 422 so clients do not retry them; everything else
// is a 400.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    reply_error(res, e.retryable() ? 503 : 422, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 400, e.what());
  }
}

}  // namespace

void MockServer::install_routes() {
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    ++served_;
    if (!chat_) return reply_error(res, 404, "chat backend not configured");
    guarded(res, [&] {
      const Json body = Json::parse(req.body);
      ChatRequest request;
      request.model = body.value("model", "");
      request.temperature = body.value("temperature", 0.0);
      for (const Json& m : body.at("messages")) {
        request.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
      }
      const std::string content = chat_->complete(request);
      Json out;
      out["object"] = "chat.completion";
      out["model"] = request.model;
      out["choices"] = Json::array(
          {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}},
            {"finish_reason", "stop"}}});
      res.set_content(out.dump(), "application/json");
    });
  });
  server_->Post("/vqa", [this](const httplib::Request& req, httplib::Response& res) {
    ++served_;
    if (!vqa_) return reply_error(res, 404, "VQA backend not configured");
    guarded(res, [&] {
      const Json body = Json::parse(req.body);
      const auto image = base64_decode(body.at("image").get<std::string>());
      Json out;
      out["answer"] = vqa_->answer(image, body.at("question").get<std::string>());
      res.set_content(out.dump(), "application/json");
    });
  });
  server_->Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
    ++served_;
    if (!scoring_) return reply_error(res, 404, "scoring backend not configured");
    guarded(res, [&] {
      const Json body = Json::parse(req.body);
      ScoringRequest request;
      request.kind = parse_score_kind(body.at("kind").get<std::string>());
      request.candidate = body.at("candidate").get<std::string>();
      if (request.kind == ScoreKind::kBertScore) {
        request.reference = body.at("reference").get<std::string>();
      } else {
        request.image = base64_decode(body.at("image").get<std::string>());
      }
      Json out;
      out["score"] = scoring_->score(request);
      res.set_content(out.dump(), "application/json");
    });
  });
}

int MockServer::start(int port, const std::string& host) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) {
    throw Error(ErrorCode::kIoError, "cannot bind mock server on " + host, host);
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockServer::serve_blocking(int port, const std::string& host) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::kIoError, "cannot listen on " + host + ":" + std::to_string(port), host);
  }
}

void MockServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace fallacious::mocklab
