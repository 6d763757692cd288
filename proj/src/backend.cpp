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

#include "fallacious/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "fallacious/digest.hpp"

namespace fallacious {
namespace {

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(ScoreKind kind) {
  return kind == ScoreKind::kBertScore ? "bertscore" : "clipscore";
}

ScoreKind parse_score_kind(std::string_view text) {
  if (text == "bertscore") return ScoreKind::kBertScore;
  if (text == "clipscore") return ScoreKind::kClipScore;
  throw Error(ErrorCode::kMalformedRecord, "unknown score kind '" + std::string(text) + "'",
              std::string(text));
}

void BackendConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, field + " " + why, field);
  };
  static const std::vector<std::string> kKinds = {"openai", "vqa-http", "scoring-http", "oracle",
                                                  "scripted"};
  if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end()) {
    fail("kind", "must be one of openai, vqa-http, scoring-http, oracle, scripted");
  }
  validate_policy();
  const bool http = kind == "openai" || kind == "vqa-http" || kind == "scoring-http";
  if (http && endpoint.empty()) fail("endpoint", "is required for HTTP backends");
  if (kind == "scripted" && script.empty()) fail("script", "must not be empty");
}

void BackendConfig::validate_policy() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, field + " " + why, field);
  };
  if (!(timeout_seconds > 0)) fail("timeout", "must be > 0");
  if (parallelism < 1) fail("parallelism", "must be >= 1");
  if (max_retries < 0) fail("max_retries", "must be >= 0");
  if (!(temperature >= 0)) fail("temperature", "must be >= 0");
  if (!(requests_per_second >= 0)) fail("requests_per_second", "must be >= 0");
  if (!(retry_backoff_seconds >= 0)) fail("retry_backoff", "must be >= 0");
}

Json to_json(const BackendConfig& c) {
  Json j;
  j["kind"] = c.kind;
  j["endpoint"] = c.endpoint;
  j["model"] = c.model_name;
  j["api_key_env"] = c.api_key_env;
  j["temperature"] = c.temperature;
  j["timeout"] = c.timeout_seconds;
  j["max_retries"] = c.max_retries;
  j["retry_backoff"] = c.retry_backoff_seconds;
  j["parallelism"] = c.parallelism;
  j["requests_per_second"] = c.requests_per_second;
  if (!c.fact_table.empty()) j["fact_table"] = c.fact_table;
  if (!c.script.empty()) j["script"] = c.script;
  return j;
}

BackendConfig backend_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "backend config must be an object");
  BackendConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "kind") c.kind = value.get<std::string>();
      else if (key == "endpoint") c.endpoint = value.get<std::string>();
      else if (key == "model") c.model_name = value.get<std::string>();
      else if (key == "api_key_env") c.api_key_env = value.get<std::string>();
      else if (key == "temperature") c.temperature = value.get<double>();
      else if (key == "timeout") c.timeout_seconds = value.get<double>();
      else if (key == "max_retries") c.max_retries = value.get<int>();
      else if (key == "retry_backoff") c.retry_backoff_seconds = value.get<double>();
      else if (key == "parallelism") c.parallelism = value.get<int>();
      else if (key == "requests_per_second") c.requests_per_second = value.get<double>();
      else if (key == "fact_table") c.fact_table = value.get<std::string>();
      else if (key == "script") c.script = value.get<std::vector<std::string>>();
      else throw Error(ErrorCode::kInvalidConfig, "unknown backend key '" + key + "'", key);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kInvalidConfig, "backend key '" + key + "' has the wrong type", key);
    }
  }
  c.validate();
  return c;
}

Json to_json(const BackendTranscript& t) {
  Json j;
  j["request_hash"] = t.request_hash;
  j["template_id"] = t.template_id;
  j["template_hash"] = t.template_hash;
  j["model"] = t.model_name;
  j["request"] = t.request;
  j["raw_response"] = t.raw_response;
  j["timestamp"] = t.timestamp;
  j["attempt"] = t.attempt;
  return j;
}

BackendTranscript transcript_from_json(const Json& j) {
  try {
    BackendTranscript t;
    t.request_hash = j.at("request_hash").get<std::string>();
    t.template_id = j.at("template_id").get<std::string>();
    t.template_hash = j.at("template_hash").get<std::string>();
    t.model_name = j.at("model").get<std::string>();
    t.request = j.at("request").get<std::string>();
    t.raw_response = j.at("raw_response").get<std::string>();
    t.timestamp = j.at("timestamp").get<std::int64_t>();
    t.attempt = j.at("attempt").get<int>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("bad transcript record: ") + e.what());
  }
}

std::string request_hash(const Json& content) { return sha256_hex(content.dump()); }

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, "cannot create cache dir " + dir_.string() + ": " + ec.message(),
                dir_.string());
  }
}

std::filesystem::path ResponseCache::path_for(const std::string& hash) const {
  return dir_ / hash.substr(0, 2) / (hash + ".json");
}

std::optional<BackendTranscript> ResponseCache::lookup(const std::string& hash) const {
  const auto path = path_for(hash);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  const Json j = Json::parse(read_file(path), nullptr, false);
  // A truncated record is treated as a miss and rewritten by the next store.
  if (j.is_discarded()) return std::nullopt;
  BackendTranscript t = transcript_from_json(j);
  if (t.request_hash != hash) return std::nullopt;
  return t;
}

void ResponseCache::store(const BackendTranscript& t) {
  const auto path = path_for(t.request_hash);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (std::filesystem::exists(path, ec) && lookup(t.request_hash)) return;
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto tmp = path.parent_path() / (t.request_hash + ".tmp" + std::to_string(rng()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << to_json(t).dump(2) << '\n';
    if (!out) {
      throw Error(ErrorCode::kIoError, "cannot write cache record " + tmp.string(), tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot publish cache record " + path.string(), path.string());
  }
}

RequestGate::RequestGate(int parallelism, double requests_per_second)
    : capacity_(parallelism),
      rate_(requests_per_second),
      tokens_(requests_per_second > 0 ? std::max(1.0, requests_per_second) : 0.0),
      last_refill_(std::chrono::steady_clock::now()) {}

RequestGate::Ticket::~Ticket() {
  if (gate_) gate_->release();
}

RequestGate::Ticket RequestGate::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < capacity_; });
  if (rate_ > 0) {
    const double burst = std::max(1.0, rate_);
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      const double elapsed = std::chrono::duration<double>(now - last_refill_).count();
      tokens_ = std::min(burst, tokens_ + elapsed * rate_);
      last_refill_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        break;
      }
      const double wait = (1.0 - tokens_) / rate_;
      cv_.wait_for(lock, std::chrono::duration<double>(wait));
    }
  }
  ++in_flight_;
  int seen = max_observed_.load();
  while (in_flight_ > seen && !max_observed_.compare_exchange_weak(seen, in_flight_)) {
  }
  return Ticket(this);
}

void RequestGate::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_all();
}

ClientBase::ClientBase(BackendConfig config, std::shared_ptr<ResponseCache> cache)
    : config_(std::move(config)),
      cache_(std::move(cache)),
      gate_(config_.parallelism, config_.requests_per_second) {
  config_.validate_policy();
}

ClientStats ClientBase::stats() const {
  return ClientStats{requests_.load(), cache_hits_.load(), retries_.load()};
}

std::optional<BackendTranscript> ClientBase::cached(const std::string& hash) {
  if (!cache_) return std::nullopt;
  auto hit = cache_->lookup(hash);
  if (hit) ++cache_hits_;
  return hit;
}

void ClientBase::count_request() { ++requests_; }
void ClientBase::count_retry() { ++retries_; }

void ClientBase::remember(const BackendTranscript& t) {
  if (cache_) cache_->store(t);
}

void ClientBase::backoff(int retry) const {
  if (config_.retry_backoff_seconds <= 0) return;
  const double seconds = config_.retry_backoff_seconds * std::pow(2.0, retry);
  std::this_thread::sleep_for(std::chrono::duration<double>(std::min(seconds, 30.0)));
}

template <class Send>
Reply ClientBase::dispatch(BackendTranscript draft, Send&& send) {
  if (auto hit = cached(draft.request_hash)) {
    Reply reply;
    reply.text = hit->raw_response;
    reply.transcript = std::move(*hit);
    reply.from_cache = true;
    return reply;
  }
  for (int retry = 0;; ++retry) {
    try {
      std::string raw;
      {
        auto ticket = gate_.acquire();
        count_request();
        raw = send();
      }
      draft.raw_response = std::move(raw);
      draft.timestamp = now_seconds();
      remember(draft);
      Reply reply;
      reply.text = draft.raw_response;
      reply.transcript = std::move(draft);
      return reply;
    } catch (const Error& e) {
      if (!e.retryable() || retry >= config_.max_retries) throw;
      count_retry();
      backoff(retry);
    }
  }
}

ChatClient::ChatClient(std::shared_ptr<ChatBackend> backend, BackendConfig config,
                       std::shared_ptr<ResponseCache> cache)
    : ClientBase(std::move(config), std::move(cache)), backend_(std::move(backend)) {}

Reply ChatClient::ask(const PromptTemplate& tmpl, const std::string& prompt, int attempt) {
  Json key;
  key["kind"] = "chat";
  key["template_id"] = tmpl.name;
  key["template_hash"] = tmpl.hash;
  key["model"] = config().model_name;
  key["temperature"] = config().temperature;
  key["prompt"] = prompt;
  key["attempt"] = attempt;
  BackendTranscript draft;
  draft.request_hash = request_hash(key);
  draft.template_id = std::string(tmpl.name);
  draft.template_hash = tmpl.hash;
  draft.model_name = config().model_name;
  draft.request = prompt;
  draft.attempt = attempt;
  return dispatch(std::move(draft), [&] {
    ChatRequest request;
    request.model = config().model_name;
    request.temperature = config().temperature;
    request.messages.push_back({"user", prompt});
    return backend_->complete(request);
  });
}

VqaClient::VqaClient(std::shared_ptr<VqaBackend> backend, BackendConfig config,
                     std::shared_ptr<ResponseCache> cache)
    : ClientBase(std::move(config), std::move(cache)), backend_(std::move(backend)) {}

Reply VqaClient::ask(std::span<const std::byte> image, const std::string& image_hash,
                     const std::string& question) {
  Json key;
  key["kind"] = "vqa";
  key["model"] = config().model_name;
  key["image_sha256"] = image_hash;
  key["question"] = question;
  BackendTranscript draft;
  draft.request_hash = request_hash(key);
  draft.template_id = "vqa";
  draft.model_name = config().model_name;
  draft.request = question;
  return dispatch(std::move(draft), [&] { return backend_->answer(image, question); });
}

ScoringClient::ScoringClient(std::shared_ptr<ScoringBackend> backend, BackendConfig config,
                             std::shared_ptr<ResponseCache> cache)
    : ClientBase(std::move(config), std::move(cache)), backend_(std::move(backend)) {}

double ScoringClient::score(const ScoringRequest& request) {
  Json key;
  key["kind"] = "score";
  key["score_kind"] = to_string(request.kind);
  key["model"] = config().model_name;
  key["candidate"] = request.candidate;
  if (request.kind == ScoreKind::kBertScore) {
    key["reference"] = request.reference;
  } else {
    key["image_sha256"] = sha256_hex(
        std::string_view(reinterpret_cast<const char*>(request.image.data()), request.image.size()));
  }
  BackendTranscript draft;
  draft.request_hash = request_hash(key);
  draft.template_id = std::string(to_string(request.kind));
  draft.model_name = config().model_name;
  draft.request = request.candidate;
  const Reply reply = dispatch(std::move(draft), [&] {
    const double value = backend_->score(request);
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kMalformedBackendReply, "scoring backend returned a non-finite value");
    }
    return Json(value).dump();
  });
  const Json parsed = Json::parse(reply.text, nullptr, false);
  if (!parsed.is_number()) {
    throw Error(ErrorCode::kMalformedBackendReply, "cached score is not a number", reply.text);
  }
  return parsed.get<double>();
}

}  // namespace fallacious
