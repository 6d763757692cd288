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

// Backend contracts (chat, VQA, external scoring) and the client layer that
// sits in front of them: response cache, transport retries, rate limiting
// and the in-flight cap.
//
// Backends are thin: they perform one request and either return the raw
// reply or throw Error(kBackendError) with retryable() set for transient
// faults. Everything else lives in the clients so mocks and HTTP backends
// behave identically.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fallacious/core.hpp"
#include "fallacious/prompts.hpp"

namespace fallacious {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Content of the first choice's message.
  virtual std::string complete(const ChatRequest& request) = 0;
};

class VqaBackend {
 public:
  virtual ~VqaBackend() = default;
  /// Short free-text answer for the question about the image.
  virtual std::string answer(std::span<const std::byte> image, std::string_view question) = 0;
};

enum class ScoreKind { kBertScore, kClipScore };

std::string_view to_string(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view text);

struct ScoringRequest {
  ScoreKind kind = ScoreKind::kBertScore;
  std::string candidate;
  /// Text operand for kBertScore.
  std::string reference;
  /// Image operand for kClipScore.
  std::vector<std::byte> image;
};

class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  virtual double score(const ScoringRequest& request) = 0;
};

/// Connection and client policy for one backend role.
struct BackendConfig {
  /// "openai", "vqa-http", "scoring-http", or the in-process mocks "oracle"
  /// and "scripted".
  std::string kind = "openai";
  std::string endpoint;
  std::string model_name;
  /// Name of the environment variable holding the API key. The key itself
  /// is never stored.
  std::string api_key_env;
  double temperature = 0.0;
  double timeout_seconds = 60.0;
  int max_retries = 2;
  double retry_backoff_seconds = 0.5;
  int parallelism = 4;
  /// 0 disables throttling.
  double requests_per_second = 0.0;
  /// Mock kinds only.
  std::string fact_table;
  std::vector<std::string> script;

  /// kInvalidConfig for an unknown kind, a missing endpoint or script, and
  /// whatever validate_policy() rejects.
  void validate() const;
  /// Only the client policy: timeout, retries, backoff, parallelism, rate.
  void validate_policy() const;
};

Json to_json(const BackendConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
BackendConfig backend_config_from_json(const Json& j);

struct BackendTranscript {
  std::string request_hash;
  std::string template_id;
  std::string template_hash;
  std::string model_name;
  /// Rendered prompt, or the question text for VQA and scoring requests.
  std::string request;
  std::string raw_response;
  std::int64_t timestamp = 0;
  int attempt = 1;
};

Json to_json(const BackendTranscript& t);
BackendTranscript transcript_from_json(const Json& j);

/// Content-addressed on-disk store, one JSON file per request hash under
/// `<dir>/<hash[0:2]>/<hash>.json`. Records are never overwritten; writes
/// go through a temporary file and a rename, so concurrent writers of the
/// same key are harmless.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<BackendTranscript> lookup(const std::string& request_hash) const;
  void store(const BackendTranscript& transcript);
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& request_hash) const;
  std::filesystem::path dir_;
};

/// Token bucket plus in-flight cap for one backend.
class RequestGate {
 public:
  RequestGate(int parallelism, double requests_per_second);

  class Ticket {
   public:
    explicit Ticket(RequestGate* gate) : gate_(gate) {}
    Ticket(Ticket&& other) noexcept : gate_(std::exchange(other.gate_, nullptr)) {}
    Ticket(const Ticket&) = delete;
    Ticket& operator=(const Ticket&) = delete;
    Ticket& operator=(Ticket&&) = delete;
    ~Ticket();

   private:
    RequestGate* gate_;
  };

  /// Blocks until a slot is free and the bucket has a token.
  Ticket acquire();
  int max_in_flight_observed() const noexcept { return max_observed_.load(); }

 private:
  void release();

  std::mutex mu_;
  std::condition_variable cv_;
  int capacity_;
  int in_flight_ = 0;
  std::atomic<int> max_observed_{0};
  double rate_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;
};

struct ClientStats {
  std::size_t requests = 0;    // requests that reached the backend
  std::size_t cache_hits = 0;  // answered from the cache
  std::size_t retries = 0;     // transport re-sends
};

struct Reply {
  std::string text;
  BackendTranscript transcript;
  bool from_cache = false;
};

/// Shared machinery for the three client kinds.
class ClientBase {
 public:
  ClientBase(BackendConfig config, std::shared_ptr<ResponseCache> cache);
  virtual ~ClientBase() = default;

  const BackendConfig& config() const noexcept { return config_; }
  ClientStats stats() const;
  int max_in_flight_observed() const noexcept { return gate_.max_in_flight_observed(); }

 protected:
  /// Looks the hash up in the cache; otherwise runs `send` under the gate
  /// with transport retries, records the transcript and returns it.
  template <class Send>
  Reply dispatch(BackendTranscript draft, Send&& send);

 private:
  std::optional<BackendTranscript> cached(const std::string& hash);
  void count_request();
  void count_retry();
  void remember(const BackendTranscript& t);
  void backoff(int retry) const;

  BackendConfig config_;
  std::shared_ptr<ResponseCache> cache_;
  RequestGate gate_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

class ChatClient : public ClientBase {
 public:
  ChatClient(std::shared_ptr<ChatBackend> backend, BackendConfig config,
             std::shared_ptr<ResponseCache> cache = nullptr);

  /// Sends `prompt` as a single user message. `attempt` takes part in the
  /// cache key so parse retries of the same prompt are cached separately.
  Reply ask(const PromptTemplate& tmpl, const std::string& prompt, int attempt = 1);

 private:
  std::shared_ptr<ChatBackend> backend_;
};

class VqaClient : public ClientBase {
 public:
  VqaClient(std::shared_ptr<VqaBackend> backend, BackendConfig config,
            std::shared_ptr<ResponseCache> cache = nullptr);

  Reply ask(std::span<const std::byte> image, const std::string& image_hash,
            const std::string& question);

 private:
  std::shared_ptr<VqaBackend> backend_;
};

class ScoringClient : public ClientBase {
 public:
  ScoringClient(std::shared_ptr<ScoringBackend> backend, BackendConfig config,
                std::shared_ptr<ResponseCache> cache = nullptr);

  double score(const ScoringRequest& request);

 private:
  std::shared_ptr<ScoringBackend> backend_;
};

/// Hash of a canonical JSON rendering of the request content. No clock
/// readings take part.
std::string request_hash(const Json& content);

}  // namespace fallacious
