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

// HTTP implementations of the backend contracts.
//
//   chat     POST <endpoint>/chat/completions
//            {"model", "messages": [{"role", "content"}], "temperature"}
//            -> choices[0].message.content
//   vqa      POST <endpoint>  {"image": <base64>, "question"} -> {"answer"}
//   scoring  POST <endpoint>  {"kind", "candidate", "reference" | "image"}
//            -> {"score"}
//
// 408, 429 and 5xx replies and transport failures are retryable; other
// non-2xx statuses are not.

#pragma once

#include <span>
#include <string>
#include <string_view>

#include "fallacious/backend.hpp"

namespace fallacious {

struct Endpoint {
  /// "http://host:port" form accepted by the HTTP client.
  std::string origin;
  std::string path;
};

/// Splits a URL; `append_path` is added unless the path already ends with it.
Endpoint parse_endpoint(std::string_view url, std::string_view append_path = {});

Json chat_request_body(const ChatRequest& request);
std::string parse_chat_response(std::string_view body);
Json vqa_request_body(std::span<const std::byte> image, std::string_view question);
std::string parse_vqa_response(std::string_view body);
Json scoring_request_body(const ScoringRequest& request);
double parse_scoring_response(std::string_view body);

/// BackendError for a non-2xx status, retryable for 408/429/5xx.
Error http_status_error(int status, std::string_view body);

class OpenAiChatBackend : public ChatBackend {
 public:
  explicit OpenAiChatBackend(BackendConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  BackendConfig config_;
  Endpoint endpoint_;
};

class HttpVqaBackend : public VqaBackend {
 public:
  explicit HttpVqaBackend(BackendConfig config);
  std::string answer(std::span<const std::byte> image, std::string_view question) override;

 private:
  BackendConfig config_;
  Endpoint endpoint_;
};

class HttpScoringBackend : public ScoringBackend {
 public:
  explicit HttpScoringBackend(BackendConfig config);
  double score(const ScoringRequest& request) override;

 private:
  BackendConfig config_;
  Endpoint endpoint_;
};

}  // namespace fallacious
