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

#include "fallacious/http_backends.hpp"

#include <cmath>
#include <cstdlib>

#include "fallacious/digest.hpp"
#include "httplib.h"

namespace fallacious {
namespace {

Json parse_reply_object(std::string_view body) {
  Json j = Json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kMalformedBackendReply, "reply is not a JSON object",
                std::string(body.substr(0, 200)));
  }
  return j;
}

std::string post_json(const BackendConfig& config, const Endpoint& endpoint, const Json& body) {
  httplib::Client client(endpoint.origin);
  const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
  const auto as_micro = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(as_micro);
  client.set_read_timeout(as_micro);
  client.set_write_timeout(as_micro);
  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorCode::kBackendError,
                  "environment variable " + config.api_key_env + " is not set",
                  config.api_key_env);
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
  if (!res) {
    Error e(ErrorCode::kBackendError,
            "request to " + endpoint.origin + endpoint.path + " failed: " + httplib::to_string(res.error()),
            endpoint.origin);
    e.set_retryable(true);
    throw e;
  }
  if (res->status < 200 || res->status >= 300) throw http_status_error(res->status, res->body);
  return res->body;
}

}  // namespace

Endpoint parse_endpoint(std::string_view url, std::string_view append_path) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidConfig, "endpoint '" + std::string(url) + "' has no scheme",
                "endpoint");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::kInvalidConfig, "unsupported scheme '" + std::string(scheme) + "'",
                "endpoint");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint out;
  out.origin = std::string(url.substr(0, path_start));
  std::string path = path_start == std::string_view::npos ? "" : std::string(url.substr(path_start));
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (!append_path.empty() && !std::string_view(path).ends_with(append_path)) path += append_path;
  if (path.empty()) path = "/";
  out.path = std::move(path);
  return out;
}

Json chat_request_body(const ChatRequest& request) {
  Json j;
  j["model"] = request.model;
  Json messages = Json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  j["messages"] = std::move(messages);
  j["temperature"] = request.temperature;
  return j;
}

std::string parse_chat_response(std::string_view body) {
  const Json j = parse_reply_object(body);
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::kMalformedBackendReply, "reply has no choices");
  }
  const Json& first = choices->front();
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
      !first["message"].contains("content") || !first["message"]["content"].is_string()) {
    throw Error(ErrorCode::kMalformedBackendReply, "first choice has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

Json vqa_request_body(std::span<const std::byte> image, std::string_view question) {
  Json j;
  j["image"] = base64_encode(image);
  j["question"] = question;
  return j;
}

std::string parse_vqa_response(std::string_view body) {
  const Json j = parse_reply_object(body);
  const auto it = j.find("answer");
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCode::kMalformedBackendReply, "VQA reply has no string 'answer'");
  }
  return it->get<std::string>();
}

Json scoring_request_body(const ScoringRequest& request) {
  Json j;
  j["kind"] = to_string(request.kind);
  j["candidate"] = request.candidate;
  if (request.kind == ScoreKind::kBertScore) {
    j["reference"] = request.reference;
  } else {
    j["image"] = base64_encode(request.image);
  }
  return j;
}

double parse_scoring_response(std::string_view body) {
  const Json j = parse_reply_object(body);
  const auto it = j.find("score");
  if (it == j.end() || !it->is_number() || !std::isfinite(it->get<double>())) {
    throw Error(ErrorCode::kMalformedBackendReply, "scoring reply has no numeric 'score'");
  }
  return it->get<double>();
}

Error http_status_error(int status, std::string_view body) {
  Error e(ErrorCode::kBackendError,
          "HTTP " + std::to_string(status) + ": " + std::string(body.substr(0, 300)),
          std::to_string(status));
  e.set_retryable(status == 408 || status == 429 || status >= 500);
  return e;
}

OpenAiChatBackend::OpenAiChatBackend(BackendConfig config)
    : config_(std::move(config)), endpoint_(parse_endpoint(config_.endpoint, "/chat/completions")) {}

std::string OpenAiChatBackend::complete(const ChatRequest& request) {
  return parse_chat_response(post_json(config_, endpoint_, chat_request_body(request)));
}

HttpVqaBackend::HttpVqaBackend(BackendConfig config)
    : config_(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)) {}

std::string HttpVqaBackend::answer(std::span<const std::byte> image, std::string_view question) {
  return parse_vqa_response(post_json(config_, endpoint_, vqa_request_body(image, question)));
}

HttpScoringBackend::HttpScoringBackend(BackendConfig config)
    : config_(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)) {}

double HttpScoringBackend::score(const ScoringRequest& request) {
  return parse_scoring_response(post_json(config_, endpoint_, scoring_request_body(request)));
}

}  // namespace fallacious
