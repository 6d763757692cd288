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

#include <atomic>
#include <chrono>
#include <thread>

#include "fallacious/backend.hpp"
#include "fallacious/mocklab.hpp"
#include "fallacious/parallel.hpp"
#include "test_support.hpp"

namespace fallacious {
namespace {

using testing_support::TempDir;

/// Fails the first `failures` calls with the given retryability.
class FlakyChat : public ChatBackend {
 public:
  FlakyChat(int failures, bool retryable) : failures_(failures), retryable_(retryable) {}
  std::string complete(const ChatRequest& request) override {
    const int n = calls.fetch_add(1);
    if (n < failures_) {
      throw Error(ErrorCode::kBackendError, "transient").set_retryable(retryable_);
    }
    return "ok:" + request.messages.at(0).content;
  }
  std::atomic<int> calls{0};

 private:
  int failures_;
  bool retryable_;
};

/// Sleeps so that concurrent calls overlap.
class SlowChat : public ChatBackend {
 public:
  std::string complete(const ChatRequest&) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return "1";
  }
};

BackendConfig config_with(int retries) {
  BackendConfig c;
  c.kind = "scripted";
  c.model_name = "m";
  c.max_retries = retries;
  c.retry_backoff_seconds = 0;
  return c;
}

const PromptTemplate& qa() { return prompt_template(TemplateId::kQaBinary); }

TEST(BackendConfig, Validation) {
  BackendConfig c;
  EXPECT_THROW(c.validate(), Error);  // openai without endpoint
  c.endpoint = "http://localhost:1/v1";
  EXPECT_NO_THROW(c.validate());
  c.kind = "carrier-pigeon";
  EXPECT_THROW(c.validate(), Error);
  BackendConfig scripted = config_with(1);
  EXPECT_THROW(scripted.validate(), Error);  // no script
  scripted.script = {"1"};
  EXPECT_NO_THROW(scripted.validate());
  scripted.parallelism = 0;
  EXPECT_THROW(scripted.validate_policy(), Error);
  BackendConfig negative = config_with(-1);
  EXPECT_THROW(negative.validate_policy(), Error);
}

TEST(BackendConfig, JsonRoundTripKeepsKeyOutOfStorage) {
  BackendConfig c;
  c.endpoint = "http://x/v1";
  c.model_name = "gpt";
  c.api_key_env = "MY_KEY";
  const Json j = to_json(c);
  EXPECT_EQ(j.at("api_key_env"), "MY_KEY");
  EXPECT_FALSE(j.contains("api_key"));
  const BackendConfig back = backend_config_from_json(j);
  EXPECT_EQ(back.model_name, "gpt");
  EXPECT_EQ(back.api_key_env, "MY_KEY");
  EXPECT_THROW(backend_config_from_json(Json{{"api_key", "sk-secret"}}), Error);
}

TEST(Client, RetriesTransientFailures) {
  auto backend = std::make_shared<FlakyChat>(2, true);
  ChatClient client(backend, config_with(2));
  EXPECT_EQ(client.ask(qa(), "p").text, "ok:p");
  EXPECT_EQ(backend->calls.load(), 3);
  EXPECT_EQ(client.stats().retries, 2u);
  EXPECT_EQ(client.stats().requests, 3u);
}

TEST(Client, GivesUpAfterRetryBudget) {
  auto backend = std::make_shared<FlakyChat>(5, true);
  ChatClient client(backend, config_with(1));
  EXPECT_THROW(client.ask(qa(), "p"), Error);
  EXPECT_EQ(backend->calls.load(), 2);
}

TEST(Client, PermanentFailuresAreNotRetried) {
  auto backend = std::make_shared<FlakyChat>(1, false);
  ChatClient client(backend, config_with(3));
  EXPECT_THROW(client.ask(qa(), "p"), Error);
  EXPECT_EQ(backend->calls.load(), 1);
}

TEST(Client, ScriptExhaustionIsFinal) {
  auto backend = std::make_shared<mocklab::ScriptedChatBackend>(std::vector<std::string>{"a", "b"});
  ChatClient client(backend, config_with(3));
  client.ask(qa(), "1");
  client.ask(qa(), "2");
  try {
    client.ask(qa(), "3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScriptExhausted);
    EXPECT_TRUE(e.is_backend_failure());
  }
  EXPECT_EQ(backend->calls(), 3u);
}

TEST(Cache, WarmCacheAnswersWithoutBackend) {
  TempDir dir;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  auto backend = std::make_shared<FlakyChat>(0, false);
  {
    ChatClient client(backend, config_with(0), cache);
    EXPECT_FALSE(client.ask(qa(), "p").from_cache);
    EXPECT_TRUE(client.ask(qa(), "p").from_cache);
    EXPECT_FALSE(client.ask(qa(), "p", 2).from_cache);  // attempt is part of the key
  }
  ChatClient fresh(backend, config_with(0), std::make_shared<ResponseCache>(dir.path()));
  const Reply r = fresh.ask(qa(), "p");
  EXPECT_TRUE(r.from_cache);
  EXPECT_EQ(r.text, "ok:p");
  EXPECT_EQ(backend->calls.load(), 2);
  EXPECT_EQ(fresh.stats().cache_hits, 1u);
  EXPECT_EQ(fresh.stats().requests, 0u);
}

TEST(Cache, ModelTakesPartInKey) {
  TempDir dir;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  auto backend = std::make_shared<FlakyChat>(0, false);
  ChatClient a(backend, config_with(0), cache);
  BackendConfig other = config_with(0);
  other.model_name = "m2";
  ChatClient b(backend, other, cache);
  a.ask(qa(), "p");
  EXPECT_FALSE(b.ask(qa(), "p").from_cache);
}

TEST(Cache, RecordsRoundTripAndAreNotOverwritten) {
  TempDir dir;
  ResponseCache cache(dir.path());
  BackendTranscript t;
  t.request_hash = request_hash(Json{{"k", 1}});
  t.raw_response = "first";
  t.attempt = 2;
  cache.store(t);
  t.raw_response = "second";
  cache.store(t);
  const auto back = cache.lookup(t.request_hash);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->raw_response, "first");
  EXPECT_EQ(back->attempt, 2);
  EXPECT_FALSE(cache.lookup(request_hash(Json{{"k", 2}})).has_value());
  EXPECT_TRUE(std::filesystem::exists(dir.path() / t.request_hash.substr(0, 2) /
                                      (t.request_hash + ".json")));
}

TEST(RequestHash, CanonicalAndContentSensitive) {
  EXPECT_EQ(request_hash(Json{{"a", 1}, {"b", 2}}), request_hash(Json{{"a", 1}, {"b", 2}}));
  EXPECT_NE(request_hash(Json{{"a", 1}}), request_hash(Json{{"a", 2}}));
  EXPECT_EQ(request_hash(Json{{"a", 1}}).size(), 64u);
}

TEST(Gate, CapsRequestsInFlight) {
  BackendConfig c = config_with(0);
  c.parallelism = 2;
  ChatClient client(std::make_shared<SlowChat>(), c);
  parallel_for(12, 8, [&](std::size_t i) { client.ask(qa(), "p" + std::to_string(i)); });
  EXPECT_LE(client.max_in_flight_observed(), 2);
  EXPECT_GE(client.max_in_flight_observed(), 1);
  EXPECT_EQ(client.stats().requests, 12u);
}

TEST(Gate, RateLimitSpacesRequests) {
  RequestGate gate(4, 5.0);  // burst of five, then one per 0.2 s
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) gate.acquire();
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_GE(elapsed, 0.15);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  std::atomic<int> ran{0};
  try {
    parallel_for(20, 4, [&](std::size_t i) {
      ++ran;
      if (i == 7 || i == 13) throw Error(ErrorCode::kBackendError, "x", {}, i);
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.index(), 7u);
  }
  EXPECT_EQ(ran.load(), 20);
}

}  // namespace
}  // namespace fallacious
