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

// Deterministic in-process backends for tests and desk-scale runs.
//
// Scripted backends replay canned replies in order. Oracle backends answer
// from a GoldFactTable, which fixes for every sample the questions a
// generator "asks" and the label each answering role gives them, so the
// expected scores of a whole run can be counted by hand.
//
// Gold fact table file (JSON):
//
//   {"format": "fallacious-gold-facts", "version": 1,
//    "samples": [
//      {"sample_id": "s1",
//       "reference_based": [{"question": "...?", "seed": "yes",
//                            "reference": "yes", "generated": "no"}, ...],
//       "reference_free":  [{"question": "...?", "document": "no",
//                            "image": "yes"}, ...],
//       "bertscore": 0.8, "clipscore": 0.3}]}
//
// Both framework lists and both external scores are optional per sample.

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "fallacious/backend.hpp"
#include "fallacious/core.hpp"

namespace httplib {
class Server;
}

namespace fallacious::mocklab {

/// Lowercased, whitespace-collapsed, trimmed question text.
std::string canonical_question(std::string_view text);
std::string question_key(std::string_view text);

struct GoldQuestion {
  std::string text;
  std::optional<AnswerLabel> seed;
  /// Label per role; reference-based entries fill reference/generated,
  /// reference-free entries fill document/image.
  std::map<AnswerSource, AnswerLabel> labels;
};

struct GoldSample {
  std::string sample_id;
  std::vector<GoldQuestion> reference_based;
  std::vector<GoldQuestion> reference_free;
  std::optional<double> bertscore;
  std::optional<double> clipscore;
};

class GoldFactTable {
 public:
  static constexpr int kVersion = 1;

  /// Rejects unknown versions, NotProvided image labels and question keys
  /// that map to two different labels for the same role.
  static GoldFactTable from_json(const Json& j);
  static GoldFactTable load(const std::filesystem::path& path);

  const std::vector<GoldSample>& samples() const noexcept { return samples_; }
  const GoldSample& sample(const std::string& sample_id) const;

  /// kUnknownQuestion when the role has no label for this question.
  AnswerLabel lookup(AnswerSource role, std::string_view question) const;
  AnswerLabel lookup(const std::string& sample_id, Framework framework, std::size_t index,
                     AnswerSource role) const;

  /// The question list a well-behaved generator would reply with, in the
  /// reply format of the corresponding prompt.
  std::string qgen_reply(const std::string& sample_id, Framework framework) const;

 private:
  std::vector<GoldSample> samples_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::pair<AnswerSource, std::string>, AnswerLabel> by_key_;
};

/// Replays `script` in order, then throws kScriptExhausted.
class ScriptedChatBackend : public ChatBackend {
 public:
  explicit ScriptedChatBackend(std::vector<std::string> script);
  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }
  std::vector<ChatRequest> requests() const;

 private:
  std::vector<std::string> script_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mu_;
  std::vector<ChatRequest> requests_;
};

class ScriptedVqaBackend : public VqaBackend {
 public:
  explicit ScriptedVqaBackend(std::vector<std::string> script);
  std::string answer(std::span<const std::byte> image, std::string_view question) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::vector<std::string> script_;
  std::atomic<std::size_t> calls_{0};
};

class ScriptedScoringBackend : public ScoringBackend {
 public:
  explicit ScriptedScoringBackend(std::vector<double> script);
  double score(const ScoringRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::vector<double> script_;
  std::atomic<std::size_t> calls_{0};
};

/// Question generator that recognises the exact prompts built for the
/// corpus samples and replies with the table's question lists.
class OracleQGenBackend : public ChatBackend {
 public:
  /// `reference_conditioned` must match the QGenConfig used by the caller.
  OracleQGenBackend(std::shared_ptr<const GoldFactTable> table,
                    const std::vector<EvalSample>& corpus, bool reference_conditioned = false);
  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const GoldFactTable> table_;
  std::map<std::string, std::string> replies_;  // prompt hash -> reply
  std::atomic<std::size_t> calls_{0};
};

/// Answers QA prompts for one role by extracting the embedded question and
/// looking it up. Binary prompts get "1"/"0", ternary prompts
/// "yes"/"no"/"not provided".
class OracleQaBackend : public ChatBackend {
 public:
  OracleQaBackend(std::shared_ptr<const GoldFactTable> table, AnswerSource role);
  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const GoldFactTable> table_;
  AnswerSource role_;
  std::atomic<std::size_t> calls_{0};
};

/// Routes each QA prompt to the role whose context it embeds: the sample's
/// reference summary, generated summary or document. Needed when one chat
/// backend serves every text role, as behind the CLI or the mock server.
class OracleTextBackend : public ChatBackend {
 public:
  OracleTextBackend(std::shared_ptr<const GoldFactTable> table,
                    const std::vector<EvalSample>& corpus);
  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const GoldFactTable> table_;
  std::multimap<std::string, AnswerSource> roles_;  // context hash -> roles
  std::atomic<std::size_t> calls_{0};
};

/// VQA oracle over the image role. The image must be present and look
/// decodable even though its content is not consulted.
class OracleVqaBackend : public VqaBackend {
 public:
  explicit OracleVqaBackend(std::shared_ptr<const GoldFactTable> table);
  std::string answer(std::span<const std::byte> image, std::string_view question) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const GoldFactTable> table_;
  std::atomic<std::size_t> calls_{0};
};

/// Replies with the table's bertscore/clipscore for the sample whose
/// generated summary is the request candidate.
class OracleScoringBackend : public ScoringBackend {
 public:
  OracleScoringBackend(std::shared_ptr<const GoldFactTable> table,
                       const std::vector<EvalSample>& corpus);
  double score(const ScoringRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const GoldFactTable> table_;
  std::map<std::string, std::string> by_summary_;  // summary hash -> sample id
  std::atomic<std::size_t> calls_{0};
};

/// Chat backend that dispatches question-generation prompts to one backend
/// and everything else to another, so a single chat endpoint can serve
/// both stages.
class PromptRouter : public ChatBackend {
 public:
  PromptRouter(std::shared_ptr<ChatBackend> qgen, std::shared_ptr<ChatBackend> qa);
  std::string complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<ChatBackend> qgen_;
  std::shared_ptr<ChatBackend> qa_;
};

/// The question embedded in a QA prompt (text after the last
/// " question: "). kUnknownQuestion when there is none.
std::string extract_question(std::string_view prompt);
/// The news context embedded in a QA prompt.
std::string extract_context(std::string_view prompt);

/// Loopback HTTP server exposing the chat, VQA and scoring wire contracts
/// on /v1/chat/completions, /vqa and /score. Routes whose backend is null
/// answer 404.
class MockServer {
 public:
  MockServer(std::shared_ptr<ChatBackend> chat, std::shared_ptr<VqaBackend> vqa,
             std::shared_ptr<ScoringBackend> scoring);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds 127.0.0.1 on `port` (0 picks a free one) and serves on a
  /// background thread. Returns the bound port.
  int start(int port = 0, const std::string& host = "127.0.0.1");
  /// Serves on the calling thread until stop() is called elsewhere.
  void serve_blocking(int port, const std::string& host = "127.0.0.1");
  void stop();
  int port() const noexcept { return port_; }
  std::string base_url() const;
  std::size_t requests_served() const noexcept { return served_.load(); }

 private:
  void install_routes();

  std::shared_ptr<ChatBackend> chat_;
  std::shared_ptr<VqaBackend> vqa_;
  std::shared_ptr<ScoringBackend> scoring_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::string host_;
  std::atomic<std::size_t> served_{0};
};

}  // namespace fallacious::mocklab
