// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Sources of sampled responses: an OpenAI-compatible chat client, a
// statistical simulator, and a record/replay cache that wraps either.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "divproxy/answers.hpp"
#include "divproxy/embedding.hpp"
#include "divproxy/http.hpp"
#include "divproxy/measures.hpp"
#include "divproxy/prompt.hpp"

namespace divproxy {

struct SamplingConfig {
  std::size_t m = 20;
  double temperature = 0.7;
  std::size_t max_concurrency = 1;
  RetryPolicy retry;

  // UsageError on m == 0, temperature outside [0, 2], or max_concurrency == 0.
  void validate() const;
};

struct Query {
  std::string id;
  std::string text;
};

struct ChatRequest {
  std::string prompt_id;
  bool cot = false;
  std::string prompt_text;  // fully rendered prompt including the question
  std::string question_id;
  std::string question_text;
  double temperature = 0.0;
  std::size_t sample_index = 0;
};

// Implementations must be safe to call from several threads at once.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  virtual std::string model() const = 0;
  virtual std::string complete(const ChatRequest& request) const = 0;
};

struct ChatProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo";
  std::string api_key;
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
};

// POST {base_url}/chat/completions with a single user message.
class ChatProvider final : public Provider {
 public:
  explicit ChatProvider(ChatProviderConfig config);

  std::string id() const override { return "openai_chat"; }
  std::string model() const override { return config_.model; }
  std::string complete(const ChatRequest& request) const override;

  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  ChatProviderConfig config_;
  HttpEndpoint endpoint_;
  mutable std::atomic<std::size_t> requests_{0};
};

struct SimulatorConfig {
  double correct_prob = 0.7;
  int distractor_count = 3;
  double noanswer_prob = 0.0;
  std::uint64_t seed = 0;

  // UsageError unless probabilities are in range, correct_prob +
  // noanswer_prob <= 1, and distractor_count >= 1.
  void validate() const;
};

// Text the simulator emits for a refusal; normalizes to the no-answer sentinel.
inline constexpr std::string_view kSimulatedRefusal = "???";

// The k-th fixed wrong answer for a question (k in [0, distractor_count)).
Answer simulated_distractor(const GroundTruth& truth, const TaskType& task, int k);

// One simulated completion. With probability correct_prob the true answer,
// with probability noanswer_prob a refusal, otherwise one of the
// distractor_count fixed distractors chosen uniformly. Deterministic in
// (cfg.seed, draw_index).
std::string simulate_response(const SimulatorConfig& cfg, const GroundTruth& truth,
                              const TaskType& task, std::uint64_t draw_index);

// Simulated question-answering model. Questions must be registered with their
// ground truth; correct_prob can be overridden per prompt or per question,
// and chain-of-thought prompts add cot_delta to it.
class SimulatedProvider final : public Provider {
 public:
  explicit SimulatedProvider(SimulatorConfig config);

  void add_question(const std::string& question_text, GroundTruth truth, TaskType task,
                    std::optional<double> correct_prob = std::nullopt);
  void set_prompt_correct_prob(const std::string& prompt_id, double correct_prob);
  void set_cot_delta(double delta);

  std::string id() const override { return "simulator"; }
  std::string model() const override { return "simulator-v1"; }
  std::string complete(const ChatRequest& request) const override;

  // Effective correct_prob for a request, after overrides and cot_delta.
  double correct_prob_for(const ChatRequest& request) const;

  // Draw index used for a request: a stable hash of the prompt, question,
  // temperature and sample index, so results do not depend on call order.
  static std::uint64_t draw_index(const ChatRequest& request);

 private:
  struct Entry {
    GroundTruth truth;
    TaskType task;
    std::optional<double> correct_prob;
  };
  SimulatorConfig config_;
  double cot_delta_ = 0.0;
  std::unordered_map<std::string, Entry> questions_;
  std::unordered_map<std::string, double> prompt_probs_;
};

struct CacheRecord {
  std::string key;
  std::string response_text;
  std::string timestamp;
};

// Hash of (provider id, model, prompt text, question text, temperature,
// sample index).
std::string cache_key(const std::string& provider_id, const std::string& model,
                      const ChatRequest& request);

// Append-only JSONL store of CacheRecords. Concurrent lookups, serialized
// appends. Existing records are loaded at construction; a malformed line
// raises ParseError naming the line.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& key) const;
  // Keys are unique: appending a key that is already present is a no-op.
  void append(const std::string& key, const std::string& response_text);
  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> records_;
};

enum class CacheMode { read_write, replay_only };

// Serves completions from the cache; misses go to the inner provider and are
// recorded (read_write) or raise CacheMissError (replay_only). The inner
// provider may be null in replay_only mode.
class CachingProvider final : public Provider {
 public:
  CachingProvider(const Provider* inner, ResponseCache& cache, CacheMode mode,
                  std::string provider_id = {}, std::string model = {});

  std::string id() const override { return id_; }
  std::string model() const override { return model_; }
  std::string complete(const ChatRequest& request) const override;

  std::size_t miss_count() const noexcept { return misses_.load(); }

 private:
  const Provider* inner_;
  ResponseCache& cache_;
  CacheMode mode_;
  std::string id_;
  std::string model_;
  mutable std::atomic<std::size_t> misses_{0};
};

// Embedder that stores vectors in a ResponseCache (as JSON arrays keyed by
// kind, model and text), so replay-only runs need no embedding endpoint.
class CachingEmbedder final : public Embedder {
 public:
  CachingEmbedder(const Embedder* inner, ResponseCache& cache, CacheMode mode, std::string model);

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
  std::string kind() const override { return kind_; }

 private:
  std::string key(const std::string& text) const;
  const Embedder* inner_;
  ResponseCache& cache_;
  CacheMode mode_;
  std::string model_;
  std::string kind_;
};

// m raw completions for one (prompt, question), in sample-index order.
// Provider failures are rethrown with the failing sample index attached.
std::vector<std::string> sample_raw(const Provider& provider, const PromptSpec& prompt,
                                    const Query& question, const SamplingConfig& cfg);

// sample_raw followed by normalization under the task.
SampleBatch sample(const Provider& provider, const PromptSpec& prompt, const Query& question,
                   const TaskType& task, const SamplingConfig& cfg, const AnswerCues& cues = {});

}  // namespace divproxy
