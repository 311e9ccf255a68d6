// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Vector-based diversity: answers are embedded into R^D and the measure is the
// mean distance from each embedding to the batch centroid.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "divproxy/http.hpp"
#include "divproxy/measures.hpp"

namespace divproxy {

struct EmbeddingVector {
  std::vector<double> components;

  std::size_t dim() const noexcept { return components.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

class Embedder {
 public:
  virtual ~Embedder() = default;

  // One vector per text, in input order. Implementations must return the
  // same vector for the same text within one run.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const = 0;

  virtual std::string kind() const = 0;
};

// Hermetic embedder: each text is hashed with the seed and expanded into
// `dim` pseudo-random components in [-1, 1].
class DeterministicEmbedder final : public Embedder {
 public:
  explicit DeterministicEmbedder(std::size_t dim = 8, std::uint64_t seed = 0);

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
  std::string kind() const override { return "deterministic_test"; }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

struct HttpEmbedderConfig {
  std::string url;  // full endpoint URL, e.g. http://host/v1/embeddings
  std::string model;
  std::string api_key;
  std::size_t max_concurrency = 4;
  std::size_t batch_size = 64;
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
};

// OpenAI-embeddings-compatible client. Every distinct text is requested at
// most once per instance; results are cached for the life of the object.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig config);

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
  std::string kind() const override { return "http_endpoint"; }

  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  HttpEmbedderConfig config_;
  HttpEndpoint endpoint_;
  mutable std::shared_mutex cache_mutex_;
  mutable std::map<std::string, EmbeddingVector> cache_;
  mutable std::atomic<std::size_t> requests_{0};
};

// The text that represents each sample under the chosen target:
// answer_only embeds the canonical element rendering, reasoning_and_answer
// embeds the full raw response.
std::string embedding_text(const Answer& answer, EmbedTarget target);

// Throws ProtocolError when returned vectors disagree in dimension or hold
// non-finite components.
std::vector<EmbeddingVector> embed_batch(const Embedder& embedder, const SampleBatch& batch,
                                         EmbedTarget target = EmbedTarget::answer_only);

double distance(const EmbeddingVector& a, const EmbeddingVector& b, DistanceMetric metric);

// Component-wise arithmetic mean. UsageError on empty input or mixed dims.
EmbeddingVector centroid(std::span<const EmbeddingVector> vectors);

// (1/m) * sum_i d(v_i, centroid). Cosine with a zero vector (input or
// centroid) raises DegenerateInputError.
double mean_centroid_distance(std::span<const EmbeddingVector> vectors,
                              DistanceMetric metric = DistanceMetric::euclidean);

}  // namespace divproxy
