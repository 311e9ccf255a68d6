// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "divproxy/concurrency.hpp"
#include "divproxy/error.hpp"
#include "divproxy/hashing.hpp"

namespace divproxy {

namespace {

void require_same_dims(std::span<const EmbeddingVector> vectors, const char* who) {
  if (vectors.empty()) throw UsageError(std::string(who) + ": empty vector list");
  const auto d = vectors.front().dim();
  if (d == 0) throw UsageError(std::string(who) + ": zero-dimensional vector");
  for (const auto& v : vectors)
    if (v.dim() != d) throw UsageError(std::string(who) + ": vectors differ in dimension");
}

double norm(const EmbeddingVector& v) {
  double s = 0.0;
  for (double x : v.components) s += x * x;
  return std::sqrt(s);
}

}  // namespace

DeterministicEmbedder::DeterministicEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw UsageError("deterministic embedder: dim must be >= 1");
}

std::vector<EmbeddingVector> DeterministicEmbedder::embed(
    std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::uint64_t state = mix_seed({seed_, fnv1a64(text)});
    EmbeddingVector v;
    v.components.resize(dim_);
    for (auto& c : v.components) {
      state = splitmix64(state);
      const double unit = static_cast<double>(state >> 11) * 0x1.0p-53;  // [0, 1)
      c = 2.0 * unit - 1.0;
    }
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config)
    : config_(std::move(config)), endpoint_(HttpEndpoint::parse(config_.url)) {
  if (config_.max_concurrency == 0) throw UsageError("http embedder: max_concurrency must be >= 1");
  if (config_.batch_size == 0) throw UsageError("http embedder: batch_size must be >= 1");
}

std::vector<EmbeddingVector> HttpEmbedder::embed(std::span<const std::string> texts) const {
  std::vector<std::string> missing;
  {
    std::shared_lock lock(cache_mutex_);
    std::set<std::string> seen;
    for (const auto& t : texts)
      if (!cache_.contains(t) && seen.insert(t).second) missing.push_back(t);
  }

  const std::size_t chunks = (missing.size() + config_.batch_size - 1) / config_.batch_size;
  HttpOptions options{config_.api_key, config_.timeout, config_.retry};
  parallel_for_index(chunks, config_.max_concurrency, [&](std::size_t c) {
    const auto first = missing.begin() + static_cast<std::ptrdiff_t>(c * config_.batch_size);
    const auto last =
        missing.begin() +
        static_cast<std::ptrdiff_t>(std::min(missing.size(), (c + 1) * config_.batch_size));
    const std::vector<std::string> inputs(first, last);

    ++requests_;
    const auto reply = post_json(endpoint_, {{"input", inputs}, {"model", config_.model}}, options);
    if (!reply.contains("data") || !reply["data"].is_array() ||
        reply["data"].size() != inputs.size())
      throw ProtocolError("embedding reply from " + endpoint_.url() +
                          " does not carry one 'data' entry per input");

    // Entries are placed by their "index" field when present.
    std::vector<EmbeddingVector> vectors(inputs.size());
    std::vector<bool> filled(inputs.size(), false);
    for (std::size_t k = 0; k < reply["data"].size(); ++k) {
      const auto& item = reply["data"][k];
      if (!item.contains("embedding") || !item["embedding"].is_array())
        throw ProtocolError("embedding reply entry lacks an 'embedding' array");
      std::size_t pos = k;
      if (item.contains("index")) {
        if (!item["index"].is_number_unsigned()) throw ProtocolError("embedding 'index' is not an unsigned integer");
        pos = item["index"].get<std::size_t>();
      }
      if (pos >= inputs.size() || filled[pos]) throw ProtocolError("embedding reply has a bad or repeated index");
      filled[pos] = true;
      for (const auto& x : item["embedding"]) {
        if (!x.is_number()) throw ProtocolError("embedding component is not a number");
        vectors[pos].components.push_back(x.get<double>());
      }
    }
    std::unique_lock lock(cache_mutex_);
    for (std::size_t i = 0; i < inputs.size(); ++i) cache_.emplace(inputs[i], std::move(vectors[i]));
  });

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::shared_lock lock(cache_mutex_);
  for (const auto& t : texts) out.push_back(cache_.at(t));
  return out;
}

std::string embedding_text(const Answer& answer, EmbedTarget target) {
  if (target == EmbedTarget::reasoning_and_answer && !answer.raw_text.empty())
    return answer.raw_text;
  return render_elements(answer);
}

std::vector<EmbeddingVector> embed_batch(const Embedder& embedder, const SampleBatch& batch,
                                         EmbedTarget target) {
  if (batch.samples.empty()) throw UsageError("embed_batch: empty batch");
  std::vector<std::string> texts;
  texts.reserve(batch.samples.size());
  for (const auto& a : batch.samples) texts.push_back(embedding_text(a, target));

  auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size())
    throw ProtocolError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                        std::to_string(texts.size()) + " texts");
  const auto d = vectors.front().dim();
  for (const auto& v : vectors) {
    if (v.dim() != d || d == 0)
      throw ProtocolError("embedder returned vectors of inconsistent dimension");
    for (double x : v.components)
      if (!std::isfinite(x)) throw ProtocolError("embedder returned a non-finite component");
  }
  return vectors;
}

double distance(const EmbeddingVector& a, const EmbeddingVector& b, DistanceMetric metric) {
  if (a.dim() != b.dim()) throw UsageError("distance: vectors differ in dimension");
  if (metric == DistanceMetric::euclidean) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
      const double d = a.components[i] - b.components[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine distance with a zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.components[i] * b.components[i];
  // Rounding can push the similarity slightly past 1.
  return std::max(0.0, 1.0 - dot / (na * nb));
}

EmbeddingVector centroid(std::span<const EmbeddingVector> vectors) {
  require_same_dims(vectors, "centroid");
  // Identical inputs return the shared vector exactly, so zero spread
  // measures as exactly zero.
  if (std::all_of(vectors.begin(), vectors.end(),
                  [&](const EmbeddingVector& v) { return v == vectors.front(); }))
    return vectors.front();
  EmbeddingVector c;
  c.components.assign(vectors.front().dim(), 0.0);
  for (const auto& v : vectors)
    for (std::size_t i = 0; i < v.dim(); ++i) c.components[i] += v.components[i];
  const double m = static_cast<double>(vectors.size());
  for (auto& x : c.components) x /= m;
  return c;
}

double mean_centroid_distance(std::span<const EmbeddingVector> vectors, DistanceMetric metric) {
  const auto c = centroid(vectors);
  double total = 0.0;
  for (const auto& v : vectors) total += distance(v, c, metric);
  return total / static_cast<double>(vectors.size());
}

}  // namespace divproxy
