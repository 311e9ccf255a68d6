// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/measures.hpp"

#include <cmath>
#include <numbers>

#include "divproxy/embedding.hpp"
#include "divproxy/error.hpp"

namespace divproxy {

bool Answer::is_no_answer() const {
  return elements.size() == 1 && elements.begin()->value == kNoAnswerToken;
}

Answer make_answer(std::initializer_list<std::string_view> elements, std::string raw_text) {
  Answer a;
  for (auto e : elements) a.elements.insert(Element{std::string(e)});
  a.raw_text = std::move(raw_text);
  return a;
}

Answer no_answer(std::string raw_text) {
  return make_answer({kNoAnswerToken}, std::move(raw_text));
}

std::string render_elements(const Answer& answer) {
  std::string out;
  for (const auto& e : answer.elements) {
    if (!out.empty()) out += ", ";
    out += e.value;
  }
  return out;
}

ElementDistribution element_distribution(const SampleBatch& batch) {
  if (batch.samples.empty()) throw UsageError("element_distribution: empty batch");
  std::map<Element, std::size_t> counts;
  for (const auto& a : batch.samples)
    for (const auto& e : a.elements) ++counts[e];

  ElementDistribution dist;
  dist.m = batch.samples.size();
  const double m = static_cast<double>(dist.m);
  for (const auto& [e, k] : counts) dist.probs.emplace(e, static_cast<double>(k) / m);
  return dist;
}

double entropy(const ElementDistribution& dist, LogBase base) {
  double h = 0.0;
  for (const auto& [e, p] : dist.probs) {
    if (p <= 0.0 || p >= 1.0) continue;
    h -= p * std::log(p);
  }
  if (base == LogBase::bit) h /= std::numbers::ln2;
  return h;
}

double gini(const ElementDistribution& dist, GiniVariant variant) {
  double scale = 1.0;
  if (variant == GiniVariant::normalized) {
    double total = 0.0;
    for (const auto& [e, p] : dist.probs) total += p;
    if (total > 0.0) scale = 1.0 / total;
  }
  double sum_sq = 0.0;
  for (const auto& [e, p] : dist.probs) {
    const double q = p * scale;
    sum_sq += q * q;
  }
  return 1.0 - sum_sq;
}

MajorityVote majority_vote(const SampleBatch& batch) {
  if (batch.samples.empty()) throw UsageError("majority_vote: empty batch");
  // Equivalence classes in order of first occurrence.
  std::map<std::set<Element>, std::size_t> class_of;
  std::vector<std::size_t> first_index;
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    auto [it, inserted] = class_of.try_emplace(batch.samples[i].elements, counts.size());
    if (inserted) {
      first_index.push_back(i);
      counts.push_back(0);
    }
    ++counts[it->second];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[best]) best = c;

  return MajorityVote{batch.samples[first_index[best]],
                      static_cast<double>(counts[best]) / static_cast<double>(batch.samples.size())};
}

DiversityReport diversity_report(const SampleBatch& batch, const Embedder* embedder,
                                 const DiversityOptions& options) {
  const auto dist = element_distribution(batch);
  DiversityReport r;
  r.entropy = entropy(dist, options.log_base);
  r.gini = gini(dist, options.gini);
  auto vote = majority_vote(batch);
  r.majority_answer = std::move(vote.answer);
  r.majority_share = vote.share;
  if (embedder != nullptr) {
    const auto vectors = embed_batch(*embedder, batch, options.target);
    r.centroid_distance = mean_centroid_distance(vectors, options.metric);
  }
  return r;
}

std::string_view to_string(LogBase b) { return b == LogBase::nat ? "nat" : "bit"; }
std::string_view to_string(GiniVariant g) {
  return g == GiniVariant::literal ? "literal" : "normalized";
}
std::string_view to_string(DistanceMetric d) {
  return d == DistanceMetric::euclidean ? "euclidean" : "cosine";
}
std::string_view to_string(EmbedTarget t) {
  return t == EmbedTarget::answer_only ? "answer_only" : "reasoning_and_answer";
}

LogBase parse_log_base(std::string_view s) {
  if (s == "nat") return LogBase::nat;
  if (s == "bit") return LogBase::bit;
  throw UsageError("unknown log base '" + std::string(s) + "' (expected nat|bit)");
}
GiniVariant parse_gini_variant(std::string_view s) {
  if (s == "literal") return GiniVariant::literal;
  if (s == "normalized") return GiniVariant::normalized;
  throw UsageError("unknown gini variant '" + std::string(s) + "' (expected literal|normalized)");
}
DistanceMetric parse_distance_metric(std::string_view s) {
  if (s == "euclidean") return DistanceMetric::euclidean;
  if (s == "cosine") return DistanceMetric::cosine;
  throw UsageError("unknown distance metric '" + std::string(s) + "' (expected euclidean|cosine)");
}
EmbedTarget parse_embed_target(std::string_view s) {
  if (s == "answer_only") return EmbedTarget::answer_only;
  if (s == "reasoning_and_answer") return EmbedTarget::reasoning_and_answer;
  throw UsageError("unknown embed target '" + std::string(s) +
                   "' (expected answer_only|reasoning_and_answer)");
}

}  // namespace divproxy
