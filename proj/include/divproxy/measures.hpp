// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Set-based diversity measures over a batch of m sampled answers, and the
// majority vote used for self-consistency.
//
// Each answer is viewed as a set of canonical elements. For an element e the
// element probability is the fraction of answers containing it,
//
//     P(e) = (1/m) * |{ i : e in a_i }|,
//
// from which entropy H = -sum P(e) ln P(e) and Gini impurity
// G = 1 - sum P(e)^2 are computed. Because answers may hold several elements,
// the probabilities need not sum to one and the literal Gini value can be
// negative; GiniVariant::normalized rescales the probabilities first.
//
// Everything here is a pure function of its arguments.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace divproxy {

struct Element {
  std::string value;

  auto operator<=>(const Element&) const = default;
};

// Recorded when a response has no extractable answer. It is an ordinary
// element, so unparseable responses still count toward diversity.
inline constexpr std::string_view kNoAnswerToken = "<no-answer>";

struct Answer {
  std::set<Element> elements;
  std::string raw_text;
  std::optional<std::string> reasoning_text;

  bool same_elements(const Answer& other) const { return elements == other.elements; }
  bool is_no_answer() const;
};

Answer make_answer(std::initializer_list<std::string_view> elements, std::string raw_text = {});
Answer no_answer(std::string raw_text = {});

// Canonical rendering: element values in sorted order joined by ", ".
std::string render_elements(const Answer& answer);

struct SampleBatch {
  std::vector<Answer> samples;
  std::string prompt_id;
  std::string question_id;
  double temperature = 0.0;

  std::size_t size() const noexcept { return samples.size(); }
};

struct ElementDistribution {
  std::map<Element, double> probs;
  std::size_t m = 0;
};

enum class LogBase { nat, bit };
enum class GiniVariant { literal, normalized };
enum class DistanceMetric { euclidean, cosine };
enum class EmbedTarget { answer_only, reasoning_and_answer };

struct MajorityVote {
  Answer answer;
  double share = 0.0;
};

struct DiversityReport {
  double entropy = 0.0;
  double gini = 0.0;
  std::optional<double> centroid_distance;
  Answer majority_answer;
  double majority_share = 0.0;
};

struct DiversityOptions {
  LogBase log_base = LogBase::nat;
  GiniVariant gini = GiniVariant::literal;
  DistanceMetric metric = DistanceMetric::euclidean;
  EmbedTarget target = EmbedTarget::answer_only;
};

class Embedder;

// Throws UsageError on an empty batch.
ElementDistribution element_distribution(const SampleBatch& batch);

double entropy(const ElementDistribution& dist, LogBase base = LogBase::nat);

double gini(const ElementDistribution& dist, GiniVariant variant = GiniVariant::literal);

// Most frequent answer under element-set equality. Ties go to the answer
// whose first occurrence is earliest in batch order.
MajorityVote majority_vote(const SampleBatch& batch);

// Bundles the measures above plus mean centroid distance when an embedder is
// given. Embedder failures propagate.
DiversityReport diversity_report(const SampleBatch& batch, const Embedder* embedder,
                                 const DiversityOptions& options = {});

std::string_view to_string(LogBase b);
std::string_view to_string(GiniVariant g);
std::string_view to_string(DistanceMetric d);
std::string_view to_string(EmbedTarget t);
LogBase parse_log_base(std::string_view s);
GiniVariant parse_gini_variant(std::string_view s);
DistanceMetric parse_distance_metric(std::string_view s);
EmbedTarget parse_embed_target(std::string_view s);

}  // namespace divproxy
