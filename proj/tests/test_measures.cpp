// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <doctest.h>

#include "divproxy/error.hpp"
#include "divproxy/measures.hpp"

using namespace divproxy;

namespace {

SampleBatch batch_of(std::initializer_list<std::initializer_list<std::string_view>> answers) {
  SampleBatch b;
  for (const auto& a : answers) b.samples.push_back(make_answer(a));
  return b;
}

// Independent oracle: count containment per element by scanning raw strings.
std::map<std::string, double> oracle_distribution(const std::vector<std::vector<std::string>>& answers) {
  std::map<std::string, double> counts;
  for (const auto& a : answers) {
    std::set<std::string> seen(a.begin(), a.end());
    for (const auto& e : seen) counts[e] += 1.0;
  }
  for (auto& [e, c] : counts) c /= static_cast<double>(answers.size());
  return counts;
}

}  // namespace

TEST_CASE("element_distribution: worked examples") {
  auto d = element_distribution(batch_of({{"7"}, {"7"}, {"7"}, {"7"}}));
  CHECK(d.probs.size() == 1);
  CHECK(d.probs.at(Element{"7"}) == 1.0);

  d = element_distribution(batch_of({{"7"}, {"7"}, {"3"}, {"3"}}));
  CHECK(d.probs.at(Element{"7"}) == 0.5);
  CHECK(d.probs.at(Element{"3"}) == 0.5);

  d = element_distribution(batch_of({{"1", "2"}, {"1", "3"}}));
  CHECK(d.m == 2);
  CHECK(d.probs.at(Element{"1"}) == 1.0);
  CHECK(d.probs.at(Element{"2"}) == 0.5);
  CHECK(d.probs.at(Element{"3"}) == 0.5);
}

TEST_CASE("element_distribution: empty batch is a usage error") {
  CHECK_THROWS_AS(element_distribution(SampleBatch{}), UsageError);
}

TEST_CASE("entropy and gini: worked examples") {
  const auto one = element_distribution(batch_of({{"7"}, {"7"}, {"7"}, {"7"}}));
  const auto half = element_distribution(batch_of({{"7"}, {"7"}, {"3"}, {"3"}}));
  const auto multi = element_distribution(batch_of({{"1", "2"}, {"1", "3"}}));
  CHECK(entropy(one) == 0.0);
  CHECK(entropy(half) == doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(entropy(multi) == doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(entropy(half, LogBase::bit) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(gini(one) == 0.0);
  CHECK(gini(half) == 0.5);
  CHECK(gini(multi) == -0.5);
}

TEST_CASE("gini: normalized variant stays in [0, 1]") {
  const auto multi = element_distribution(batch_of({{"1", "2"}, {"1", "3"}}));
  const double g = gini(multi, GiniVariant::normalized);
  CHECK(g >= 0.0);
  CHECK(g <= 1.0);
  const auto half = element_distribution(batch_of({{"7"}, {"7"}, {"3"}, {"3"}}));
  // Singleton answers: both variants agree.
  CHECK(gini(half, GiniVariant::normalized) == doctest::Approx(0.5));
}

TEST_CASE("majority_vote: worked examples") {
  auto v = majority_vote(batch_of({{"A"}, {"A"}, {"B"}}));
  CHECK(render_elements(v.answer) == "A");
  CHECK(v.share == doctest::Approx(2.0 / 3.0));

  v = majority_vote(batch_of({{"A"}, {"B"}}));
  CHECK(render_elements(v.answer) == "A");
  CHECK(v.share == 0.5);

  v = majority_vote(batch_of({{"B"}, {"A"}}));
  CHECK(render_elements(v.answer) == "B");

  v = majority_vote(batch_of({{"1", "2"}, {"1", "2"}, {"1", "3"}}));
  CHECK(render_elements(v.answer) == "1, 2");
  CHECK(v.share == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("diversity_report: worked examples") {
  auto r = diversity_report(batch_of({{"7"}, {"7"}, {"3"}, {"3"}}), nullptr);
  CHECK(r.entropy == doctest::Approx(std::log(2.0)));
  CHECK(r.gini == 0.5);
  CHECK_FALSE(r.centroid_distance.has_value());

  r = diversity_report(batch_of({{"x"}}), nullptr);
  CHECK(r.majority_share == 1.0);
  CHECK(r.entropy == 0.0);
}

TEST_CASE("no-answer sentinel counts as an ordinary element") {
  SampleBatch b;
  b.samples = {no_answer("???"), no_answer(""), make_answer({"A"})};
  auto d = element_distribution(b);
  CHECK(d.probs.at(Element{std::string(kNoAnswerToken)}) == doctest::Approx(2.0 / 3.0));
  CHECK(majority_vote(b).answer.is_no_answer());
}

TEST_CASE("property: distribution, entropy and gini match a brute-force oracle") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> universe = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 8);
    std::vector<std::vector<std::string>> raw;
    SampleBatch b;
    for (int i = 0; i < m; ++i) {
      std::vector<std::string> a;
      for (const auto& u : universe)
        if (rng() % 3 == 0) a.push_back(u);
      if (a.empty()) a.push_back(universe[rng() % universe.size()]);
      Answer ans;
      for (const auto& e : a) ans.elements.insert(Element{e});
      b.samples.push_back(ans);
      raw.push_back(a);
    }
    const auto oracle = oracle_distribution(raw);
    const auto d = element_distribution(b);
    REQUIRE(d.probs.size() == oracle.size());
    double h = 0.0, g = 1.0;
    for (const auto& [e, p] : oracle) {
      CHECK(d.probs.at(Element{e}) == doctest::Approx(p).epsilon(1e-15));
      if (p > 0.0 && p < 1.0) h -= p * std::log(p);
      g -= p * p;
    }
    CHECK(std::abs(entropy(d) - h) <= 1e-12);
    CHECK(std::abs(gini(d) - g) <= 1e-12);
    CHECK(entropy(d) >= 0.0);
  }
}

TEST_CASE("property: entropy is zero exactly when every probability is 0 or 1") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    SampleBatch b;
    const int m = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < m; ++i) b.samples.push_back(make_answer({rng() % 2 ? "x" : "y"}));
    const auto d = element_distribution(b);
    const bool degenerate =
        std::all_of(d.probs.begin(), d.probs.end(), [](const auto& kv) { return kv.second == 1.0; });
    CHECK((entropy(d) == 0.0) == degenerate);
  }
}

TEST_CASE("property: gini over singleton answers is bounded and peaks at balanced counts") {
  // Every composition of m into k labeled parts (zeros allowed), m <= 8, k <= 4.
  for (int k = 1; k <= 4; ++k) {
    for (int m = 1; m <= 8; ++m) {
      double best = -1.0;
      double best_balanced = -1.0;
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      std::function<void(int, int)> rec = [&](int idx, int left) {
        if (idx == k - 1) {
          counts[static_cast<std::size_t>(idx)] = left;
          SampleBatch b;
          for (int e = 0; e < k; ++e)
            for (int c = 0; c < counts[static_cast<std::size_t>(e)]; ++c)
              b.samples.push_back(make_answer({std::string(1, static_cast<char>('a' + e))}));
          const double g = gini(element_distribution(b));
          CHECK(g >= -1e-15);
          CHECK(g <= 1.0 - 1.0 / k + 1e-12);
          best = std::max(best, g);
          const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
          if (*mx - *mn <= 1) best_balanced = std::max(best_balanced, g);
          return;
        }
        for (int c = 0; c <= left; ++c) {
          counts[static_cast<std::size_t>(idx)] = c;
          rec(idx + 1, left - c);
        }
      };
      rec(0, m);
      CHECK(best_balanced == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: measures are permutation invariant") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    SampleBatch b;
    const int m = 2 + static_cast<int>(rng() % 7);
    for (int i = 0; i < m; ++i) {
      Answer a;
      a.elements.insert(Element{std::to_string(rng() % 3)});
      if (rng() % 4 == 0) a.elements.insert(Element{std::to_string(rng() % 3)});
      b.samples.push_back(a);
    }
    auto shuffled = b;
    std::shuffle(shuffled.samples.begin(), shuffled.samples.end(), rng);
    const auto d1 = element_distribution(b);
    const auto d2 = element_distribution(shuffled);
    CHECK(d1.probs == d2.probs);
    CHECK(entropy(d1) == entropy(d2));
    CHECK(gini(d1) == gini(d2));

    // Without a tie, the majority answer is order independent.
    std::map<std::set<Element>, int> classes;
    for (const auto& s : b.samples) ++classes[s.elements];
    int top = 0, top_count = 0;
    for (const auto& [k, c] : classes) {
      if (c > top) {
        top = c;
        top_count = 1;
      } else if (c == top) {
        ++top_count;
      }
    }
    if (top_count == 1) CHECK(majority_vote(b).answer.same_elements(majority_vote(shuffled).answer));
  }
}

TEST_CASE("enum string round trips") {
  CHECK(parse_log_base(to_string(LogBase::bit)) == LogBase::bit);
  CHECK(parse_gini_variant(to_string(GiniVariant::normalized)) == GiniVariant::normalized);
  CHECK(parse_distance_metric(to_string(DistanceMetric::cosine)) == DistanceMetric::cosine);
  CHECK(parse_embed_target(to_string(EmbedTarget::reasoning_and_answer)) == EmbedTarget::reasoning_and_answer);
  CHECK_THROWS_AS(parse_log_base("decibel"), UsageError);
}
