// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "divproxy/error.hpp"
#include "divproxy/providers.hpp"
#include "mock_server.hpp"

using namespace divproxy;
namespace fs = std::filesystem;

namespace {

TaskType abcd() { return TaskType::multiple_choice({{"A", "a"}, {"B", "b"}, {"C", "c"}, {"D", "d"}}); }

GroundTruth truth_of(std::string_view label) { return GroundTruth{make_answer({label}), std::nullopt}; }

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "divproxy_tests";
  fs::create_directories(dir);
  auto p = dir / name;
  fs::remove(p);
  return p;
}

const PromptSpec kPrompt{"p0", "Answer.", {}, false};

RetryPolicy fast_retry(int attempts = 3) {
  RetryPolicy r;
  r.max_attempts = attempts;
  r.base_backoff = std::chrono::milliseconds(1);
  r.max_backoff = std::chrono::milliseconds(5);
  return r;
}

}  // namespace

TEST_CASE("simulator: degenerate probabilities") {
  SimulatorConfig all_right{1.0, 3, 0.0, 1};
  SimulatedProvider sim(all_right);
  sim.add_question("q", truth_of("B"), abcd());
  SamplingConfig cfg;
  cfg.m = 5;
  auto batch = sample(sim, kPrompt, Query{"q1", "q"}, abcd(), cfg);
  REQUIRE(batch.size() == 5);
  for (const auto& a : batch.samples) CHECK(render_elements(a) == "B");

  SimulatedProvider wrong(SimulatorConfig{0.0, 1, 0.0, 1});
  wrong.add_question("q", truth_of("B"), abcd());
  batch = sample(wrong, kPrompt, Query{"q1", "q"}, abcd(), cfg);
  const auto first = render_elements(batch.samples.front());
  CHECK(first != "B");
  for (const auto& a : batch.samples) CHECK(render_elements(a) == first);
}

TEST_CASE("simulate_response: determinism and Monte Carlo rate") {
  SimulatorConfig cfg{0.7, 3, 0.0, 99};
  const auto t = truth_of("C");
  CHECK(simulate_response(cfg, t, abcd(), 12345) == simulate_response(cfg, t, abcd(), 12345));
  int correct = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    correct += grade(normalize(simulate_response(cfg, t, abcd(), static_cast<std::uint64_t>(i)), abcd()), t, abcd());
  CHECK(std::abs(correct / static_cast<double>(n) - 0.7) <= 0.02);
}

TEST_CASE("simulate_response: refusals normalize to no-answer") {
  SimulatorConfig cfg{0.0, 2, 0.999999, 4};
  const auto text = simulate_response(cfg, truth_of("A"), abcd(), 3);
  CHECK(text == kSimulatedRefusal);
  CHECK(normalize(text, abcd()).is_no_answer());
}

TEST_CASE("simulator: distractors are wrong for every task kind") {
  const GroundTruth num{make_answer({"3", "4.5"}), std::nullopt};
  const GroundTruth word{make_answer({"nh"}), std::nullopt};
  for (int k = 0; k < 5; ++k) {
    CHECK_FALSE(grade(simulated_distractor(truth_of("A"), abcd(), k), truth_of("A"), abcd()));
    CHECK_FALSE(grade(simulated_distractor(num, TaskType::numeric(), k), num, TaskType::numeric()));
    CHECK_FALSE(grade(simulated_distractor(word, TaskType::text_concat(), k), word, TaskType::text_concat()));
  }
}

TEST_CASE("simulator: correct_prob precedence and cot delta") {
  SimulatedProvider sim(SimulatorConfig{0.5, 3, 0.0, 0});
  sim.add_question("q", truth_of("A"), abcd(), 0.3);
  sim.add_question("r", truth_of("A"), abcd());
  ChatRequest req{"p", false, "", "id", "q", 0.7, 0};
  CHECK(sim.correct_prob_for(req) == 0.3);
  req.question_text = "r";
  CHECK(sim.correct_prob_for(req) == 0.5);
  sim.set_prompt_correct_prob("p", 0.8);
  CHECK(sim.correct_prob_for(req) == 0.8);
  sim.set_cot_delta(0.15);
  req.cot = true;
  CHECK(sim.correct_prob_for(req) == doctest::Approx(0.95));
  sim.set_cot_delta(0.5);
  CHECK(sim.correct_prob_for(req) == 1.0);
  req.question_text = "unknown";
  CHECK_THROWS_AS(sim.complete(req), ProviderError);
}

TEST_CASE("property: concurrency does not change batches") {
  SimulatedProvider sim(SimulatorConfig{0.4, 3, 0.1, 8});
  sim.add_question("q", truth_of("D"), abcd());
  SamplingConfig one;
  one.m = 40;
  SamplingConfig eight = one;
  eight.max_concurrency = 8;
  const auto a = sample_raw(sim, kPrompt, Query{"q1", "q"}, one);
  const auto b = sample_raw(sim, kPrompt, Query{"q1", "q"}, eight);
  CHECK(a == b);
}

TEST_CASE("property: majority failure does not increase with correct_prob") {
  // Failure rates over a correct_prob grid, compared pairwise with 95%
  // normal-approximation confidence bands.
  const int questions = 400;
  std::vector<double> failure;
  for (double p : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    SimulatedProvider sim(SimulatorConfig{p, 3, 0.0, 13});
    int failed = 0;
    for (int q = 0; q < questions; ++q) {
      const auto text = "question " + std::to_string(q);
      sim.add_question(text, truth_of("A"), abcd());
      SamplingConfig cfg;
      cfg.m = 5;
      const auto batch = sample(sim, kPrompt, Query{text, text}, abcd(), cfg);
      failed += !grade(majority_vote(batch).answer, truth_of("A"), abcd());
    }
    failure.push_back(failed / static_cast<double>(questions));
  }
  for (std::size_t i = 1; i < failure.size(); ++i) {
    const double a = failure[i - 1], b = failure[i];
    const double se = std::sqrt(a * (1 - a) / questions + b * (1 - b) / questions);
    CHECK(b <= a + 1.96 * se);
  }
}

TEST_CASE("cache: record then replay is byte-exact") {
  const auto path = temp_file("record_replay.jsonl");
  SimulatedProvider sim(SimulatorConfig{0.5, 3, 0.1, 77});
  sim.add_question("q", truth_of("A"), abcd());
  SamplingConfig cfg;
  cfg.m = 12;
  cfg.max_concurrency = 4;
  std::vector<std::string> recorded;
  {
    ResponseCache cache(path);
    CachingProvider rec(&sim, cache, CacheMode::read_write);
    recorded = sample_raw(rec, kPrompt, Query{"q1", "q"}, cfg);
    CHECK(rec.miss_count() == 12);
    CHECK(cache.size() == 12);
    // A second pass is served from the cache.
    CHECK(sample_raw(rec, kPrompt, Query{"q1", "q"}, cfg) == recorded);
    CHECK(rec.miss_count() == 12);
  }
  ResponseCache reloaded(path);
  CHECK(reloaded.size() == 12);
  CachingProvider replay(nullptr, reloaded, CacheMode::replay_only, "simulator", "simulator-v1");
  const auto replayed = sample_raw(replay, kPrompt, Query{"q1", "q"}, cfg);
  CHECK(replayed == recorded);
  CHECK(replay.miss_count() == 0);

  const auto b1 = sample(sim, kPrompt, Query{"q1", "q"}, abcd(), cfg);
  const auto b2 = sample(replay, kPrompt, Query{"q1", "q"}, abcd(), cfg);
  const auto r1 = diversity_report(b1, nullptr);
  const auto r2 = diversity_report(b2, nullptr);
  CHECK(r1.entropy == r2.entropy);
  CHECK(r1.gini == r2.gini);
  CHECK(r1.majority_answer.same_elements(r2.majority_answer));

  // Each line carries key, response_text and timestamp.
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  CHECK(j.contains("key"));
  CHECK(j.contains("response_text"));
  CHECK(j.contains("timestamp"));
}

TEST_CASE("cache: replay-only miss names the sample") {
  const auto path = temp_file("miss.jsonl");
  ResponseCache cache(path);
  CachingProvider replay(nullptr, cache, CacheMode::replay_only, "simulator", "simulator-v1");
  SamplingConfig cfg;
  cfg.m = 2;
  try {
    sample_raw(replay, kPrompt, Query{"q1", "q"}, cfg);
    FAIL("expected a cache miss");
  } catch (const CacheMissError& e) {
    CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
  }
}

TEST_CASE("cache: keys depend on every request field") {
  ChatRequest base{"p", false, "prompt", "id", "question", 0.7, 3};
  const auto k = cache_key("openai_chat", "gpt", base);
  CHECK(k.size() == 32);
  auto changed = base;
  changed.sample_index = 4;
  CHECK(cache_key("openai_chat", "gpt", changed) != k);
  changed = base;
  changed.temperature = 0.3;
  CHECK(cache_key("openai_chat", "gpt", changed) != k);
  changed = base;
  changed.prompt_text = "prompt!";
  CHECK(cache_key("openai_chat", "gpt", changed) != k);
  changed = base;
  changed.question_text = "question?";
  CHECK(cache_key("openai_chat", "gpt", changed) != k);
  CHECK(cache_key("openai_chat", "gpt-4", base) != k);
  CHECK(cache_key("simulator", "gpt", base) != k);
}

TEST_CASE("cache: malformed line is a parse error with its line number") {
  const auto path = temp_file("broken.jsonl");
  {
    std::ofstream out(path);
    out << R"({"key":"a","response_text":"x","timestamp":"t"})" << "\n" << "garbage\n";
  }
  try {
    ResponseCache cache(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("chat provider: wire format, retries, and errors") {
  testing::MockServer mock;
  std::atomic<int> calls{0};
  nlohmann::json last_body;
  std::string auth;
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++calls;
    if (n == 1) {
      res.status = 500;
      return;
    }
    if (n == 2) {
      res.status = 429;
      return;
    }
    last_body = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"The answer is (B)."}}]})",
                    "application/json");
  });
  mock.server().Post("/bad/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[]})", "application/json");
  });
  mock.server().Post("/down/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  });
  mock.start();

  ChatProvider chat(ChatProviderConfig{mock.base_url() + "/v1", "test-model", "k3y", std::chrono::seconds(5), fast_retry()});
  ChatRequest req{"p", false, "Q: hi\nA:", "id", "hi", 0.7, 0};
  CHECK(chat.complete(req) == "The answer is (B).");
  CHECK(calls == 3);
  CHECK(last_body["model"] == "test-model");
  CHECK(last_body["temperature"] == 0.7);
  CHECK(last_body["messages"][0]["role"] == "user");
  CHECK(last_body["messages"][0]["content"] == "Q: hi\nA:");
  CHECK(auth == "Bearer k3y");

  ChatProvider bad(ChatProviderConfig{mock.base_url() + "/bad", "m", "", std::chrono::seconds(5), fast_retry()});
  CHECK_THROWS_AS(bad.complete(req), ProtocolError);

  ChatProvider down(ChatProviderConfig{mock.base_url() + "/down", "m", "", std::chrono::seconds(5), fast_retry(2)});
  SamplingConfig cfg;
  cfg.m = 3;
  try {
    sample_raw(down, kPrompt, Query{"id", "hi"}, cfg);
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
  }
}

TEST_CASE("backoff grows and is capped") {
  RetryPolicy p;
  p.base_backoff = std::chrono::milliseconds(100);
  p.max_backoff = std::chrono::milliseconds(1000);
  for (int attempt = 1; attempt <= 10; ++attempt) {
    const auto d = backoff_delay(p, attempt);
    const auto nominal = std::min<long long>(100LL << (attempt - 1), 1000);
    CHECK(d.count() >= nominal / 2);
    CHECK(d.count() <= nominal);
  }
}
