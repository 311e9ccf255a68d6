// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "divproxy/measures.hpp"
#include "divproxy/providers.hpp"

namespace divproxy {

// Parses the TOML subset used by run configs: [section] headers, bare keys,
// and values that are strings ("..."), numbers, booleans, or flat arrays of
// those. '#' starts a comment. UsageError (with line) on anything else.
nlohmann::json parse_config_text(std::string_view text);

struct ProviderBlock {
  std::string kind = "simulator";  // simulator | openai
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "DIVPROXY_API_KEY";
  int timeout_s = 120;
};

struct EmbedderBlock {
  std::string kind = "none";  // none | deterministic | http
  std::size_t dim = 8;
  std::string url;
  std::string model = "text-embedding-3-small";
  std::size_t batch_size = 64;
  DistanceMetric metric = DistanceMetric::euclidean;
  EmbedTarget target = EmbedTarget::answer_only;
};

struct SimulatorBlock {
  double correct_prob = 0.7;
  int distractor_count = 3;
  double noanswer_prob = 0.0;
  // When nonempty, each question draws its correct_prob from this list.
  std::vector<double> correct_prob_grid;
  // Per-prompt correct_prob by prompt position (prompt selection).
  std::vector<double> prompt_correct_probs;
  double cot_delta = 0.0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string cache;  // empty: no record/replay cache
  bool replay_only = false;
  ProviderBlock provider;
  SamplingConfig sampling;
  EmbedderBlock embedder;
  SimulatorBlock simulator;
  DiversityOptions diversity;

  // Unknown sections or keys raise UsageError.
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig from_text(std::string_view text);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;

  // Checks ranges and, for network-backed providers and embedders, that the
  // API key environment variable is set. Runs before any request is made.
  void validate() const;
  std::string api_key() const;
};

}  // namespace divproxy
