// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "divproxy/error.hpp"

namespace divproxy {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

// Drops a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

json parse_scalar(std::string_view v, std::size_t line) {
  v = trim(v);
  if (v.empty()) throw UsageError("config line " + std::to_string(line) + ": missing value");
  if (v.front() == '"') {
    // Same escapes as JSON.
    try {
      return json::parse(v);
    } catch (const json::exception&) {
      throw UsageError("config line " + std::to_string(line) + ": bad string " + std::string(v));
    }
  }
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    auto j = json::parse(v);
    if (j.is_number()) return j;
  } catch (const json::exception&) {
  }
  throw UsageError("config line " + std::to_string(line) + ": unsupported value '" + std::string(v) +
                   "'");
}

json parse_value(std::string_view v, std::size_t line) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw UsageError("config line " + std::to_string(line) + ": unterminated array");
    json arr = json::array();
    auto body = trim(v.substr(1, v.size() - 2));
    std::size_t start = 0;
    bool in_string = false;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i < body.size() && body[i] == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
      if (i == body.size() || (body[i] == ',' && !in_string)) {
        auto item = trim(body.substr(start, i - start));
        if (!item.empty()) arr.push_back(parse_scalar(item, line));
        start = i + 1;
      }
    }
    return arr;
  }
  return parse_scalar(v, line);
}

template <typename T>
T take(const json& section, const std::string& key, T fallback) {
  if (!section.contains(key)) return fallback;
  try {
    return section.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

void reject_unknown(const json& section, const std::string& name, std::set<std::string> allowed) {
  for (const auto& [k, v] : section.items())
    if (!allowed.contains(k)) throw UsageError("unknown config key '" + (name.empty() ? k : name + "." + k) + "'");
}

}  // namespace

json parse_config_text(std::string_view text) {
  json doc = json::object();
  json* section = &doc;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError("config line " + std::to_string(line_no) + ": bad section header");
      const auto name = std::string(trim(line.substr(1, line.size() - 2)));
      if (!is_bare_key(name)) throw UsageError("config line " + std::to_string(line_no) + ": bad section name");
      if (doc.contains(name)) throw UsageError("config line " + std::to_string(line_no) + ": duplicate section");
      doc[name] = json::object();
      section = &doc[name];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = std::string(trim(line.substr(0, eq)));
    if (!is_bare_key(key)) throw UsageError("config line " + std::to_string(line_no) + ": bad key");
    if (section->contains(key)) throw UsageError("config line " + std::to_string(line_no) + ": duplicate key");
    (*section)[key] = parse_value(line.substr(eq + 1), line_no);
  }
  return doc;
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig c;
  const json empty = json::object();
  reject_unknown(doc, "", {"seed", "out", "cache", "replay_only", "provider", "sampling", "embedder",
                           "simulator", "measures"});
  c.seed = take<std::uint64_t>(doc, "seed", c.seed);
  c.out = take<std::string>(doc, "out", c.out);
  c.cache = take<std::string>(doc, "cache", c.cache);
  c.replay_only = take<bool>(doc, "replay_only", c.replay_only);

  const json& p = doc.contains("provider") ? doc.at("provider") : empty;
  reject_unknown(p, "provider", {"kind", "base_url", "model", "api_key_env", "timeout_s"});
  c.provider.kind = take<std::string>(p, "kind", c.provider.kind);
  c.provider.base_url = take<std::string>(p, "base_url", c.provider.base_url);
  c.provider.model = take<std::string>(p, "model", c.provider.model);
  c.provider.api_key_env = take<std::string>(p, "api_key_env", c.provider.api_key_env);
  c.provider.timeout_s = take<int>(p, "timeout_s", c.provider.timeout_s);

  const json& s = doc.contains("sampling") ? doc.at("sampling") : empty;
  reject_unknown(s, "sampling", {"m", "temperature", "max_concurrency", "max_attempts", "base_backoff_ms"});
  c.sampling.m = take<std::size_t>(s, "m", c.sampling.m);
  c.sampling.temperature = take<double>(s, "temperature", c.sampling.temperature);
  c.sampling.max_concurrency = take<std::size_t>(s, "max_concurrency", c.sampling.max_concurrency);
  c.sampling.retry.max_attempts = take<int>(s, "max_attempts", c.sampling.retry.max_attempts);
  c.sampling.retry.base_backoff =
      std::chrono::milliseconds(take<long long>(s, "base_backoff_ms", c.sampling.retry.base_backoff.count()));

  const json& e = doc.contains("embedder") ? doc.at("embedder") : empty;
  reject_unknown(e, "embedder", {"kind", "dim", "url", "model", "batch_size", "metric", "target"});
  c.embedder.kind = take<std::string>(e, "kind", c.embedder.kind);
  c.embedder.dim = take<std::size_t>(e, "dim", c.embedder.dim);
  c.embedder.url = take<std::string>(e, "url", c.embedder.url);
  c.embedder.model = take<std::string>(e, "model", c.embedder.model);
  c.embedder.batch_size = take<std::size_t>(e, "batch_size", c.embedder.batch_size);
  c.embedder.metric = parse_distance_metric(take<std::string>(e, "metric", "euclidean"));
  c.embedder.target = parse_embed_target(take<std::string>(e, "target", "answer_only"));
  c.diversity.metric = c.embedder.metric;
  c.diversity.target = c.embedder.target;

  const json& sim = doc.contains("simulator") ? doc.at("simulator") : empty;
  reject_unknown(sim, "simulator", {"correct_prob", "distractor_count", "noanswer_prob", "correct_prob_grid",
                                    "prompt_correct_probs", "cot_delta"});
  c.simulator.correct_prob = take<double>(sim, "correct_prob", c.simulator.correct_prob);
  c.simulator.distractor_count = take<int>(sim, "distractor_count", c.simulator.distractor_count);
  c.simulator.noanswer_prob = take<double>(sim, "noanswer_prob", c.simulator.noanswer_prob);
  c.simulator.correct_prob_grid = take<std::vector<double>>(sim, "correct_prob_grid", {});
  c.simulator.prompt_correct_probs = take<std::vector<double>>(sim, "prompt_correct_probs", {});
  c.simulator.cot_delta = take<double>(sim, "cot_delta", c.simulator.cot_delta);

  const json& m = doc.contains("measures") ? doc.at("measures") : empty;
  reject_unknown(m, "measures", {"log_base", "gini"});
  c.diversity.log_base = parse_log_base(take<std::string>(m, "log_base", "nat"));
  c.diversity.gini = parse_gini_variant(take<std::string>(m, "gini", "literal"));
  return c;
}

RunConfig RunConfig::from_text(std::string_view text) { return from_json(parse_config_text(text)); }

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

json RunConfig::to_json() const {
  return {
      {"seed", seed},
      {"out", out},
      {"cache", cache},
      {"replay_only", replay_only},
      {"provider",
       {{"kind", provider.kind},
        {"base_url", provider.base_url},
        {"model", provider.model},
        {"api_key_env", provider.api_key_env},
        {"timeout_s", provider.timeout_s}}},
      {"sampling",
       {{"m", sampling.m},
        {"temperature", sampling.temperature},
        {"max_concurrency", sampling.max_concurrency},
        {"max_attempts", sampling.retry.max_attempts},
        {"base_backoff_ms", sampling.retry.base_backoff.count()}}},
      {"embedder",
       {{"kind", embedder.kind},
        {"dim", embedder.dim},
        {"url", embedder.url},
        {"model", embedder.model},
        {"batch_size", embedder.batch_size},
        {"metric", to_string(embedder.metric)},
        {"target", to_string(embedder.target)}}},
      {"simulator",
       {{"correct_prob", simulator.correct_prob},
        {"distractor_count", simulator.distractor_count},
        {"noanswer_prob", simulator.noanswer_prob},
        {"correct_prob_grid", simulator.correct_prob_grid},
        {"prompt_correct_probs", simulator.prompt_correct_probs},
        {"cot_delta", simulator.cot_delta}}},
      {"measures", {{"log_base", to_string(diversity.log_base)}, {"gini", to_string(diversity.gini)}}},
  };
}

std::string RunConfig::api_key() const {
  const char* v = std::getenv(provider.api_key_env.c_str());
  return v == nullptr ? std::string{} : std::string(v);
}

void RunConfig::validate() const {
  if (provider.kind != "simulator" && provider.kind != "openai")
    throw UsageError("provider.kind must be simulator or openai");
  if (embedder.kind != "none" && embedder.kind != "deterministic" && embedder.kind != "http")
    throw UsageError("embedder.kind must be none, deterministic or http");
  if (embedder.kind != "none" && embedder.dim == 0) throw UsageError("embedder.dim must be >= 1");
  if (embedder.kind == "http" && embedder.url.empty()) throw UsageError("embedder.url is required for http");
  if (provider.timeout_s < 1) throw UsageError("provider.timeout_s must be >= 1");
  sampling.validate();
  SimulatorConfig{simulator.correct_prob, simulator.distractor_count, simulator.noanswer_prob, seed}.validate();
  for (double p : simulator.correct_prob_grid)
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("simulator.correct_prob_grid values must be in [0, 1]");
  for (double p : simulator.prompt_correct_probs)
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("simulator.prompt_correct_probs values must be in [0, 1]");
  if (cache.empty() && replay_only) throw UsageError("--replay-only requires a cache path");

  const bool needs_key = (provider.kind == "openai" && !replay_only) || (embedder.kind == "http" && !replay_only);
  if (needs_key && api_key().empty())
    throw UsageError("environment variable " + provider.api_key_env + " is not set");
}

}  // namespace divproxy
