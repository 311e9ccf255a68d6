// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/providers.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <random>

#include <nlohmann/json.hpp>

#include "divproxy/concurrency.hpp"
#include "divproxy/error.hpp"
#include "divproxy/hashing.hpp"

namespace divproxy {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string shift_letters(const std::string& s, int k) {
  std::string out = s;
  bool changed = false;
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') {
      c = static_cast<char>('a' + (c - 'a' + k) % 26);
      changed = true;
    }
  }
  if (!changed || out == s) out += static_cast<char>('a' + k % 26);
  return out;
}

[[noreturn]] void rethrow_with_index(std::size_t index) {
  const std::string prefix = "sample " + std::to_string(index) + ": ";
  try {
    throw;
  } catch (const CacheMissError& e) {
    throw CacheMissError(prefix + e.what());
  } catch (const TransportError& e) {
    throw TransportError(prefix + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(prefix + e.what());
  } catch (const ProviderError& e) {
    throw ProviderError(prefix + e.what());
  }
}

}  // namespace

void SamplingConfig::validate() const {
  if (m == 0) throw UsageError("sampling: m must be >= 1");
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw UsageError("sampling: temperature must be in [0, 2]");
  if (max_concurrency == 0) throw UsageError("sampling: max_concurrency must be >= 1");
  if (retry.max_attempts < 1) throw UsageError("sampling: retry max_attempts must be >= 1");
}

ChatProvider::ChatProvider(ChatProviderConfig config)
    : config_(std::move(config)), endpoint_(HttpEndpoint::parse(config_.base_url)) {}

std::string ChatProvider::complete(const ChatRequest& request) const {
  const nlohmann::json body = {
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
      {"temperature", request.temperature},
  };
  ++requests_;
  const auto reply = post_json(endpoint_.join("chat/completions"), body,
                               HttpOptions{config_.api_key, config_.timeout, config_.retry});
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProtocolError("choices[0].message.content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("chat reply lacks choices[0].message.content: ") + e.what());
  }
}

void SimulatorConfig::validate() const {
  if (!(correct_prob >= 0.0 && correct_prob <= 1.0))
    throw UsageError("simulator: correct_prob must be in [0, 1]");
  if (!(noanswer_prob >= 0.0 && noanswer_prob < 1.0))
    throw UsageError("simulator: noanswer_prob must be in [0, 1)");
  if (correct_prob + noanswer_prob > 1.0 + 1e-12)
    throw UsageError("simulator: correct_prob + noanswer_prob must not exceed 1");
  if (distractor_count < 1) throw UsageError("simulator: distractor_count must be >= 1");
}

Answer simulated_distractor(const GroundTruth& truth, const TaskType& task, int k) {
  Answer wrong;
  switch (task.kind) {
    case TaskType::Kind::multiple_choice: {
      std::vector<std::string> labels;
      for (const auto& o : task.options)
        if (!truth.answer.elements.contains(Element{o.label})) labels.push_back(o.label);
      if (labels.empty()) throw UsageError("simulator: no wrong option available");
      wrong.elements.insert(Element{labels[static_cast<std::size_t>(k) % labels.size()]});
      break;
    }
    case TaskType::Kind::numeric:
      for (const auto& e : truth.answer.elements) {
        double v = 0.0;
        const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
        if (res.ec == std::errc() && res.ptr == e.value.data() + e.value.size())
          wrong.elements.insert(Element{canonical_decimal(shortest(v + (k + 1)))});
        else
          wrong.elements.insert(Element{e.value + std::to_string(k + 1)});
      }
      break;
    case TaskType::Kind::text_concat:
      for (const auto& e : truth.answer.elements)
        wrong.elements.insert(Element{shift_letters(e.value, k + 1)});
      break;
  }
  return wrong;
}

std::string simulate_response(const SimulatorConfig& cfg, const GroundTruth& truth,
                              const TaskType& task, std::uint64_t draw_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(draw_index),
                    static_cast<std::uint32_t>(draw_index >> 32)};
  std::mt19937_64 rng(seq);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  if (u < cfg.correct_prob) {
    const auto& a = truth.answer;
    if (task.kind == TaskType::Kind::multiple_choice) return "The answer is (" + render_elements(a) + ").";
    return "The answer is " + render_elements(a) + ".";
  }
  if (u < cfg.correct_prob + cfg.noanswer_prob) return std::string(kSimulatedRefusal);

  const int k = std::uniform_int_distribution<int>(0, cfg.distractor_count - 1)(rng);
  const auto wrong = simulated_distractor(truth, task, k);
  if (task.kind == TaskType::Kind::multiple_choice) return "The answer is (" + render_elements(wrong) + ").";
  return "The answer is " + render_elements(wrong) + ".";
}

SimulatedProvider::SimulatedProvider(SimulatorConfig config) : config_(config) {
  config_.validate();
}

void SimulatedProvider::add_question(const std::string& question_text, GroundTruth truth,
                                     TaskType task, std::optional<double> correct_prob) {
  if (correct_prob && !(*correct_prob >= 0.0 && *correct_prob <= 1.0))
    throw UsageError("simulator: per-question correct_prob must be in [0, 1]");
  questions_.insert_or_assign(question_text, Entry{std::move(truth), std::move(task), correct_prob});
}

void SimulatedProvider::set_prompt_correct_prob(const std::string& prompt_id, double correct_prob) {
  if (!(correct_prob >= 0.0 && correct_prob <= 1.0))
    throw UsageError("simulator: per-prompt correct_prob must be in [0, 1]");
  prompt_probs_.insert_or_assign(prompt_id, correct_prob);
}

void SimulatedProvider::set_cot_delta(double delta) { cot_delta_ = delta; }

std::uint64_t SimulatedProvider::draw_index(const ChatRequest& request) {
  return mix_seed({fnv1a64(request.prompt_id), fnv1a64(request.question_id),
                   fnv1a64(request.question_text), fnv1a64(shortest(request.temperature)),
                   request.sample_index});
}

double SimulatedProvider::correct_prob_for(const ChatRequest& request) const {
  const auto q = questions_.find(request.question_text);
  if (q == questions_.end())
    throw ProviderError("simulator: question '" + request.question_id + "' is not registered");
  double p = config_.correct_prob;
  if (q->second.correct_prob) p = *q->second.correct_prob;
  if (auto it = prompt_probs_.find(request.prompt_id); it != prompt_probs_.end()) p = it->second;
  if (request.cot) p += cot_delta_;
  return std::clamp(p, 0.0, 1.0 - config_.noanswer_prob);
}

std::string SimulatedProvider::complete(const ChatRequest& request) const {
  const auto& entry = questions_.find(request.question_text);
  if (entry == questions_.end())
    throw ProviderError("simulator: question '" + request.question_id + "' is not registered");
  SimulatorConfig cfg = config_;
  cfg.correct_prob = correct_prob_for(request);
  return simulate_response(cfg, entry->second.truth, entry->second.task, draw_index(request));
}

std::string cache_key(const std::string& provider_id, const std::string& model,
                      const ChatRequest& request) {
  const auto temperature = shortest(request.temperature);
  const auto index = std::to_string(request.sample_index);
  return fingerprint_hex(join_fields(
      {provider_id, model, request.prompt_text, request.question_text, temperature, index}));
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      records_.try_emplace(j.at("key").get<std::string>(), j.at("response_text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("cache ") + path_.string() + ": " + e.what(), line_no);
    }
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  if (auto it = records_.find(key); it != records_.end()) return it->second;
  return std::nullopt;
}

void ResponseCache::append(const std::string& key, const std::string& response_text) {
  std::unique_lock lock(mutex_);
  if (records_.contains(key)) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot append to cache " + path_.string());
  const nlohmann::json record = {
      {"key", key}, {"response_text", response_text}, {"timestamp", utc_timestamp()}};
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw DataError("write to cache " + path_.string() + " failed");
  records_.emplace(key, response_text);
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

CachingProvider::CachingProvider(const Provider* inner, ResponseCache& cache, CacheMode mode,
                                 std::string provider_id, std::string model)
    : inner_(inner), cache_(cache), mode_(mode), id_(std::move(provider_id)), model_(std::move(model)) {
  if (inner_ == nullptr && mode_ != CacheMode::replay_only)
    throw UsageError("caching provider without an inner provider must be replay-only");
  if (id_.empty()) {
    if (inner_ == nullptr) throw UsageError("replay-only cache needs the recorded provider id");
    id_ = inner_->id();
  }
  if (model_.empty()) {
    if (inner_ == nullptr) throw UsageError("replay-only cache needs the recorded model");
    model_ = inner_->model();
  }
}

std::string CachingProvider::complete(const ChatRequest& request) const {
  const auto key = cache_key(id_, model_, request);
  if (auto hit = cache_.lookup(key)) return *hit;
  ++misses_;
  if (mode_ == CacheMode::replay_only)
    throw CacheMissError("replay cache has no record for question '" + request.question_id +
                         "' (prompt '" + request.prompt_id + "', key " + key + ")");
  auto text = inner_->complete(request);
  cache_.append(key, text);
  return text;
}

CachingEmbedder::CachingEmbedder(const Embedder* inner, ResponseCache& cache, CacheMode mode,
                                 std::string model)
    : inner_(inner), cache_(cache), mode_(mode), model_(std::move(model)) {
  if (inner_ == nullptr && mode_ != CacheMode::replay_only)
    throw UsageError("caching embedder without an inner embedder must be replay-only");
  kind_ = inner_ != nullptr ? inner_->kind() : "replay";
}

std::string CachingEmbedder::key(const std::string& text) const {
  return fingerprint_hex(join_fields({"embedding", model_, text}));
}

std::vector<EmbeddingVector> CachingEmbedder::embed(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto hit = cache_.lookup(key(texts[i]));
    if (!hit) {
      missing.push_back(i);
      continue;
    }
    try {
      out[i].components = nlohmann::json::parse(*hit).get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw ParseError("cached embedding for key " + key(texts[i]) + " is not a number array", 0);
    }
  }
  if (missing.empty()) return out;
  if (mode_ == CacheMode::replay_only)
    throw CacheMissError("replay cache has no embedding for '" + texts[missing.front()] + "'");
  std::vector<std::string> pending;
  pending.reserve(missing.size());
  for (auto i : missing) pending.push_back(texts[i]);
  auto fresh = inner_->embed(pending);
  if (fresh.size() != pending.size()) throw ProtocolError("embedder returned the wrong number of vectors");
  for (std::size_t j = 0; j < missing.size(); ++j) {
    cache_.append(key(pending[j]), nlohmann::json(fresh[j].components).dump());
    out[missing[j]] = std::move(fresh[j]);
  }
  return out;
}

std::vector<std::string> sample_raw(const Provider& provider, const PromptSpec& prompt,
                                    const Query& question, const SamplingConfig& cfg) {
  cfg.validate();
  const auto rendered = render_prompt(prompt, question.text);
  std::vector<std::string> out(cfg.m);
  parallel_for_index(cfg.m, cfg.max_concurrency, [&](std::size_t i) {
    ChatRequest req{prompt.id, prompt.cot,  rendered, question.id,
                    question.text, cfg.temperature, i};
    try {
      out[i] = provider.complete(req);
    } catch (const ProviderError&) {
      rethrow_with_index(i);
    }
  });
  return out;
}

SampleBatch sample(const Provider& provider, const PromptSpec& prompt, const Query& question,
                   const TaskType& task, const SamplingConfig& cfg, const AnswerCues& cues) {
  auto raw = sample_raw(provider, prompt, question, cfg);
  SampleBatch batch;
  batch.prompt_id = prompt.id;
  batch.question_id = question.id;
  batch.temperature = cfg.temperature;
  batch.samples.reserve(raw.size());
  for (auto& text : raw) batch.samples.push_back(normalize(text, task, cues));
  return batch;
}

}  // namespace divproxy
