// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/selection.hpp"

#include <cassert>
#include <cstdio>
#include <numeric>
#include <random>

#include "divproxy/analysis.hpp"
#include "divproxy/error.hpp"
#include "divproxy/hashing.hpp"

namespace divproxy {

namespace {

std::string prompt_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "prompt-%02zu", i + 1);
  return buf;
}

std::vector<PromptSpec> build_prompts(std::span<const PoolItem> pool, std::size_t n_prompts,
                                      std::size_t shots, std::uint64_t seed,
                                      const std::string& instruction, bool cot) {
  if (cot) {
    for (const auto& item : pool)
      if (!item.truth.explanation)
        throw UsageError("build_cot_prompts: pool item '" + item.id + "' has no explanation");
  }
  const auto picks = choose_exemplars(pool.size(), n_prompts, shots, seed);
  std::vector<PromptSpec> prompts;
  prompts.reserve(n_prompts);
  for (std::size_t p = 0; p < n_prompts; ++p) {
    PromptSpec spec;
    spec.id = prompt_id(p);
    spec.instruction = instruction;
    spec.cot = cot;
    for (auto idx : picks[p]) {
      const auto& item = pool[idx];
      Exemplar ex{item.id, item.question, render_elements(item.truth.answer), std::nullopt};
      if (cot) ex.explanation = item.truth.explanation;
      spec.exemplars.push_back(std::move(ex));
    }
    prompts.push_back(std::move(spec));
  }
  return prompts;
}

[[noreturn]] void rethrow_with_prompt(const std::string& id) {
  const std::string prefix = "prompt " + id + ": ";
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

std::vector<DiversityReport> run_prompts(std::span<const PromptSpec> prompts, const Query& question,
                                         const TaskType& task, const Provider& provider,
                                         const SamplingConfig& cfg, const SelectionOptions& options,
                                         const Embedder* embedder) {
  if (prompts.empty()) throw UsageError("prompt selection needs at least one prompt");
  if (options.criterion == Criterion::centroid && embedder == nullptr)
    throw UsageError("centroid criterion requires an embedder");
  std::vector<DiversityReport> reports;
  reports.reserve(prompts.size());
  for (const auto& prompt : prompts) {
    try {
      const auto batch = sample(provider, prompt, question, task, cfg, options.cues);
      reports.push_back(diversity_report(batch, embedder, options.diversity));
    } catch (const ProviderError&) {
      rethrow_with_prompt(prompt.id);
    }
  }
  return reports;
}

}  // namespace

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::entropy: return "entropy";
    case Criterion::gini: return "gini";
    case Criterion::centroid: return "centroid";
  }
  return "unknown";
}

Criterion parse_criterion(std::string_view s) {
  if (s == "entropy") return Criterion::entropy;
  if (s == "gini") return Criterion::gini;
  if (s == "centroid") return Criterion::centroid;
  throw UsageError("unknown criterion '" + std::string(s) + "' (expected entropy|gini|centroid)");
}

std::vector<PoolItem> to_pool(std::span<const DatasetRecord> records) {
  std::vector<PoolItem> pool;
  pool.reserve(records.size());
  for (const auto& r : records) pool.push_back({r.id, r.question, r.truth});
  return pool;
}

std::vector<std::vector<std::size_t>> choose_exemplars(std::size_t pool_size, std::size_t n_prompts,
                                                       std::size_t shots, std::uint64_t seed) {
  if (n_prompts == 0) throw UsageError("prompt construction: n_prompts must be >= 1");
  if (pool_size < shots)
    throw UsageError("prompt construction: pool of " + std::to_string(pool_size) +
                     " items cannot supply " + std::to_string(shots) + " shots");
  std::vector<std::vector<std::size_t>> picks(n_prompts);
  std::vector<std::size_t> indices(pool_size);
  for (std::size_t p = 0; p < n_prompts; ++p) {
    std::mt19937_64 rng(mix_seed({seed, p}));
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `shots` slots are a uniform sample
    // without replacement, in random order.
    for (std::size_t i = 0; i < shots; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
      std::swap(indices[i], indices[pick(rng)]);
    }
    picks[p].assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(shots));
  }
  return picks;
}

std::vector<PromptSpec> build_fewshot_prompts(std::span<const PoolItem> pool, std::size_t n_prompts,
                                              std::size_t shots, std::uint64_t seed,
                                              std::string instruction) {
  return build_prompts(pool, n_prompts, shots, seed, instruction, false);
}

std::vector<PromptSpec> build_cot_prompts(std::span<const PoolItem> pool, std::size_t n_prompts,
                                          std::size_t shots, std::uint64_t seed,
                                          std::string instruction) {
  return build_prompts(pool, n_prompts, shots, seed, instruction, true);
}

double criterion_value(const DiversityReport& report, Criterion criterion) {
  switch (criterion) {
    case Criterion::entropy: return report.entropy;
    case Criterion::gini: return report.gini;
    case Criterion::centroid:
      if (!report.centroid_distance) throw UsageError("report has no centroid distance");
      return *report.centroid_distance;
  }
  return 0.0;
}

std::size_t argmin_criterion(std::span<const DiversityReport> reports, Criterion criterion,
                             std::size_t prefix) {
  if (prefix == 0 || prefix > reports.size()) throw UsageError("argmin_criterion: bad prefix");
  std::size_t best = 0;
  double best_value = criterion_value(reports[0], criterion);
  for (std::size_t i = 1; i < prefix; ++i) {
    const double v = criterion_value(reports[i], criterion);
    if (v < best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

SelectionResult select_prompt(std::span<const PromptSpec> prompts, const Query& question,
                              const TaskType& task, const Provider& provider,
                              const SamplingConfig& cfg, const SelectionOptions& options,
                              const Embedder* embedder) {
  const auto reports = run_prompts(prompts, question, task, provider, cfg, options, embedder);
  const auto best = argmin_criterion(reports, options.criterion, reports.size());

  SelectionResult result;
  result.criterion = options.criterion;
  result.chosen_index = best;
  result.chosen_prompt_id = prompts[best].id;
  result.chosen_answer = reports[best].majority_answer;
  const double chosen_value = criterion_value(reports[best], options.criterion);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (chosen_value > criterion_value(reports[i], options.criterion))
      throw Error("select_prompt: chosen criterion value is not minimal");
    result.per_prompt.push_back({prompts[i].id, reports[i]});
  }
  return result;
}

SweepReport selection_sweep(std::span<const PromptSpec> prompts,
                            std::span<const DatasetRecord> questions, const Provider& provider,
                            const SamplingConfig& cfg, const SelectionOptions& options,
                            const Embedder* embedder) {
  if (questions.empty()) throw UsageError("selection_sweep: no questions");
  const std::size_t n = prompts.size();
  std::vector<std::size_t> individual_failures(n, 0);
  std::vector<std::size_t> prefix_failures(n, 0);

  SweepReport report;
  report.criterion = options.criterion;
  for (const auto& p : prompts) report.prompt_ids.push_back(p.id);

  for (const auto& record : questions) {
    const Query query{record.id, record.question};
    const auto reports = run_prompts(prompts, query, record.task, provider, cfg, options, embedder);
    SweepQuestion row;
    row.question_id = record.id;
    for (std::size_t i = 0; i < n; ++i) {
      row.criterion_values.push_back(criterion_value(reports[i], options.criterion));
      const bool ok = grade(reports[i].majority_answer, record.truth, record.task);
      row.correct.push_back(ok);
      if (!ok) ++individual_failures[i];
    }
    for (std::size_t prefix = 1; prefix <= n; ++prefix) {
      const auto chosen = argmin_criterion(reports, options.criterion, prefix);
      if (!row.correct[chosen]) ++prefix_failures[prefix - 1];
    }
    report.questions.push_back(std::move(row));
  }

  const double q = static_cast<double>(questions.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    report.individual_failure.push_back(static_cast<double>(individual_failures[i]) / q);
    report.prefix_failure.push_back(static_cast<double>(prefix_failures[i]) / q);
    sum += report.individual_failure.back();
  }
  report.mean_individual_failure = sum / static_cast<double>(n);
  report.selection_failure = report.prefix_failure.back();
  return report;
}

nlohmann::json SweepReport::to_json() const {
  nlohmann::json j;
  j["criterion"] = to_string(criterion);
  j["prompt_ids"] = prompt_ids;
  j["individual_failure"] = individual_failure;
  j["mean_individual_failure"] = mean_individual_failure;
  j["prefix_failure"] = prefix_failure;
  j["selection_failure"] = selection_failure;
  j["question_count"] = questions.size();
  auto& rows = j["questions"] = nlohmann::json::array();
  for (const auto& q : questions)
    rows.push_back({{"question_id", q.question_id},
                    {"criterion_values", q.criterion_values},
                    {"correct", q.correct}});
  return j;
}

std::string SweepReport::to_csv() const {
  std::string out = "series,n,prompt_id,failure_probability\n";
  const auto fmt = format_double;
  for (std::size_t i = 0; i < individual_failure.size(); ++i)
    out += "individual," + std::to_string(i + 1) + "," + prompt_ids[i] + "," +
           fmt(individual_failure[i]) + "\n";
  for (std::size_t i = 0; i < prefix_failure.size(); ++i)
    out += "selection_prefix," + std::to_string(i + 1) + ",," + fmt(prefix_failure[i]) + "\n";
  out += "mean_individual," + std::to_string(individual_failure.size()) + ",," +
         fmt(mean_individual_failure) + "\n";
  return out;
}

}  // namespace divproxy
