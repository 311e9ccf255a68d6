// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Few-shot / chain-of-thought prompt construction and diversity-based prompt
// selection: run N prompts m times each, majority-vote within each prompt,
// and answer with the prompt whose batch is least diverse.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "divproxy/datasets.hpp"
#include "divproxy/embedding.hpp"
#include "divproxy/measures.hpp"
#include "divproxy/prompt.hpp"
#include "divproxy/providers.hpp"

namespace divproxy {

enum class Criterion { entropy, gini, centroid };

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view s);

struct PoolItem {
  std::string id;
  std::string question;
  GroundTruth truth;
};

std::vector<PoolItem> to_pool(std::span<const DatasetRecord> records);

inline constexpr std::string_view kDefaultInstruction =
    "Answer the question. End your reply with \"The answer is <answer>.\"";

// Exemplar indices for each prompt: `shots` distinct pool indices per prompt,
// drawn independently for every prompt. Deterministic in seed.
std::vector<std::vector<std::size_t>> choose_exemplars(std::size_t pool_size, std::size_t n_prompts,
                                                       std::size_t shots, std::uint64_t seed);

// UsageError when the pool holds fewer than `shots` items or n_prompts == 0.
std::vector<PromptSpec> build_fewshot_prompts(std::span<const PoolItem> pool, std::size_t n_prompts,
                                              std::size_t shots, std::uint64_t seed,
                                              std::string instruction = std::string(kDefaultInstruction));

// Same exemplar choice as build_fewshot_prompts for the same seed, rendered
// with explanations. UsageError if any pool item lacks an explanation.
std::vector<PromptSpec> build_cot_prompts(std::span<const PoolItem> pool, std::size_t n_prompts,
                                          std::size_t shots, std::uint64_t seed,
                                          std::string instruction = std::string(kDefaultInstruction));

struct SelectionOptions {
  Criterion criterion = Criterion::entropy;
  DiversityOptions diversity;
  AnswerCues cues;
};

struct PromptOutcome {
  std::string prompt_id;
  DiversityReport report;
};

struct SelectionResult {
  std::string chosen_prompt_id;
  std::size_t chosen_index = 0;
  Answer chosen_answer;
  std::vector<PromptOutcome> per_prompt;
  Criterion criterion = Criterion::entropy;
};

double criterion_value(const DiversityReport& report, Criterion criterion);

// Index of the minimum-criterion report among the first `prefix` entries;
// ties go to the lowest index.
std::size_t argmin_criterion(std::span<const DiversityReport> reports, Criterion criterion,
                             std::size_t prefix);

// UsageError when prompts is empty or the centroid criterion has no embedder.
// Provider errors are rethrown with the prompt id attached.
SelectionResult select_prompt(std::span<const PromptSpec> prompts, const Query& question,
                              const TaskType& task, const Provider& provider,
                              const SamplingConfig& cfg, const SelectionOptions& options,
                              const Embedder* embedder = nullptr);

struct SweepQuestion {
  std::string question_id;
  std::vector<double> criterion_values;  // per prompt
  std::vector<bool> correct;             // per prompt, majority answer graded
};

struct SweepReport {
  Criterion criterion = Criterion::entropy;
  std::vector<std::string> prompt_ids;
  std::vector<double> individual_failure;  // per prompt
  double mean_individual_failure = 0.0;
  std::vector<double> prefix_failure;      // entry n-1: selection among the first n prompts
  double selection_failure = 0.0;          // prefix_failure.back()
  std::vector<SweepQuestion> questions;

  nlohmann::json to_json() const;
  // series,n,prompt_id,failure_probability
  std::string to_csv() const;
};

// Samples every (prompt, question) once and evaluates selection restricted to
// each prefix of the prompt list.
SweepReport selection_sweep(std::span<const PromptSpec> prompts,
                            std::span<const DatasetRecord> questions, const Provider& provider,
                            const SamplingConfig& cfg, const SelectionOptions& options,
                            const Embedder* embedder = nullptr);

}  // namespace divproxy
