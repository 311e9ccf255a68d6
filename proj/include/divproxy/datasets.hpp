// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "divproxy/answers.hpp"

namespace divproxy {

struct DatasetRecord {
  std::string id;
  std::string question;
  TaskType task;
  GroundTruth truth;
};

// csqa_json:     {"id", "question": {"stem", "choices": [{"label", "text"}]}, "answerKey"}
// draw1k_json:   {"iIndex", "sQuestion", "lSolutions": [...], "lEquations": [...]}
// ll_json:       {"id"?, "question", "answer"} or {"id"?, "names": [...]}
// records_jsonl: this library's own lossless record format (see to_json)
//
// Every format accepts either one JSON object per line or a single top-level
// array. Unknown fields are ignored.
enum class DatasetFormat { csqa_json, draw1k_json, ll_json, records_jsonl };

DatasetFormat parse_dataset_format(std::string_view s);
std::string_view to_string(DatasetFormat f);

// ParseError (with line) on malformed JSON or records, ValidationError on
// duplicate ids.
std::vector<DatasetRecord> parse_dataset(std::string_view content, DatasetFormat format);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format);

nlohmann::json to_json(const Answer& answer);
nlohmann::json to_json(const TaskType& task);
nlohmann::json to_json(const DatasetRecord& record);
Answer answer_from_json(const nlohmann::json& j);
TaskType task_from_json(const nlohmann::json& j);
DatasetRecord record_from_json(const nlohmann::json& j);

// Writes records_jsonl.
void save_records(std::span<const DatasetRecord> records, const std::filesystem::path& path);
std::string dump_records(std::span<const DatasetRecord> records);

// Seeded last-letter-concatenation data built from random names with
// words_per_name words each.
std::vector<DatasetRecord> synthesize_ll(std::size_t count, std::size_t words_per_name,
                                         std::uint64_t seed);

// Seeded multiple-choice questions with option_count labeled options.
std::vector<DatasetRecord> synthesize_choice(std::size_t count, std::size_t option_count,
                                             std::uint64_t seed);

// Seeded two-unknown linear word problems with numeric answers and the
// governing equations as explanations.
std::vector<DatasetRecord> synthesize_arithmetic(std::size_t count, std::uint64_t seed);

}  // namespace divproxy
