// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divproxy/measures.hpp"

namespace divproxy {

struct ChoiceOption {
  std::string label;
  std::string text;

  bool operator==(const ChoiceOption&) const = default;
};

struct TaskType {
  enum class Kind { multiple_choice, numeric, text_concat };

  Kind kind = Kind::numeric;
  std::vector<ChoiceOption> options;  // multiple_choice only

  // Requires >= 2 options with distinct, nonempty labels.
  static TaskType multiple_choice(std::vector<ChoiceOption> options);
  static TaskType numeric() { return TaskType{Kind::numeric, {}}; }
  static TaskType text_concat() { return TaskType{Kind::text_concat, {}}; }

  bool operator==(const TaskType&) const = default;
};

std::string_view to_string(TaskType::Kind k);

struct GroundTruth {
  Answer answer;
  std::optional<std::string> explanation;
};

// Phrases that introduce the final answer. The last occurrence of any cue
// wins; without a cue the last nonempty line is used.
struct AnswerCues {
  std::vector<std::string> cues{"answer is", "answer:"};
};

// Maps raw model text to a canonical element set:
//   multiple_choice -> {label}, numeric -> {canonical decimals},
//   text_concat -> {lowercased final token}.
// Text with nothing extractable becomes the no-answer sentinel.
Answer normalize(std::string_view raw, const TaskType& task, const AnswerCues& cues = {});

// "012.50" -> "12.5", "-0.0" -> "0", "1,234" -> "1234". Input must be a
// plain decimal literal (optional sign, digits, optional fraction).
std::string canonical_decimal(std::string_view literal);

struct LastLetterTask {
  std::string question;
  GroundTruth truth;
};

// Question asking for the last letter of every word of every name, in order.
// UsageError on an empty list or a name without words.
LastLetterTask generate_ll_task(std::span<const std::string> names);

// Absolute tolerance used when grading numeric answers.
inline constexpr double kNumericTolerance = 1e-6;

// Set equality; numeric elements compare within kNumericTolerance. The
// no-answer sentinel never grades as correct.
bool grade(const Answer& answer, const GroundTruth& truth, const TaskType& task);

}  // namespace divproxy
