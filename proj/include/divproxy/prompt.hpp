// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace divproxy {

struct Exemplar {
  std::string id;
  std::string question;
  std::string answer;
  std::optional<std::string> explanation;

  bool operator==(const Exemplar&) const = default;
};

struct PromptSpec {
  std::string id;
  std::string instruction;
  std::vector<Exemplar> exemplars;
  bool cot = false;

  bool operator==(const PromptSpec&) const = default;
};

// Fixed template:
//
//   <instruction>
//
//   Q: <exemplar question>
//   A: [<explanation> ]The answer is <answer>.
//
//   ...
//
//   Q: <question>
//   A:
//
// The instruction paragraph is omitted when empty; explanations appear only
// when cot is set.
std::string render_prompt(const PromptSpec& prompt, const std::string& question);

}  // namespace divproxy
