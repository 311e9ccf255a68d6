// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/prompt.hpp"

namespace divproxy {

std::string render_prompt(const PromptSpec& prompt, const std::string& question) {
  std::string out;
  if (!prompt.instruction.empty()) out += prompt.instruction + "\n\n";
  for (const auto& ex : prompt.exemplars) {
    out += "Q: " + ex.question + "\nA: ";
    if (prompt.cot && ex.explanation) out += *ex.explanation + " ";
    out += "The answer is " + ex.answer + ".\n\n";
  }
  out += "Q: " + question + "\nA:";
  return out;
}

}  // namespace divproxy
