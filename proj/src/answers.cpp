// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/answers.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>
#include <set>

#include "divproxy/error.hpp"

namespace divproxy {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    const auto end = nl == std::string_view::npos ? s.size() : nl;
    out.push_back(s.substr(start, end - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

struct AnswerSpan {
  std::string_view text;  // the final-answer span
  std::string_view before;
  bool has_cue = false;
};

AnswerSpan locate_answer(std::string_view raw, const AnswerCues& cues) {
  const std::string folded = lower(raw);
  std::size_t best = std::string::npos;
  std::size_t best_end = 0;
  for (const auto& cue : cues.cues) {
    if (cue.empty()) continue;
    const auto pos = folded.rfind(lower(cue));
    if (pos == std::string::npos) continue;
    if (best == std::string::npos || pos > best) {
      best = pos;
      best_end = pos + cue.size();
    }
  }

  AnswerSpan span;
  if (best != std::string::npos) {
    span.has_cue = true;
    span.before = trim(raw.substr(0, best));
    // Rest of the cue's line; if that is empty, the next nonempty line.
    for (auto line : lines(raw.substr(best_end))) {
      if (!trim(line).empty()) {
        span.text = trim(line);
        break;
      }
    }
    return span;
  }

  const auto all = lines(raw);
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    if (!trim(*it).empty()) {
      span.text = trim(*it);
      span.before = trim(raw.substr(0, static_cast<std::size_t>(it->data() - raw.data())));
      break;
    }
  }
  return span;
}

std::optional<std::string> match_choice(std::string_view span, const TaskType& task) {
  auto find_label = [&](std::string_view candidate,
                        bool fold) -> std::optional<std::string> {
    for (const auto& opt : task.options) {
      if (opt.label == candidate) return opt.label;
      if (fold && lower(opt.label) == lower(candidate)) return opt.label;
    }
    return std::nullopt;
  };

  // "(B)" style, case-insensitive.
  for (std::size_t i = 0; i < span.size(); ++i) {
    if (span[i] != '(') continue;
    const auto close = span.find(')', i + 1);
    if (close == std::string_view::npos) break;
    if (auto label = find_label(trim(span.substr(i + 1, close - i - 1)), true)) return label;
  }

  // Standalone label token, case-sensitive so the article "a" is not "A".
  std::size_t i = 0;
  while (i < span.size()) {
    while (i < span.size() && !is_alnum(span[i])) ++i;
    std::size_t j = i;
    while (j < span.size() && is_alnum(span[j])) ++j;
    if (j > i)
      if (auto label = find_label(span.substr(i, j - i), false)) return label;
    i = j;
  }

  // Option text, earliest mention first, longer text on ties.
  const std::string folded = lower(span);
  std::optional<std::string> found;
  std::size_t found_pos = std::string::npos;
  std::size_t found_len = 0;
  for (const auto& opt : task.options) {
    if (trim(opt.text).empty()) continue;
    const auto pos = folded.find(lower(trim(opt.text)));
    if (pos == std::string::npos) continue;
    const auto len = trim(opt.text).size();
    if (pos < found_pos || (pos == found_pos && len > found_len)) {
      found = opt.label;
      found_pos = pos;
      found_len = len;
    }
  }
  return found;
}

std::set<Element> match_numbers(std::string_view span) {
  static const std::regex number(R"([-+]?(?:\d+(?:,\d{3})*(?:\.\d+)?|\.\d+))");
  std::set<Element> out;
  const std::string text(span);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), number);
       it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position());
    // Skip digits glued to identifiers such as "x1".
    if (pos > 0 && (is_alpha(text[pos - 1]) || text[pos - 1] == '_')) continue;
    out.insert(Element{canonical_decimal(it->str())});
  }
  return out;
}

std::optional<std::string> match_token(std::string_view span, bool has_cue) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < span.size()) {
    while (i < span.size() && is_space(span[i])) ++i;
    std::size_t j = i;
    while (j < span.size() && !is_space(span[j])) ++j;
    if (j > i) tokens.push_back(span.substr(i, j - i));
    i = j;
  }
  if (tokens.empty()) return std::nullopt;
  // Without a cue, only a bare one-token line counts as an answer.
  if (!has_cue && tokens.size() != 1) return std::nullopt;

  auto token = tokens.back();
  while (!token.empty() && !is_alnum(token.front())) token.remove_prefix(1);
  while (!token.empty() && !is_alnum(token.back())) token.remove_suffix(1);
  if (token.empty()) return std::nullopt;
  return lower(token);
}

double parse_double(const std::string& s, bool& ok) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  ok = res.ec == std::errc() && res.ptr == s.data() + s.size();
  return v;
}

}  // namespace

TaskType TaskType::multiple_choice(std::vector<ChoiceOption> options) {
  if (options.size() < 2) throw UsageError("multiple_choice task needs at least 2 options");
  std::set<std::string> labels;
  for (const auto& o : options) {
    if (o.label.empty()) throw UsageError("multiple_choice option with empty label");
    if (!labels.insert(o.label).second)
      throw UsageError("multiple_choice option label '" + o.label + "' is duplicated");
  }
  return TaskType{Kind::multiple_choice, std::move(options)};
}

std::string_view to_string(TaskType::Kind k) {
  switch (k) {
    case TaskType::Kind::multiple_choice: return "multiple_choice";
    case TaskType::Kind::numeric: return "numeric";
    case TaskType::Kind::text_concat: return "text_concat";
  }
  return "unknown";
}

std::string canonical_decimal(std::string_view literal) {
  bool negative = false;
  if (!literal.empty() && (literal.front() == '-' || literal.front() == '+')) {
    negative = literal.front() == '-';
    literal.remove_prefix(1);
  }
  std::string int_part;
  std::string frac_part;
  bool in_frac = false;
  for (char c : literal) {
    if (c == ',') continue;
    if (c == '.') {
      if (in_frac) throw UsageError("canonical_decimal: two decimal points");
      in_frac = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw UsageError("canonical_decimal: '" + std::string(literal) + "' is not a decimal");
    (in_frac ? frac_part : int_part) += c;
  }
  const auto nz = int_part.find_first_not_of('0');
  int_part = nz == std::string::npos ? "0" : int_part.substr(nz);
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();

  std::string out = int_part;
  if (!frac_part.empty()) out += "." + frac_part;
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

Answer normalize(std::string_view raw, const TaskType& task, const AnswerCues& cues) {
  Answer answer;
  answer.raw_text = std::string(raw);
  if (trim(raw).empty() || trim(raw) == kNoAnswerToken) {
    answer.elements.insert(Element{std::string(kNoAnswerToken)});
    return answer;
  }

  const auto span = locate_answer(raw, cues);
  if (!span.before.empty()) answer.reasoning_text = std::string(span.before);

  switch (task.kind) {
    case TaskType::Kind::multiple_choice:
      if (auto label = match_choice(span.text, task)) answer.elements.insert(Element{*label});
      break;
    case TaskType::Kind::numeric:
      answer.elements = match_numbers(span.text);
      break;
    case TaskType::Kind::text_concat:
      if (auto token = match_token(span.text, span.has_cue)) answer.elements.insert(Element{*token});
      break;
  }
  if (answer.elements.empty()) answer.elements.insert(Element{std::string(kNoAnswerToken)});
  return answer;
}

LastLetterTask generate_ll_task(std::span<const std::string> names) {
  if (names.empty()) throw UsageError("generate_ll_task: empty name list");
  std::string letters;
  std::string quoted;
  for (const auto& name : names) {
    std::size_t words = 0;
    std::size_t i = 0;
    while (i < name.size()) {
      while (i < name.size() && is_space(name[i])) ++i;
      std::size_t j = i;
      while (j < name.size() && !is_space(name[j])) ++j;
      if (j > i) {
        const auto word = std::string_view(name).substr(i, j - i);
        auto last = std::find_if(word.rbegin(), word.rend(), is_alpha);
        const char c = last != word.rend() ? *last : word.back();
        letters += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        ++words;
      }
      i = j;
    }
    if (words == 0) throw UsageError("generate_ll_task: name without words");
    if (!quoted.empty()) quoted += ", ";
    quoted += "\"" + std::string(trim(name)) + "\"";
  }

  LastLetterTask task;
  task.question = "Take the last letters of each word in " + quoted + " and concatenate them.";
  task.truth.answer = make_answer({letters}, letters);
  return task;
}

bool grade(const Answer& answer, const GroundTruth& truth, const TaskType& task) {
  if (answer.is_no_answer() || truth.answer.is_no_answer()) return false;
  if (task.kind != TaskType::Kind::numeric) return answer.elements == truth.answer.elements;

  if (answer.elements.size() != truth.answer.elements.size()) return false;
  std::vector<double> got;
  std::vector<double> want;
  std::vector<std::string> got_text;
  std::vector<std::string> want_text;
  auto split = [](const Answer& a, std::vector<double>& nums, std::vector<std::string>& text) {
    for (const auto& e : a.elements) {
      bool ok = false;
      const double v = parse_double(e.value, ok);
      if (ok && std::isfinite(v))
        nums.push_back(v);
      else
        text.push_back(e.value);
    }
  };
  split(answer, got, got_text);
  split(truth.answer, want, want_text);
  if (got.size() != want.size() || got_text != want_text) return false;
  // Sorted pairing is an optimal bottleneck matching on the real line.
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  for (std::size_t i = 0; i < got.size(); ++i)
    if (std::abs(got[i] - want[i]) > kNumericTolerance) return false;
  return true;
}

}  // namespace divproxy
