// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/datasets.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "divproxy/error.hpp"

namespace divproxy {

using nlohmann::json;

namespace {

constexpr std::array kFirstNames = {
    "Amy",    "Ben",    "Carla",  "Dmitri", "Elena", "Farid",  "Grace", "Hiro",   "Ines",
    "Jamal",  "Kara",   "Liam",   "Maya",   "Nadia", "Omar",   "Priya", "Quinn",  "Rosa",
    "Sven",   "Tara",   "Uma",    "Victor", "Wen",   "Ximena", "Yusuf", "Zoe",    "Aaron",
    "Bianca", "Chen",   "Dalia",  "Emeka",  "Freya", "Goran",  "Hana",  "Ivan",   "Jules",
    "Kofi",   "Lena",   "Mateo",  "Noor",   "Oscar", "Paula",  "Rafael", "Sofia", "Tomas",
    "Ursula", "Vera",   "Walter", "Yara",   "Zane"};

constexpr std::array kLastNames = {
    "Smith",  "Liu",      "Garcia", "Okafor", "Novak",  "Tanaka",  "Silva",   "Muller",
    "Khan",   "Rossi",    "Nguyen", "Haddad", "Berg",   "Kowalski", "Santos", "Ivanova",
    "Chen",   "Dubois",   "Park",   "Mensah", "Lopez",  "Sato",    "Fischer", "Ali",
    "Moreau", "Petrov",   "Costa",  "Jensen", "Reyes",  "Yilmaz",  "Adams",   "Brown",
    "Clarke", "Diaz",     "Evans",  "Flores", "Gupta",  "Hughes",  "Ito",     "Jones",
    "Kim",    "Lambert",  "Mehta",  "Nash",   "Olsen",  "Perez",   "Quigley", "Ramos",
    "Stone",  "Turner"};

constexpr std::array kWords = {
    "river",  "bank",    "library", "kitchen", "forest", "garage", "market", "school",
    "office", "theater", "museum",  "harbor",  "desert", "meadow", "castle", "bridge",
    "tunnel", "island",  "valley",  "station", "garden", "bakery", "closet", "attic"};

std::vector<std::pair<json, std::size_t>> split_items(std::string_view content) {
  std::vector<std::pair<json, std::size_t>> items;
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return items;

  if (content[first] == '[') {
    json doc;
    try {
      doc = json::parse(content);
    } catch (const json::parse_error& e) {
      const auto prefix = content.substr(0, std::min(e.byte, content.size()));
      const auto line = 1 + static_cast<std::size_t>(std::count(prefix.begin(), prefix.end(), '\n'));
      throw ParseError(e.what(), line);
    }
    // Line numbers are not tracked inside arrays; the element index is used.
    std::size_t index = 0;
    for (auto& item : doc) items.emplace_back(std::move(item), ++index);
    return items;
  }

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    const auto nl = content.find('\n', start);
    const auto line = content.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                          : nl - start);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        items.emplace_back(json::parse(line), line_no);
      } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_no);
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return items;
}

std::string id_field(const json& j, const char* key, std::size_t fallback, const char* prefix) {
  if (j.contains(key)) {
    const auto& v = j.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw std::invalid_argument(std::string("field '") + key + "' must be a string or integer");
  }
  return std::string(prefix) + std::to_string(fallback);
}

DatasetRecord parse_csqa(const json& j, std::size_t index) {
  DatasetRecord r;
  r.id = id_field(j, "id", index, "csqa-");
  const json& q = j.at("question");
  std::string stem;
  const json* choices = nullptr;
  if (q.is_object()) {
    stem = q.at("stem").get<std::string>();
    choices = &q.at("choices");
  } else {
    stem = q.get<std::string>();
    choices = &j.at("choices");
  }
  std::vector<ChoiceOption> options;
  for (const auto& c : *choices)
    options.push_back({c.at("label").get<std::string>(), c.at("text").get<std::string>()});
  r.task = TaskType::multiple_choice(std::move(options));

  r.question = stem + "\nAnswer Choices:";
  for (const auto& o : r.task.options) r.question += " (" + o.label + ") " + o.text;

  const auto key = j.at("answerKey").get<std::string>();
  if (std::none_of(r.task.options.begin(), r.task.options.end(),
                   [&](const ChoiceOption& o) { return o.label == key; }))
    throw std::invalid_argument("answerKey '" + key + "' is not an option label");
  r.truth.answer = make_answer({key}, key);
  return r;
}

DatasetRecord parse_draw(const json& j, std::size_t index) {
  DatasetRecord r;
  r.id = j.contains("iIndex") ? id_field(j, "iIndex", index, "draw-") : id_field(j, "id", index, "draw-");
  r.question = j.at("sQuestion").get<std::string>();
  r.task = TaskType::numeric();
  std::string raw;
  for (const auto& s : j.at("lSolutions")) {
    std::string literal;
    if (s.is_number()) {
      std::ostringstream os;
      os.precision(15);
      os << s.get<double>();
      literal = os.str();
    } else {
      literal = s.get<std::string>();
    }
    r.truth.answer.elements.insert(Element{canonical_decimal(literal)});
    raw += (raw.empty() ? "" : ", ") + literal;
  }
  if (r.truth.answer.elements.empty()) throw std::invalid_argument("lSolutions is empty");
  r.truth.answer.raw_text = raw;
  if (j.contains("lEquations") && !j.at("lEquations").empty()) {
    std::string eqs;
    for (const auto& e : j.at("lEquations")) eqs += (eqs.empty() ? "" : "; ") + e.get<std::string>();
    r.truth.explanation = "The equations are " + eqs + ".";
  }
  return r;
}

DatasetRecord parse_ll(const json& j, std::size_t index) {
  DatasetRecord r;
  r.id = id_field(j, "id", index, "ll-");
  r.task = TaskType::text_concat();
  if (j.contains("names")) {
    const auto names = j.at("names").get<std::vector<std::string>>();
    auto generated = generate_ll_task(names);
    r.question = std::move(generated.question);
    r.truth = std::move(generated.truth);
  } else {
    r.question = j.at("question").get<std::string>();
  }
  if (j.contains("answer")) {
    std::string answer = j.at("answer").get<std::string>();
    for (auto& c : answer) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (answer.empty()) throw std::invalid_argument("answer is empty");
    r.truth.answer = make_answer({answer}, answer);
  } else if (!j.contains("names")) {
    throw std::invalid_argument("record needs 'answer' or 'names'");
  }
  return r;
}

}  // namespace

DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "csqa_json") return DatasetFormat::csqa_json;
  if (s == "draw1k_json") return DatasetFormat::draw1k_json;
  if (s == "ll_json") return DatasetFormat::ll_json;
  if (s == "records_jsonl") return DatasetFormat::records_jsonl;
  throw UsageError("unknown dataset format '" + std::string(s) +
                   "' (expected csqa_json|draw1k_json|ll_json|records_jsonl)");
}

std::string_view to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::csqa_json: return "csqa_json";
    case DatasetFormat::draw1k_json: return "draw1k_json";
    case DatasetFormat::ll_json: return "ll_json";
    case DatasetFormat::records_jsonl: return "records_jsonl";
  }
  return "unknown";
}

std::vector<DatasetRecord> parse_dataset(std::string_view content, DatasetFormat format) {
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  for (const auto& [item, where] : split_items(content)) {
    DatasetRecord r;
    try {
      switch (format) {
        case DatasetFormat::csqa_json: r = parse_csqa(item, where); break;
        case DatasetFormat::draw1k_json: r = parse_draw(item, where); break;
        case DatasetFormat::ll_json: r = parse_ll(item, where); break;
        case DatasetFormat::records_jsonl: r = record_from_json(item); break;
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed ") + std::string(to_string(format)) + " record: " + e.what(),
                       where);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("malformed ") + std::string(to_string(format)) + " record: " + e.what(),
                       where);
    } catch (const UsageError& e) {
      throw ParseError(std::string("invalid ") + std::string(to_string(format)) + " record: " + e.what(),
                       where);
    }
    if (!ids.insert(r.id).second) throw ValidationError("duplicate record id '" + r.id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), format);
}

json to_json(const Answer& answer) {
  json elements = json::array();
  for (const auto& e : answer.elements) elements.push_back(e.value);
  json j = {{"elements", elements}, {"raw_text", answer.raw_text}};
  if (answer.reasoning_text) j["reasoning_text"] = *answer.reasoning_text;
  return j;
}

json to_json(const TaskType& task) {
  json j = {{"kind", to_string(task.kind)}};
  if (task.kind == TaskType::Kind::multiple_choice) {
    j["options"] = json::array();
    for (const auto& o : task.options) j["options"].push_back({{"label", o.label}, {"text", o.text}});
  }
  return j;
}

json to_json(const DatasetRecord& record) {
  json truth = {{"answer", to_json(record.truth.answer)}};
  if (record.truth.explanation) truth["explanation"] = *record.truth.explanation;
  return {{"id", record.id}, {"question", record.question}, {"task", to_json(record.task)},
          {"truth", truth}};
}

Answer answer_from_json(const json& j) {
  Answer a;
  for (const auto& e : j.at("elements")) a.elements.insert(Element{e.get<std::string>()});
  a.raw_text = j.value("raw_text", std::string{});
  if (j.contains("reasoning_text")) a.reasoning_text = j.at("reasoning_text").get<std::string>();
  return a;
}

TaskType task_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "numeric") return TaskType::numeric();
  if (kind == "text_concat") return TaskType::text_concat();
  if (kind == "multiple_choice") {
    std::vector<ChoiceOption> options;
    for (const auto& o : j.at("options"))
      options.push_back({o.at("label").get<std::string>(), o.at("text").get<std::string>()});
    return TaskType::multiple_choice(std::move(options));
  }
  throw std::invalid_argument("unknown task kind '" + kind + "'");
}

DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  r.id = j.at("id").get<std::string>();
  r.question = j.at("question").get<std::string>();
  r.task = task_from_json(j.at("task"));
  r.truth.answer = answer_from_json(j.at("truth").at("answer"));
  if (r.truth.answer.elements.empty()) throw std::invalid_argument("truth answer is empty");
  if (j.at("truth").contains("explanation"))
    r.truth.explanation = j.at("truth").at("explanation").get<std::string>();
  return r;
}

std::string dump_records(std::span<const DatasetRecord> records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

void save_records(std::span<const DatasetRecord> records, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << dump_records(records);
}

std::vector<DatasetRecord> synthesize_ll(std::size_t count, std::size_t words_per_name,
                                         std::uint64_t seed) {
  if (count == 0) throw UsageError("synthesize_ll: count must be >= 1");
  if (words_per_name == 0) throw UsageError("synthesize_ll: words_per_name must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> first(0, kFirstNames.size() - 1);
  std::uniform_int_distribution<std::size_t> last(0, kLastNames.size() - 1);

  std::vector<DatasetRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    for (std::size_t w = 0; w + 1 < words_per_name; ++w) name += std::string(kFirstNames[first(rng)]) + " ";
    name += words_per_name == 1 ? kFirstNames[first(rng)] : kLastNames[last(rng)];

    const std::vector<std::string> names{name};
    auto task = generate_ll_task(names);
    char id[32];
    std::snprintf(id, sizeof id, "ll-%05zu", i + 1);
    out.push_back({id, std::move(task.question), TaskType::text_concat(), std::move(task.truth)});
  }
  return out;
}

std::vector<DatasetRecord> synthesize_choice(std::size_t count, std::size_t option_count,
                                             std::uint64_t seed) {
  if (count == 0) throw UsageError("synthesize_choice: count must be >= 1");
  if (option_count < 2 || option_count > 26)
    throw UsageError("synthesize_choice: option_count must be in [2, 26]");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_label(0, option_count - 1);

  std::vector<DatasetRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::size_t> words(kWords.size());
    std::iota(words.begin(), words.end(), std::size_t{0});
    std::shuffle(words.begin(), words.end(), rng);
    std::vector<ChoiceOption> options;
    for (std::size_t k = 0; k < option_count; ++k)
      options.push_back({std::string(1, static_cast<char>('A' + k)),
                         std::string(kWords[words[k % words.size()]])});
    const auto label = options[pick_label(rng)].label;

    DatasetRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "mc-%05zu", i + 1);
    r.id = id;
    r.task = TaskType::multiple_choice(std::move(options));
    r.question = "Synthetic question " + std::to_string(i + 1) + ": where would you most likely find it?\nAnswer Choices:";
    for (const auto& o : r.task.options) r.question += " (" + o.label + ") " + o.text;
    r.truth.answer = make_answer({label}, label);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DatasetRecord> synthesize_arithmetic(std::size_t count, std::uint64_t seed) {
  if (count == 0) throw UsageError("synthesize_arithmetic: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> value(1, 60);

  std::vector<DatasetRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int x = value(rng);
    int y = value(rng);
    if (y == x) y = x + 1;
    const int sum = x + y;
    const int diff = x - y;

    DatasetRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "arith-%05zu", i + 1);
    r.id = id;
    r.task = TaskType::numeric();
    r.question = "The sum of two numbers is " + std::to_string(sum) + " and their difference is " +
                 std::to_string(diff) + ". Find the two numbers.";
    const auto xs = std::to_string(x);
    const auto ys = std::to_string(y);
    r.truth.answer = make_answer({xs, ys}, xs + ", " + ys);
    r.truth.explanation = "The equations are x + y = " + std::to_string(sum) +
                          "; x - y = " + std::to_string(diff) + ".";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace divproxy
