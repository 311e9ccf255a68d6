// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include <doctest.h>

#include "divproxy/datasets.hpp"
#include "divproxy/error.hpp"

using namespace divproxy;

namespace {

const char* kCsqa = R"({"id": "q1", "question": {"stem": "Where are books kept?", "choices": [{"label": "A", "text": "bank"}, {"label": "B", "text": "library"}]}, "answerKey": "B"}
{"id": "q2", "question": {"stem": "Where is money kept?", "choices": [{"label": "A", "text": "bank"}, {"label": "B", "text": "library"}]}, "answerKey": "A", "extra": 1}
{"id": "q3", "question": {"stem": "Where are trains?", "choices": [{"label": "A", "text": "station"}, {"label": "B", "text": "sea"}]}, "answerKey": "A"}
)";

}  // namespace

TEST_CASE("csqa: three records, multiple choice, options preserved") {
  const auto rs = parse_dataset(kCsqa, DatasetFormat::csqa_json);
  REQUIRE(rs.size() == 3);
  for (const auto& r : rs) CHECK(r.task.kind == TaskType::Kind::multiple_choice);
  CHECK(rs[0].task.options.size() == 2);
  CHECK(rs[0].task.options[1].text == "library");
  CHECK(render_elements(rs[0].truth.answer) == "B");
  CHECK(rs[0].question.find("(B) library") != std::string::npos);
}

TEST_CASE("draw1k: equations become the explanation") {
  const auto rs = parse_dataset(
      R"([{"iIndex": 7, "sQuestion": "Two numbers sum to 10 and differ by 2.", "lSolutions": [6.0, 4.0], "lEquations": ["x+y=10", "x-y=2"]}])",
      DatasetFormat::draw1k_json);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].id == "7");
  CHECK(rs[0].task.kind == TaskType::Kind::numeric);
  CHECK(render_elements(rs[0].truth.answer) == "4, 6");
  REQUIRE(rs[0].truth.explanation.has_value());
  CHECK(rs[0].truth.explanation->find("x+y=10") != std::string::npos);
}

TEST_CASE("ll: text_concat with lowercase truth") {
  const auto rs = parse_dataset(R"({"id": "a", "question": "q?", "answer": "NH"}
{"id": "b", "names": ["Amy Liu Chen"]})",
                                DatasetFormat::ll_json);
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].task.kind == TaskType::Kind::text_concat);
  CHECK(render_elements(rs[0].truth.answer) == "nh");
  CHECK(render_elements(rs[1].truth.answer) == "yun");
}

TEST_CASE("malformed records report their line") {
  const std::string bad = std::string(R"({"id": "a", "question": "q", "answer": "x"})") + "\n\n{not json}\n";
  try {
    parse_dataset(bad, DatasetFormat::ll_json);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  try {
    parse_dataset(R"({"id": "a", "question": "q"})", DatasetFormat::ll_json);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  CHECK_THROWS_AS(parse_dataset(R"({"id": "q1", "question": {"stem": "s", "choices": [{"label": "A", "text": "x"}, {"label": "B", "text": "y"}]}, "answerKey": "Z"})",
                                DatasetFormat::csqa_json),
                  ParseError);
}

TEST_CASE("duplicate ids are validation errors") {
  CHECK_THROWS_AS(parse_dataset(R"({"id": "a", "question": "q", "answer": "x"}
{"id": "a", "question": "r", "answer": "y"})",
                                DatasetFormat::ll_json),
                  ValidationError);
}

TEST_CASE("synthesize_ll: size, determinism, truth length") {
  const auto a = synthesize_ll(3000, 2, 5);
  CHECK(a.size() == 3000);
  CHECK(dump_records(a) == dump_records(synthesize_ll(3000, 2, 5)));
  CHECK(dump_records(a) != dump_records(synthesize_ll(3000, 2, 6)));
  for (const auto& r : a) CHECK(render_elements(r.truth.answer).size() == 2);
}

TEST_CASE("property: records round-trip through serialization") {
  for (const auto& rs : {synthesize_ll(50, 3, 1), synthesize_choice(50, 5, 2), synthesize_arithmetic(50, 3),
                         parse_dataset(kCsqa, DatasetFormat::csqa_json)}) {
    const auto text = dump_records(rs);
    const auto back = parse_dataset(text, DatasetFormat::records_jsonl);
    REQUIRE(back.size() == rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
      CHECK(back[i].id == rs[i].id);
      CHECK(back[i].question == rs[i].question);
      CHECK(back[i].task == rs[i].task);
      CHECK(back[i].truth.answer.elements == rs[i].truth.answer.elements);
      CHECK(back[i].truth.answer.raw_text == rs[i].truth.answer.raw_text);
      CHECK(back[i].truth.explanation == rs[i].truth.explanation);
    }
    CHECK(dump_records(back) == text);
  }
}

TEST_CASE("synthetic arithmetic carries explanations and grades its own truth") {
  for (const auto& r : synthesize_arithmetic(100, 9)) {
    CHECK(r.truth.explanation.has_value());
    CHECK(grade(r.truth.answer, r.truth, r.task));
    const auto reparsed = normalize("The answer is " + render_elements(r.truth.answer) + ".", r.task);
    CHECK(grade(reparsed, r.truth, r.task));
  }
}
