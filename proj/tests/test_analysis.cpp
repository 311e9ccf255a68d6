// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>
#include <Eigen/Dense>

#include "divproxy/analysis.hpp"
#include "divproxy/error.hpp"

using namespace divproxy;

namespace {

std::vector<LabeledObservation> two_blocks() {
  std::vector<LabeledObservation> obs;
  for (int i = 0; i < 100; ++i) obs.push_back({0.0, false, "c" + std::to_string(i), 0.7});
  for (int i = 0; i < 100; ++i) obs.push_back({1.0, true, "f" + std::to_string(i), 0.7});
  return obs;
}

// Normal-equations oracle in long double.
LinearFit oracle_fit(const std::vector<std::pair<double, double>>& pts) {
  long double n = pts.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += static_cast<long double>(x) * x;
    sxy += static_cast<long double>(x) * y;
  }
  const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const long double intercept = (sy - slope * sx) / n;
  long double ss_res = 0, ss_tot = 0;
  const long double mean = sy / n;
  for (auto [x, y] : pts) {
    const long double r = y - (slope * x + intercept);
    ss_res += r * r;
    ss_tot += (y - mean) * (y - mean);
  }
  const double r2 = ss_tot == 0 ? 1.0 : static_cast<double>(1 - ss_res / ss_tot);
  return {static_cast<double>(slope), static_cast<double>(intercept), r2};
}

}  // namespace

TEST_CASE("cumulative_curve: worked examples") {
  const auto obs = two_blocks();
  const auto up = cumulative_curve(obs, Direction::cumulative_max, 100);
  REQUIRE(up.points.size() == 2);
  CHECK(up.points[0].threshold == 0.0);
  CHECK(up.points[0].failure_probability == 0.0);
  CHECK(up.points[0].support == 100);
  CHECK(up.points[1].threshold == 1.0);
  CHECK(up.points[1].failure_probability == 0.5);
  CHECK(up.points[1].support == 200);

  const auto down = cumulative_curve(obs, Direction::cumulative_min, 100);
  REQUIRE(down.points.size() == 2);
  CHECK(down.points[0].threshold == 1.0);
  CHECK(down.points[0].failure_probability == 1.0);
  CHECK(down.points[0].support == 100);
  CHECK(down.points[1].threshold == 0.0);
  CHECK(down.points[1].failure_probability == 0.5);
  CHECK(down.points[1].support == 200);

  std::vector<LabeledObservation> all_failed;
  for (int i = 0; i < 150; ++i) all_failed.push_back({i * 0.01, true, "q", 0.5});
  for (const auto& p : cumulative_curve(all_failed, Direction::cumulative_max, 10).points)
    CHECK(p.failure_probability == 1.0);
}

TEST_CASE("cumulative_curve: merged points take the last threshold reached") {
  std::vector<LabeledObservation> obs;
  for (int i = 0; i < 5; ++i) obs.push_back({static_cast<double>(i), i % 2 == 0, "q", 0.7});
  const auto up = cumulative_curve(obs, Direction::cumulative_max, 3);
  REQUIRE(up.points.size() == 3);
  CHECK(up.points[0].threshold == 2.0);
  CHECK(up.points[0].support == 3);
  const auto down = cumulative_curve(obs, Direction::cumulative_min, 3);
  CHECK(down.points[0].threshold == 2.0);
  CHECK(down.points.back().threshold == 0.0);
}

TEST_CASE("cumulative_curve: errors") {
  const auto obs = two_blocks();
  CHECK_THROWS_AS(cumulative_curve(obs, Direction::cumulative_max, 201), UsageError);
  CHECK_THROWS_AS(cumulative_curve(obs, Direction::cumulative_max, 0), UsageError);
  auto bad = obs;
  bad[3].measure_value = std::nan("");
  CHECK_THROWS_AS(cumulative_curve(bad, Direction::cumulative_max, 100), UsageError);
}

TEST_CASE("property: curve invariants") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 20 + rng() % 200;
    std::vector<LabeledObservation> obs;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = static_cast<double>(rng() % 15) / 7.0;
      const bool f = rng() % 3 == 0;
      failed += f;
      obs.push_back({v, f, "q", 0.7});
    }
    const std::size_t min_bucket = 1 + rng() % 20;
    for (auto dir : {Direction::cumulative_max, Direction::cumulative_min}) {
      const auto c = cumulative_curve(obs, dir, min_bucket);
      REQUIRE_FALSE(c.points.empty());
      for (std::size_t i = 0; i < c.points.size(); ++i) {
        const auto& p = c.points[i];
        CHECK(p.support >= min_bucket);
        CHECK(p.failure_probability >= 0.0);
        CHECK(p.failure_probability <= 1.0);
        if (i > 0) {
          CHECK(p.support > c.points[i - 1].support);
          if (dir == Direction::cumulative_max) CHECK(p.threshold > c.points[i - 1].threshold);
          else CHECK(p.threshold < c.points[i - 1].threshold);
        }
      }
      CHECK(c.points.back().support == n);
      CHECK(c.points.back().failure_probability == static_cast<double>(failed) / static_cast<double>(n));
    }
  }
}

TEST_CASE("linear_fit: worked examples") {
  std::vector<std::pair<double, double>> line = {{0, 1}, {1, 3}, {2, 5}, {3, 7}};
  auto f = linear_fit(line);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));

  std::vector<std::pair<double, double>> tent = {{0, 0}, {1, 1}, {2, 0}};
  f = linear_fit(tent);
  CHECK(std::abs(f.slope) < 1e-15);
  CHECK(f.intercept == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(f.r_squared) < 1e-15);

  std::vector<std::pair<double, double>> flat = {{0, 2}, {1, 2}, {5, 2}};
  f = linear_fit(flat);
  CHECK(f.slope == 0.0);
  CHECK(f.r_squared == 1.0);

  std::vector<std::pair<double, double>> vertical = {{1, 0}, {1, 1}};
  CHECK_THROWS_AS(linear_fit(vertical), UsageError);
  std::vector<std::pair<double, double>> single = {{1, 0}};
  CHECK_THROWS_AS(linear_fit(single), UsageError);
}

TEST_CASE("property: linear_fit matches the normal equations; R^2 is affine invariant in x") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = g(rng) * 3;
      pts.push_back({x, 0.7 * x + g(rng)});
    }
    const auto f = linear_fit(pts);
    const auto o = oracle_fit(pts);
    CHECK(std::abs(f.slope - o.slope) <= 1e-10);
    CHECK(std::abs(f.intercept - o.intercept) <= 1e-10);
    CHECK(std::abs(f.r_squared - o.r_squared) <= 1e-10);

    auto scaled = pts;
    for (auto& [x, y] : scaled) x = 2.5 * x - 4.0;
    const auto s = linear_fit(scaled);
    CHECK(std::abs(s.r_squared - f.r_squared) <= 1e-9);
    CHECK(std::abs(s.slope - f.slope / 2.5) <= 1e-9);
  }
}

TEST_CASE("calibration_suite: cardinality, empty measure list, and errors") {
  std::vector<MeasureRow> rows;
  for (int i = 0; i < 300; ++i)
    rows.push_back({"q" + std::to_string(i), 0.7, {{"entropy", i * 0.01}, {"gini", i * 0.002}}, i % 3 == 0});
  const std::vector<std::string> measures = {"entropy", "gini"};
  const std::vector<Direction> dirs = {Direction::cumulative_max, Direction::cumulative_min};
  const auto rep = calibration_suite(rows, measures, dirs, 100);
  CHECK(rep.entries.size() == 4);
  CHECK(rep.to_csv().rfind("direction,measure,temperature,threshold,failure_probability,support\n", 0) == 0);
  CHECK(rep.summary_json().at("curves").size() == 4);

  const std::vector<std::string> none;
  CHECK(calibration_suite(rows, none, dirs, 100).entries.empty());

  CHECK_THROWS_AS(calibration_suite(rows, measures, dirs, 301), DataError);
  const std::vector<std::string> centroid = {"centroid"};
  CHECK_THROWS_AS(calibration_suite(rows, centroid, dirs, 100), DataError);

  // Two temperatures: one group per temperature.
  auto two = rows;
  for (auto& r : two) r.temperature = 0.3;
  two.insert(two.end(), rows.begin(), rows.end());
  const auto rep2 = calibration_suite(two, measures, dirs, 100);
  REQUIRE(rep2.entries.size() == 8);
  CHECK(rep2.entries.front().temperature == 0.3);
  CHECK(rep2.entries.back().temperature == 0.7);
}

TEST_CASE("simulated grid: entropy curve rises") {
  // Low-diversity questions should fail less often than high-diversity ones.
  std::mt19937_64 rng(53);
  std::vector<LabeledObservation> obs;
  for (int i = 0; i < 2000; ++i) {
    const double v = std::uniform_real_distribution<double>(0.0, 1.4)(rng);
    const bool f = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < v / 1.4;
    obs.push_back({v, f, "q", 0.7});
  }
  const auto c = cumulative_curve(obs, Direction::cumulative_max, 100);
  CHECK(c.points.front().failure_probability < c.points.back().failure_probability);
  REQUIRE(c.fit.has_value());
  CHECK(c.fit->slope > 0.0);
}
