// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "divproxy/error.hpp"

namespace divproxy {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view to_string(Direction d) {
  return d == Direction::cumulative_max ? "cumulative_max" : "cumulative_min";
}

Direction parse_direction(std::string_view s) {
  if (s == "cumulative_max" || s == "max") return Direction::cumulative_max;
  if (s == "cumulative_min" || s == "min") return Direction::cumulative_min;
  throw UsageError("unknown direction '" + std::string(s) + "' (expected max|min)");
}

CalibrationCurve cumulative_curve(std::span<const LabeledObservation> obs, Direction direction,
                                  std::size_t min_bucket) {
  if (min_bucket == 0) throw UsageError("cumulative_curve: min_bucket must be >= 1");
  if (obs.size() < min_bucket)
    throw UsageError("cumulative_curve: " + std::to_string(obs.size()) +
                     " observations, fewer than min_bucket " + std::to_string(min_bucket));
  for (const auto& o : obs)
    if (!std::isfinite(o.measure_value)) throw UsageError("cumulative_curve: non-finite measure");

  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(obs.size());
  for (const auto& o : obs) sorted.emplace_back(o.measure_value, o.failed);
  if (direction == Direction::cumulative_max)
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  else
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

  CalibrationCurve curve;
  curve.direction = direction;
  std::size_t support = 0;
  std::size_t failures = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double threshold = sorted[i].first;
    while (i < sorted.size() && sorted[i].first == threshold) {
      ++support;
      if (sorted[i].second) ++failures;
      ++i;
    }
    if (support >= min_bucket)
      curve.points.push_back({threshold,
                              static_cast<double>(failures) / static_cast<double>(support), support});
  }

  if (curve.points.size() >= 2) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : curve.points) xy.emplace_back(p.threshold, p.failure_probability);
    curve.fit = linear_fit(xy);
  }
  return curve;
}

LinearFit linear_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw UsageError("linear_fit: need at least two points");
  const double n = static_cast<double>(points.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= n;
  mean_y /= n;

  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
    syy += (y - mean_y) * (y - mean_y);
  }
  if (sxx == 0.0) throw UsageError("linear_fit: all x values are equal");

  LinearFit fit;
  if (syy == 0.0) {
    fit.slope = 0.0;
    fit.intercept = mean_y;
    fit.r_squared = 1.0;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double ss_res = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - (fit.slope * x + fit.intercept);
    ss_res += r * r;
  }
  fit.r_squared = 1.0 - ss_res / syy;
  return fit;
}

std::string CalibrationReport::to_csv() const {
  std::string out = "direction,measure,temperature,threshold,failure_probability,support\n";
  for (const auto& e : entries)
    for (const auto& p : e.curve.points)
      out += std::string(to_string(e.curve.direction)) + "," + e.measure + "," +
             format_double(e.temperature) + "," + format_double(p.threshold) + "," +
             format_double(p.failure_probability) + "," + std::to_string(p.support) + "\n";
  return out;
}

nlohmann::json CalibrationReport::summary_json() const {
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json c = {{"measure", e.measure},
                        {"temperature", e.temperature},
                        {"direction", to_string(e.curve.direction)},
                        {"points", e.curve.points.size()}};
    if (e.curve.fit)
      c["fit"] = {{"slope", e.curve.fit->slope},
                  {"intercept", e.curve.fit->intercept},
                  {"r_squared", e.curve.fit->r_squared}};
    else
      c["fit"] = nullptr;
    if (!e.curve.points.empty())
      c["global_failure_probability"] = e.curve.points.back().failure_probability;
    curves.push_back(std::move(c));
  }
  return {{"curves", curves}};
}

CalibrationReport calibration_suite(std::span<const MeasureRow> rows,
                                    std::span<const std::string> measures,
                                    std::span<const Direction> directions, std::size_t min_bucket) {
  CalibrationReport report;
  if (measures.empty() || directions.empty()) return report;

  std::set<double> temperatures;
  for (const auto& r : rows) temperatures.insert(r.temperature);

  for (double t : temperatures) {
    for (const auto& m : measures) {
      std::vector<LabeledObservation> obs;
      for (const auto& r : rows) {
        if (r.temperature != t) continue;
        const auto it = r.measures.find(m);
        if (it == r.measures.end())
          throw DataError("row '" + r.question_id + "' has no value for measure '" + m + "'");
        obs.push_back({it->second, r.failed, r.question_id, r.temperature});
      }
      if (obs.size() < min_bucket)
        throw DataError("temperature " + format_double(t) + ", measure " + m + ": " +
                        std::to_string(obs.size()) + " rows, fewer than min_bucket " +
                        std::to_string(min_bucket));
      for (auto d : directions) report.entries.push_back({m, t, cumulative_curve(obs, d, min_bucket)});
    }
  }
  return report;
}

}  // namespace divproxy
