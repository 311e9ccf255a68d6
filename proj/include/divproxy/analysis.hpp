// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Calibration of a diversity measure against failure: cumulative
// failure-probability curves with a minimum support per point, and an
// ordinary-least-squares line through the curve.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace divproxy {

struct LabeledObservation {
  double measure_value = 0.0;
  bool failed = false;
  std::string question_id;
  double temperature = 0.0;
};

// cumulative_max: points for thresholds t ascending over {measure <= t}.
// cumulative_min: points for thresholds t descending over {measure >= t}.
enum class Direction { cumulative_max, cumulative_min };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

struct CurvePoint {
  double threshold = 0.0;
  double failure_probability = 0.0;
  std::size_t support = 0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

struct CalibrationCurve {
  Direction direction = Direction::cumulative_max;
  std::vector<CurvePoint> points;
  std::optional<LinearFit> fit;  // absent when the points admit no fit
};

inline constexpr std::size_t kDefaultMinBucket = 100;

// A point is emitted at each distinct measure value once the cumulative
// support reaches min_bucket; values before that are merged into the first
// point. UsageError when obs.size() < min_bucket, min_bucket == 0, or a
// measure value is not finite.
CalibrationCurve cumulative_curve(std::span<const LabeledObservation> obs, Direction direction,
                                  std::size_t min_bucket = kDefaultMinBucket);

// OLS of y on x. UsageError with fewer than two points or when all x are
// equal. Constant y yields slope 0 and r_squared 1.
LinearFit linear_fit(std::span<const std::pair<double, double>> points);

// One row of per-question measure output (a line of the measure JSONL).
struct MeasureRow {
  std::string question_id;
  double temperature = 0.0;
  std::map<std::string, double> measures;  // "entropy", "gini", "centroid"
  bool failed = false;
};

struct CalibrationEntry {
  std::string measure;
  double temperature = 0.0;
  CalibrationCurve curve;
};

struct CalibrationReport {
  std::vector<CalibrationEntry> entries;

  // direction,measure,temperature,threshold,failure_probability,support
  std::string to_csv() const;
  nlohmann::json summary_json() const;
};

// One curve per (temperature, measure, direction), ordered by temperature,
// then measure as listed, then direction as listed. DataError when a group
// has fewer than min_bucket rows or a row lacks a requested measure.
CalibrationReport calibration_suite(std::span<const MeasureRow> rows,
                                    std::span<const std::string> measures,
                                    std::span<const Direction> directions,
                                    std::size_t min_bucket = kDefaultMinBucket);

std::string format_double(double v);

}  // namespace divproxy
