// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Supervised failure prediction from diversity features.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "divproxy/embedding.hpp"
#include "divproxy/measures.hpp"
#include "divproxy/mlp.hpp"

namespace divproxy {

struct FeatureMask {
  bool entropy = true;
  bool gini = true;
  bool centroid = true;

  std::size_t count() const {
    return static_cast<std::size_t>(entropy) + static_cast<std::size_t>(gini) +
           static_cast<std::size_t>(centroid);
  }
  // "entropy+gini+centroid" style; the empty mask is "none".
  std::string name() const;
  // Accepts '+' or ',' separated feature names.
  static FeatureMask parse(std::string_view s);
  bool operator==(const FeatureMask&) const = default;
};

// Values for the features enabled in mask, in the order entropy, gini,
// centroid. Disabled features are absent from values.
struct FeatureVector {
  std::vector<double> values;
  FeatureMask mask;

  std::optional<double> entropy() const;
  std::optional<double> gini() const;
  std::optional<double> centroid() const;
};

// UsageError when the centroid feature is requested without an embedder.
FeatureVector extract_features(const SampleBatch& batch, const Embedder* embedder,
                               FeatureMask mask = {}, const DiversityOptions& options = {});

// Same projection from an existing report. UsageError if the centroid
// feature is requested and the report has none.
FeatureVector features_from_report(const DiversityReport& report, FeatureMask mask);

// Subset of an existing vector. UsageError if mask asks for a feature the
// vector does not carry.
FeatureVector project(const FeatureVector& features, FeatureMask mask);

struct LabeledExample {
  FeatureVector features;
  bool failed = false;
};

enum class BalanceStrategy { oversample_minority, undersample_majority };

// Equalizes class counts by duplicating random minority samples (default)
// or dropping random majority samples. Originals keep their order and the
// additions follow. UsageError unless both classes are present.
std::vector<LabeledExample> balance(std::span<const LabeledExample> data, std::uint64_t seed,
                                    BalanceStrategy strategy = BalanceStrategy::oversample_minority);

// Standardizes, then trains an Mlp. All examples must share one mask.
Mlp train_failure_model(std::span<const LabeledExample> data, const MlpConfig& config);

std::vector<double> score(const Mlp& model, std::span<const LabeledExample> data);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // thresholds descending, recall nondecreasing
  double auprc = 0.0;           // step-wise average precision
  double baseline = 0.0;        // positive prevalence

  // threshold,precision,recall
  std::string to_csv() const;
};

// Positives are failures. One point per distinct score, predicting positive
// for score >= threshold. AP = sum_k (R_k - R_{k-1}) * P_k. UsageError when
// there is no positive or the spans differ in length.
PrCurve pr_curve(std::span<const double> scores, std::span<const bool> labels);
PrCurve pr_curve(const Mlp& model, std::span<const LabeledExample> test);

// Highest precision among points whose recall is at least `recall`.
double precision_at_recall(const PrCurve& curve, double recall);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ClassificationMetrics classify(std::span<const double> scores, std::span<const bool> labels,
                               double threshold = 0.5);

struct AblationRow {
  FeatureMask mask;
  ClassificationMetrics metrics;
  double auprc = 0.0;
  double baseline = 0.0;
};

nlohmann::json to_json(std::span<const AblationRow> rows);
// mask,accuracy,precision,recall,f1,auprc,baseline
std::string ablation_csv(std::span<const AblationRow> rows);

struct TrainTestSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
};

// Seeded shuffle, then the first round(test_fraction * n) go to test.
TrainTestSplit split_train_test(std::span<const LabeledExample> data, double test_fraction,
                                std::uint64_t seed);

// For each mask: project, balance the training part (seeded), train with
// config, and evaluate on the unbalanced test part. Every row uses the same
// split and the same seeds.
std::vector<AblationRow> ablation_study(std::span<const LabeledExample> train,
                                        std::span<const LabeledExample> test,
                                        std::span<const FeatureMask> masks, const MlpConfig& config,
                                        std::uint64_t seed,
                                        BalanceStrategy strategy = BalanceStrategy::oversample_minority);

}  // namespace divproxy
