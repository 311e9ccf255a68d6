// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "divproxy/analysis.hpp"
#include "divproxy/error.hpp"
#include "divproxy/hashing.hpp"

namespace divproxy {

namespace {

std::optional<double> nth_enabled(const FeatureVector& f, int which) {
  const bool flags[3] = {f.mask.entropy, f.mask.gini, f.mask.centroid};
  if (!flags[which]) return std::nullopt;
  std::size_t pos = 0;
  for (int i = 0; i < which; ++i) pos += flags[i] ? 1 : 0;
  return f.values.at(pos);
}

void to_matrix(std::span<const LabeledExample> data, Eigen::MatrixXd& x, Eigen::RowVectorXd& y) {
  const auto dim = static_cast<Eigen::Index>(data.front().features.values.size());
  x.resize(dim, static_cast<Eigen::Index>(data.size()));
  y.resize(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& f = data[i].features;
    if (!(f.mask == data.front().features.mask))
      throw UsageError("examples carry different feature masks");
    for (Eigen::Index d = 0; d < dim; ++d) x(d, static_cast<Eigen::Index>(i)) = f.values[static_cast<std::size_t>(d)];
    y(static_cast<Eigen::Index>(i)) = data[i].failed ? 1.0 : 0.0;
  }
}

}  // namespace

std::string FeatureMask::name() const {
  std::string out;
  auto add = [&](bool on, const char* n) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += n;
  };
  add(entropy, "entropy");
  add(gini, "gini");
  add(centroid, "centroid");
  return out.empty() ? "none" : out;
}

FeatureMask FeatureMask::parse(std::string_view s) {
  FeatureMask m{false, false, false};
  std::size_t i = 0;
  while (i <= s.size()) {
    auto j = s.find_first_of("+,", i);
    if (j == std::string_view::npos) j = s.size();
    auto part = s.substr(i, j - i);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (part == "entropy")
      m.entropy = true;
    else if (part == "gini")
      m.gini = true;
    else if (part == "centroid")
      m.centroid = true;
    else if (part == "all" || part == "full")
      m = FeatureMask{};
    else if (!part.empty() && part != "none")
      throw UsageError("unknown feature '" + std::string(part) + "' (expected entropy|gini|centroid)");
    i = j + 1;
  }
  return m;
}

std::optional<double> FeatureVector::entropy() const { return nth_enabled(*this, 0); }
std::optional<double> FeatureVector::gini() const { return nth_enabled(*this, 1); }
std::optional<double> FeatureVector::centroid() const { return nth_enabled(*this, 2); }

FeatureVector features_from_report(const DiversityReport& report, FeatureMask mask) {
  FeatureVector f;
  f.mask = mask;
  if (mask.entropy) f.values.push_back(report.entropy);
  if (mask.gini) f.values.push_back(report.gini);
  if (mask.centroid) {
    if (!report.centroid_distance) throw UsageError("centroid feature requested but not measured");
    f.values.push_back(*report.centroid_distance);
  }
  return f;
}

FeatureVector extract_features(const SampleBatch& batch, const Embedder* embedder,
                               FeatureMask mask, const DiversityOptions& options) {
  if (mask.centroid && embedder == nullptr)
    throw UsageError("centroid feature requested without an embedder");
  const auto report = diversity_report(batch, mask.centroid ? embedder : nullptr, options);
  return features_from_report(report, mask);
}

FeatureVector project(const FeatureVector& features, FeatureMask mask) {
  FeatureVector out;
  out.mask = mask;
  auto take = [&](bool want, std::optional<double> v, const char* name) {
    if (!want) return;
    if (!v) throw UsageError(std::string("feature '") + name + "' is not present");
    out.values.push_back(*v);
  };
  take(mask.entropy, features.entropy(), "entropy");
  take(mask.gini, features.gini(), "gini");
  take(mask.centroid, features.centroid(), "centroid");
  return out;
}

std::vector<LabeledExample> balance(std::span<const LabeledExample> data, std::uint64_t seed,
                                    BalanceStrategy strategy) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data[i].failed ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw UsageError("balance: both classes must be present");

  const auto& minority = pos.size() < neg.size() ? pos : neg;
  const auto& majority = pos.size() < neg.size() ? neg : pos;
  std::mt19937_64 rng(mix_seed({seed, 0xba1a'9ce0ULL}));

  if (strategy == BalanceStrategy::oversample_minority) {
    std::vector<LabeledExample> out(data.begin(), data.end());
    std::uniform_int_distribution<std::size_t> pick(0, minority.size() - 1);
    for (std::size_t k = minority.size(); k < majority.size(); ++k) out.push_back(data[minority[pick(rng)]]);
    return out;
  }

  std::vector<std::size_t> keep = majority;
  std::shuffle(keep.begin(), keep.end(), rng);
  keep.resize(minority.size());
  keep.insert(keep.end(), minority.begin(), minority.end());
  std::sort(keep.begin(), keep.end());
  std::vector<LabeledExample> out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(data[i]);
  return out;
}

Mlp train_failure_model(std::span<const LabeledExample> data, const MlpConfig& config) {
  if (data.empty()) throw UsageError("train_failure_model: no data");
  if (data.front().features.values.empty()) throw UsageError("train_failure_model: empty feature mask");
  Eigen::MatrixXd x;
  Eigen::RowVectorXd y;
  to_matrix(data, x, y);
  return train_mlp(x, y, config);
}

std::vector<double> score(const Mlp& model, std::span<const LabeledExample> data) {
  if (data.empty()) return {};
  Eigen::MatrixXd x;
  Eigen::RowVectorXd y;
  to_matrix(data, x, y);
  const auto p = model.predict(x);
  return std::vector<double>(p.data(), p.data() + p.size());
}

PrCurve pr_curve(std::span<const double> scores, std::span<const bool> labels) {
  if (scores.size() != labels.size()) throw UsageError("pr_curve: scores and labels differ in length");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0) throw UsageError("pr_curve: test set has no positives");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  PrCurve curve;
  curve.baseline = static_cast<double>(positives) / static_cast<double>(scores.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  double prev_recall = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (labels[order[i]] ? tp : fp) += 1;
      ++i;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.points.push_back({recall, precision, t});
    curve.auprc += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return curve;
}

PrCurve pr_curve(const Mlp& model, std::span<const LabeledExample> test) {
  const auto s = score(model, test);
  std::unique_ptr<bool[]> labels(new bool[test.size()]);
  for (std::size_t i = 0; i < test.size(); ++i) labels[i] = test[i].failed;
  return pr_curve(s, std::span<const bool>(labels.get(), test.size()));
}

double precision_at_recall(const PrCurve& curve, double recall) {
  double best = 0.0;
  for (const auto& p : curve.points)
    if (p.recall >= recall) best = std::max(best, p.precision);
  return best;
}

std::string PrCurve::to_csv() const {
  std::string out = "threshold,precision,recall\n";
  for (const auto& p : points)
    out += format_double(p.threshold) + "," + format_double(p.precision) + "," + format_double(p.recall) + "\n";
  return out;
}

ClassificationMetrics classify(std::span<const double> scores, std::span<const bool> labels,
                               double threshold) {
  if (scores.size() != labels.size()) throw UsageError("classify: scores and labels differ in length");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i]) ++tp;
    else if (predicted) ++fp;
    else if (labels[i]) ++fn;
    else ++tn;
  }
  ClassificationMetrics m;
  const double n = static_cast<double>(scores.size());
  m.accuracy = n > 0 ? static_cast<double>(tp + tn) / n : 0.0;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

nlohmann::json to_json(std::span<const AblationRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows)
    out.push_back({{"mask", r.mask.name()},
                   {"accuracy", r.metrics.accuracy},
                   {"precision", r.metrics.precision},
                   {"recall", r.metrics.recall},
                   {"f1", r.metrics.f1},
                   {"auprc", r.auprc},
                   {"baseline", r.baseline}});
  return out;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::string out = "mask,accuracy,precision,recall,f1,auprc,baseline\n";
  for (const auto& r : rows)
    out += r.mask.name() + "," + format_double(r.metrics.accuracy) + "," +
           format_double(r.metrics.precision) + "," + format_double(r.metrics.recall) + "," +
           format_double(r.metrics.f1) + "," + format_double(r.auprc) + "," +
           format_double(r.baseline) + "\n";
  return out;
}

TrainTestSplit split_train_test(std::span<const LabeledExample> data, double test_fraction,
                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw UsageError("split_train_test: test_fraction must be in (0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed({seed, 0x5b1170ULL}));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size())));
  TrainTestSplit split;
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < n_test ? split.test : split.train).push_back(data[order[k]]);
  return split;
}

std::vector<AblationRow> ablation_study(std::span<const LabeledExample> train,
                                        std::span<const LabeledExample> test,
                                        std::span<const FeatureMask> masks, const MlpConfig& config,
                                        std::uint64_t seed, BalanceStrategy strategy) {
  if (masks.empty()) throw UsageError("ablation_study: no masks");
  std::vector<AblationRow> rows;
  for (const auto& mask : masks) {
    if (mask.count() == 0) throw UsageError("ablation_study: empty feature mask");
    std::vector<LabeledExample> train_m;
    std::vector<LabeledExample> test_m;
    for (const auto& e : train) train_m.push_back({project(e.features, mask), e.failed});
    for (const auto& e : test) test_m.push_back({project(e.features, mask), e.failed});

    const auto balanced = balance(train_m, seed, strategy);
    const auto model = train_failure_model(balanced, config);
    const auto s = score(model, test_m);
    std::unique_ptr<bool[]> labels(new bool[test_m.size()]);
    for (std::size_t i = 0; i < test_m.size(); ++i) labels[i] = test_m[i].failed;
    const std::span<const bool> l(labels.get(), test_m.size());

    const auto curve = pr_curve(s, l);
    rows.push_back({mask, classify(s, l), curve.auprc, curve.baseline});
  }
  return rows;
}

}  // namespace divproxy
