// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <doctest.h>

#include "divproxy/error.hpp"
#include "divproxy/mlp.hpp"
#include "divproxy/predictor.hpp"

using namespace divproxy;

namespace {

// Exhaustive oracle: precision/recall at every score threshold, then
// step-wise AP with exact rational arithmetic over counts.
double oracle_ap(const std::vector<double>& scores, const std::vector<bool>& labels) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (labels[i] ? tp : fp) += 1;
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

std::unique_ptr<bool[]> as_bools(const std::vector<bool>& v) {
  auto out = std::make_unique<bool[]>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

double max_param_rel_error(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& y) {
  MlpGradients g;
  net.loss(x, y, &g);
  Mlp probe = net;
  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = probe.loss(x, y);
    param = saved - h;
    const double down = probe.loss(x, y);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.layers()[l];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) check(layer.weights(r, c), g.weights[l](r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) check(layer.bias(r), g.bias[l](r));
  }
  return worst;
}

std::vector<LabeledExample> two_clusters(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool failed = i % 2 == 0;
    const double c = failed ? 1.0 : -1.0;
    FeatureVector f;
    f.mask = FeatureMask{true, true, true};
    f.values = {c + g(rng), c + g(rng), -c + g(rng)};
    out.push_back({f, failed});
  }
  return out;
}

}  // namespace

TEST_CASE("gradient check on small networks") {
  std::mt19937_64 rng(59);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    MlpConfig cfg;
    cfg.hidden_layers = 1 + static_cast<int>(rng() % 3);
    cfg.hidden_width = 2 + static_cast<int>(rng() % 7);
    cfg.seed = rng();
    const int d = 1 + static_cast<int>(rng() % 3);
    auto net = Mlp::initialize(d, cfg);
    // Zero-initialized biases put pre-activations exactly on the ReLU kink
    // whenever a previous layer is silent; move them off it.
    for (auto& layer : net.layers())
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = 0.1 * g(rng);
    Eigen::MatrixXd x(d, 6);
    Eigen::RowVectorXd y(6);
    for (Eigen::Index j = 0; j < 6; ++j) {
      for (int i = 0; i < d; ++i) x(i, j) = g(rng);
      y(j) = rng() % 2;
    }
    CHECK(max_param_rel_error(net, x, y) <= 1e-4);
  }
}

TEST_CASE("single-sample memorization") {
  MlpConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 8;
  cfg.epochs = 6000;
  cfg.batch_size = 1;
  cfg.learning_rate = 1e-2;
  Eigen::MatrixXd x(2, 1);
  x << 0.5, -1.0;
  Eigen::RowVectorXd y(1);
  y << 1.0;
  std::vector<double> history;
  train_mlp(x, y, cfg, &history);
  REQUIRE(history.size() == 6000);
  CHECK(history.back() < 1e-3);
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1] + 1e-12);
}

TEST_CASE("separable clusters train to high accuracy") {
  const auto data = two_clusters(400, 61);
  MlpConfig cfg;
  cfg.seed = 3;
  const auto model = train_failure_model(data, cfg);
  const auto scores = score(model, data);
  std::vector<bool> labels;
  for (const auto& e : data) labels.push_back(e.failed);
  const auto l = as_bools(labels);
  CHECK(classify(scores, std::span<const bool>(l.get(), labels.size())).accuracy >= 0.95);
}

TEST_CASE("training is deterministic and serializes losslessly") {
  const auto data = two_clusters(120, 67);
  MlpConfig cfg;
  cfg.hidden_layers = 3;
  cfg.epochs = 20;
  cfg.seed = 11;
  const auto a = train_failure_model(data, cfg);
  const auto b = train_failure_model(data, cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
  const auto back = Mlp::from_json(nlohmann::json::parse(a.to_json().dump()));
  CHECK(back.to_json().dump() == a.to_json().dump());
  CHECK(score(back, data) == score(a, data));
  const auto j = a.to_json();
  CHECK(j.contains("layers"));
}

TEST_CASE("config validation and divergence") {
  MlpConfig bad;
  bad.hidden_layers = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = MlpConfig{};
  bad.learning_rate = -1;
  CHECK_THROWS_AS(bad.validate(), UsageError);

  MlpConfig wild;
  wild.hidden_layers = 2;
  wild.learning_rate = 1e300;
  wild.epochs = 5;
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 16) * 1e6;
  Eigen::RowVectorXd y = Eigen::RowVectorXd::Zero(16);
  for (int i = 0; i < 16; i += 2) y(i) = 1;
  x(0, 0) = std::nan("");
  CHECK_THROWS_AS(train_mlp(x, y, wild), TrainingDivergenceError);
}

TEST_CASE("pr_curve: worked examples") {
  const std::vector<double> s = {0.9, 0.8, 0.3, 0.1};
  const auto l = as_bools({true, false, true, false});
  const auto c = pr_curve(s, std::span<const bool>(l.get(), 4));
  CHECK(c.auprc == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(c.baseline == 0.5);

  const auto perfect = pr_curve(s, std::span<const bool>(as_bools({true, true, false, false}).get(), 4));
  CHECK(perfect.auprc == 1.0);

  const std::vector<double> flat = {0.5, 0.5, 0.5, 0.5, 0.5};
  const auto fl = as_bools({true, false, false, true, false});
  CHECK(pr_curve(flat, std::span<const bool>(fl.get(), 5)).auprc == doctest::Approx(0.4).epsilon(1e-15));

  const auto none = as_bools({false, false, false, false});
  CHECK_THROWS_AS(pr_curve(s, std::span<const bool>(none.get(), 4)), UsageError);
  CHECK_THROWS_AS(pr_curve(s, std::span<const bool>(none.get(), 3)), UsageError);
  CHECK(c.to_csv().rfind("threshold,precision,recall\n", 0) == 0);
}

TEST_CASE("property: pr_curve matches the exhaustive oracle") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> scores(n);
    std::vector<bool> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % 6) / 5.0;
      labels[i] = rng() % 2;
    }
    labels[rng() % n] = true;
    const auto l = as_bools(labels);
    const auto c = pr_curve(scores, std::span<const bool>(l.get(), n));
    CHECK(c.auprc == oracle_ap(scores, labels));
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      CHECK(c.points[i].precision >= 0.0);
      CHECK(c.points[i].precision <= 1.0);
      CHECK(c.points[i].recall >= 0.0);
      CHECK(c.points[i].recall <= 1.0);
      if (i > 0) CHECK(c.points[i].recall >= c.points[i - 1].recall);
    }
    CHECK(c.points.back().recall == 1.0);
  }
}

TEST_CASE("precision_at_recall") {
  const std::vector<double> s = {0.9, 0.8, 0.3, 0.1};
  const auto l = as_bools({true, false, true, false});
  const auto c = pr_curve(s, std::span<const bool>(l.get(), 4));
  CHECK(precision_at_recall(c, 0.5) == 1.0);
  CHECK(precision_at_recall(c, 0.6) == doctest::Approx(2.0 / 3.0));
  CHECK(precision_at_recall(c, 1.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("features: extraction and masks") {
  SampleBatch b;
  for (auto v : {"7", "7", "3", "3"}) b.samples.push_back(make_answer({v}));
  DeterministicEmbedder e(8, 0);
  const auto f = extract_features(b, &e);
  REQUIRE(f.values.size() == 3);
  CHECK(*f.entropy() == doctest::Approx(std::log(2.0)));
  CHECK(*f.gini() == 0.5);

  SampleBatch same;
  for (int i = 0; i < 4; ++i) same.samples.push_back(make_answer({"1"}));
  CHECK(extract_features(same, &e).values == std::vector<double>{0.0, 0.0, 0.0});

  const auto only_entropy = extract_features(b, nullptr, FeatureMask{true, false, false});
  CHECK(only_entropy.values.size() == 1);
  CHECK_FALSE(only_entropy.gini().has_value());
  CHECK_THROWS_AS(extract_features(b, nullptr), UsageError);
  CHECK_THROWS_AS(project(only_entropy, FeatureMask{false, true, false}), UsageError);
  CHECK(project(f, FeatureMask{false, true, true}).values == std::vector<double>{f.values[1], f.values[2]});

  CHECK(FeatureMask::parse("entropy+gini+centroid") == FeatureMask{});
  CHECK(FeatureMask::parse("gini,centroid") == FeatureMask{false, true, true});
  CHECK(FeatureMask{false, false, false}.name() == "none");
  CHECK_THROWS_AS(FeatureMask::parse("entropy+colour"), UsageError);
}

TEST_CASE("balance: counts, membership, determinism") {
  std::vector<LabeledExample> data;
  for (int i = 0; i < 40; ++i) {
    FeatureVector f;
    f.mask = FeatureMask{true, false, false};
    f.values = {static_cast<double>(i)};
    data.push_back({f, i < 30});
  }
  const auto b = balance(data, 5);
  CHECK(std::count_if(b.begin(), b.end(), [](const auto& e) { return e.failed; }) == 30);
  CHECK(std::count_if(b.begin(), b.end(), [](const auto& e) { return !e.failed; }) == 30);
  for (const auto& e : b) {
    const auto idx = static_cast<std::size_t>(e.features.values[0]);
    CHECK(data[idx].failed == e.failed);
  }
  const auto again = balance(data, 5);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i].features.values == again[i].features.values);

  const auto under = balance(data, 5, BalanceStrategy::undersample_majority);
  CHECK(under.size() == 20);

  std::vector<LabeledExample> even(data.begin() + 20, data.end());
  const auto fixed = balance(even, 5);
  CHECK(fixed.size() == even.size());

  std::vector<LabeledExample> one(data.begin(), data.begin() + 10);
  CHECK_THROWS_AS(balance(one, 1), UsageError);
}

TEST_CASE("ablation study: shapes and determinism") {
  const auto data = two_clusters(300, 73);
  const auto split = split_train_test(data, 0.3, 9);
  CHECK(split.test.size() == 90);
  CHECK(split.train.size() == 210);
  MlpConfig cfg;
  cfg.hidden_layers = 2;
  cfg.epochs = 30;
  const std::vector<FeatureMask> masks = {FeatureMask{}, FeatureMask{}, FeatureMask{false, false, true}};
  const auto rows = ablation_study(split.train, split.test, masks, cfg, 4);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].auprc == rows[1].auprc);
  CHECK(rows[0].metrics.f1 == rows[1].metrics.f1);
  CHECK(rows[2].mask.name() == "centroid");
  CHECK(rows[0].auprc >= rows[2].auprc - 0.02);
  CHECK(ablation_csv(rows).rfind("mask,accuracy,precision,recall,f1,auprc,baseline\n", 0) == 0);

  const std::vector<FeatureMask> full = {FeatureMask{}};
  CHECK(ablation_study(split.train, split.test, full, cfg, 4).size() == 1);
}
