// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense feed-forward binary classifier: ReLU hidden layers, one sigmoid
// output unit, binary cross-entropy loss, Adam on shuffled mini-batches.
// Inputs are standardized with statistics fitted on the training data and
// stored in the model.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace divproxy {

struct MlpConfig {
  int hidden_layers = 10;
  int hidden_width = 32;
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static MlpConfig from_json(const nlohmann::json& j);
};

enum class Activation { relu, identity };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::relu;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

class Mlp {
 public:
  Mlp() = default;

  // Random initialization (He-normal for ReLU layers, Glorot-uniform for the
  // output) with identity standardization.
  static Mlp initialize(int input_dim, const MlpConfig& config);

  int input_dim() const { return static_cast<int>(mean_.size()); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const MlpConfig& config() const { return config_; }

  void set_standardization(Eigen::VectorXd mean, Eigen::VectorXd scale);

  // Columns are samples. Returns logits (1 x n).
  Eigen::RowVectorXd logits(const Eigen::MatrixXd& inputs) const;
  // Failure probability per column.
  Eigen::RowVectorXd predict(const Eigen::MatrixXd& inputs) const;
  double predict(const std::vector<double>& features) const;

  // Mean binary cross-entropy over the columns of `inputs`; fills `grads`
  // with its gradient when non-null.
  double loss(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets,
              MlpGradients* grads = nullptr) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  MlpConfig config_;
  std::vector<DenseLayer> layers_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

// Trains from scratch on (features, label) columns. Deterministic in
// config.seed. TrainingDivergenceError if the epoch loss is not finite.
// `loss_history`, when given, receives the mean loss of every epoch.
Mlp train_mlp(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets,
              const MlpConfig& config, std::vector<double>* loss_history = nullptr);

}  // namespace divproxy
