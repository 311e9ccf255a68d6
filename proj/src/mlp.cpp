// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/mlp.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "divproxy/error.hpp"

namespace divproxy {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> flatten_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

}  // namespace

void MlpConfig::validate() const {
  if (hidden_layers < 1) throw UsageError("mlp: hidden_layers must be >= 1");
  if (hidden_width < 1) throw UsageError("mlp: hidden_width must be >= 1");
  if (epochs < 1) throw UsageError("mlp: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("mlp: learning_rate must be > 0");
  if (batch_size < 1) throw UsageError("mlp: batch_size must be >= 1");
}

nlohmann::json MlpConfig::to_json() const {
  return {{"hidden_layers", hidden_layers}, {"hidden_width", hidden_width},
          {"epochs", epochs},               {"learning_rate", learning_rate},
          {"batch_size", batch_size},       {"seed", seed},
          {"activation", "relu"},           {"output", "sigmoid"}};
}

MlpConfig MlpConfig::from_json(const nlohmann::json& j) {
  MlpConfig c;
  c.hidden_layers = j.at("hidden_layers").get<int>();
  c.hidden_width = j.at("hidden_width").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Mlp Mlp::initialize(int input_dim, const MlpConfig& config) {
  config.validate();
  if (input_dim < 1) throw UsageError("mlp: input_dim must be >= 1");
  Mlp net;
  net.config_ = config;
  net.mean_ = Eigen::VectorXd::Zero(input_dim);
  net.scale_ = Eigen::VectorXd::Ones(input_dim);

  std::mt19937_64 rng(config.seed);
  int fan_in = input_dim;
  for (int l = 0; l <= config.hidden_layers; ++l) {
    const bool output = l == config.hidden_layers;
    const int fan_out = output ? 1 : config.hidden_width;
    DenseLayer layer;
    layer.weights.resize(fan_out, fan_in);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    layer.activation = output ? Activation::identity : Activation::relu;
    if (output) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
    } else {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
    }
    net.layers_.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return net;
}

void Mlp::set_standardization(Eigen::VectorXd mean, Eigen::VectorXd scale) {
  if (mean.size() != mean_.size() || scale.size() != scale_.size())
    throw UsageError("mlp: standardization size mismatch");
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

Eigen::RowVectorXd Mlp::logits(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != mean_.size()) throw UsageError("mlp: input dimension mismatch");
  Eigen::MatrixXd a = (inputs.colwise() - mean_).array().colwise() / scale_.array();
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = (layer.weights * a).colwise() + layer.bias;
    if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a.row(0);
}

Eigen::RowVectorXd Mlp::predict(const Eigen::MatrixXd& inputs) const {
  return logits(inputs).unaryExpr([](double z) { return sigmoid(z); });
}

double Mlp::predict(const std::vector<double>& features) const {
  const Eigen::Map<const Eigen::VectorXd> x(features.data(), static_cast<Eigen::Index>(features.size()));
  return predict(Eigen::MatrixXd(x))(0);
}

double Mlp::loss(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets,
                 MlpGradients* grads) const {
  if (inputs.rows() != mean_.size()) throw UsageError("mlp: input dimension mismatch");
  if (inputs.cols() != targets.size() || inputs.cols() == 0)
    throw UsageError("mlp: inputs and targets disagree in sample count");
  const double n = static_cast<double>(inputs.cols());

  // activations[0] is the standardized input; activations[l + 1] the output of layer l.
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(layers_.size() + 1);
  activations.push_back((inputs.colwise() - mean_).array().colwise() / scale_.array());
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = (layer.weights * activations.back()).colwise() + layer.bias;
    if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
    activations.push_back(std::move(z));
  }
  const Eigen::RowVectorXd z = activations.back().row(0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z(i)) - targets(i) * z(i);
  const double mean_loss = total / n;
  if (grads == nullptr) return mean_loss;

  grads->weights.resize(layers_.size());
  grads->bias.resize(layers_.size());
  Eigen::MatrixXd delta(1, z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) delta(0, i) = (sigmoid(z(i)) - targets(i)) / n;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads->weights[l] = delta * activations[l].transpose();
    grads->bias[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers_[l].weights.transpose() * delta;
    // ReLU derivative from the stored (post-activation) values of layer l-1.
    delta = (activations[l].array() > 0.0).select(back, 0.0);
  }
  return mean_loss;
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_)
    layers.push_back({{"in", layer.weights.cols()},
                      {"out", layer.weights.rows()},
                      {"activation", layer.activation == Activation::relu ? "relu" : "identity"},
                      {"weights", flatten_row_major(layer.weights)},
                      {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}});
  return {{"format", "divproxy-mlp"},
          {"version", 1},
          {"config", config_.to_json()},
          {"input_dim", input_dim()},
          {"output_activation", "sigmoid"},
          {"standardization",
           {{"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
            {"scale", std::vector<double>(scale_.data(), scale_.data() + scale_.size())}}},
          {"layers", layers}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "divproxy-mlp") throw DataError("not a divproxy-mlp model");
  Mlp net;
  net.config_ = MlpConfig::from_json(j.at("config"));
  const auto mean = j.at("standardization").at("mean").get<std::vector<double>>();
  const auto scale = j.at("standardization").at("scale").get<std::vector<double>>();
  net.mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  net.scale_ = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  for (const auto& l : j.at("layers")) {
    DenseLayer layer;
    const auto in = l.at("in").get<Eigen::Index>();
    const auto out = l.at("out").get<Eigen::Index>();
    const auto w = l.at("weights").get<std::vector<double>>();
    const auto b = l.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out)
      throw DataError("model layer has inconsistent weight shapes");
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
    layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
    layer.activation = l.at("activation").get<std::string>() == "relu" ? Activation::relu : Activation::identity;
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

Mlp train_mlp(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets,
              const MlpConfig& config, std::vector<double>* loss_history) {
  config.validate();
  if (inputs.cols() == 0) throw UsageError("train_mlp: empty training set");
  if (inputs.cols() != targets.size()) throw UsageError("train_mlp: inputs and targets disagree");

  Mlp net = Mlp::initialize(static_cast<int>(inputs.rows()), config);
  const Eigen::VectorXd mean = inputs.rowwise().mean();
  Eigen::VectorXd scale =
      ((inputs.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(inputs.cols()))
          .sqrt()
          .matrix();
  for (Eigen::Index i = 0; i < scale.size(); ++i)
    if (!(scale(i) > 1e-12)) scale(i) = 1.0;
  net.set_standardization(mean, scale);

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double epsilon = 1e-8;
  auto& layers = net.layers();
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  for (const auto& l : layers) {
    m_w.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    v_w.push_back(m_w.back());
    m_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    v_b.push_back(m_b.back());
  }

  std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  long step = 0;
  MlpGradients grads;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < inputs.cols(); start += batch) {
      const Eigen::Index len = std::min(batch, inputs.cols() - start);
      Eigen::MatrixXd xb(inputs.rows(), len);
      Eigen::RowVectorXd yb(len);
      for (Eigen::Index k = 0; k < len; ++k) {
        const auto src = order[static_cast<std::size_t>(start + k)];
        xb.col(k) = inputs.col(src);
        yb(k) = targets(src);
      }
      epoch_loss += net.loss(xb, yb, &grads) * static_cast<double>(len);

      ++step;
      const double correction1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < layers.size(); ++l) {
        m_w[l] = beta1 * m_w[l] + (1.0 - beta1) * grads.weights[l];
        v_w[l] = beta2 * v_w[l] + (1.0 - beta2) * grads.weights[l].cwiseProduct(grads.weights[l]);
        m_b[l] = beta1 * m_b[l] + (1.0 - beta1) * grads.bias[l];
        v_b[l] = beta2 * v_b[l] + (1.0 - beta2) * grads.bias[l].cwiseProduct(grads.bias[l]);
        layers[l].weights.array() -= config.learning_rate * (m_w[l].array() / correction1) /
                                     ((v_w[l].array() / correction2).sqrt() + epsilon);
        layers[l].bias.array() -= config.learning_rate * (m_b[l].array() / correction1) /
                                  ((v_b[l].array() / correction2).sqrt() + epsilon);
      }
    }
    epoch_loss /= static_cast<double>(inputs.cols());
    if (!std::isfinite(epoch_loss)) throw TrainingDivergenceError("training loss is not finite", epoch);
    if (loss_history != nullptr) loss_history->push_back(epoch_loss);
  }
  return net;
}

}  // namespace divproxy
