/*
 * Copyright 2026 The faithkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "faithkit/models.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "faithkit/math.h"

namespace faithkit {

namespace {

constexpr int kCheckpointVersion = 1;

std::vector<double> softmax(std::span<const double> logits) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - hi);
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kSigmoid:
      return logistic(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output a.
double activate_grad(Activation a, double z, double out) {
  switch (a) {
    case Activation::kTanh:
      return 1.0 - out * out;
    case Activation::kSigmoid:
      return out * (1.0 - out);
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

Instance PredictiveModel::input_gradient(const Instance&, std::size_t) const {
  throw std::logic_error(architecture() + " model has no analytic gradient");
}

void PredictiveModel::check_input(const Instance& x) const {
  if (x.elements() != input_elements() || x.block_dim() != input_block_dim()) {
    throw std::invalid_argument(
        "model input shape mismatch: expected " +
        std::to_string(input_elements()) + "x" +
        std::to_string(input_block_dim()) + ", got " +
        std::to_string(x.elements()) + "x" + std::to_string(x.block_dim()));
  }
}

std::size_t predicted_class(const PredictiveModel& model, const Instance& x) {
  const auto p = model.predict_proba(x);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) -
                                  p.begin());
}

TargetedModel::TargetedModel(ModelPtr model, std::size_t target_class)
    : model_(std::move(model)), target_(target_class) {
  if (!model_) throw std::invalid_argument("TargetedModel: null model");
  if (target_ >= model_->num_classes()) {
    throw std::invalid_argument("TargetedModel: target class out of range");
  }
}

double TargetedModel::operator()(const Instance& x) const {
  return model_->predict_proba(x)[target_];
}

TargetedModel target_prediction(const ModelPtr& model, const Instance& x) {
  return TargetedModel(model, predicted_class(*model, x));
}

double f_scalar(const TargetedModel& tm, const Instance& x) { return tm(x); }

Instance finite_difference_gradient(const TargetedModel& tm, const Instance& x,
                                    double h) {
  Instance grad(x.elements(), x.block_dim());
  Instance probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = probe.values()[k];
    probe.values()[k] = orig + h;
    const double up = tm(probe);
    probe.values()[k] = orig - h;
    const double down = tm(probe);
    probe.values()[k] = orig;
    grad.values()[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

Instance input_gradient(const TargetedModel& tm, const Instance& x, double h) {
  if (tm.model().has_input_gradient()) {
    return tm.model().input_gradient(x, tm.target_class());
  }
  return finite_difference_gradient(tm, x, h);
}

// ---------------------------------------------------------------------------

ConstantModel::ConstantModel(std::vector<double> probs, std::size_t n,
                             std::size_t d)
    : probs_(std::move(probs)), n_(n), d_(d) {
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (probs_.empty() || std::abs(total - 1.0) > 1e-9 ||
      std::any_of(probs_.begin(), probs_.end(),
                  [](double p) { return p < 0.0; })) {
    throw std::invalid_argument("ConstantModel: not a probability vector");
  }
}

std::vector<double> ConstantModel::predict_proba(const Instance& x) const {
  check_input(x);
  return probs_;
}

Instance ConstantModel::input_gradient(const Instance& x, std::size_t) const {
  check_input(x);
  return Instance(n_, d_, 0.0);
}

nlohmann::json ConstantModel::to_json() const {
  return {{"probs", probs_}, {"n", n_}, {"d", d_}};
}

// ---------------------------------------------------------------------------

AdditiveModel::AdditiveModel(double bias, std::vector<double> coefficients)
    : bias_(bias), coef_(std::move(coefficients)) {
  if (coef_.empty()) throw std::invalid_argument("AdditiveModel: no features");
}

std::vector<double> AdditiveModel::predict_proba(const Instance& x) const {
  check_input(x);
  double p = bias_;
  for (std::size_t i = 0; i < coef_.size(); ++i) p += coef_[i] * x.at(i, 0);
  p = std::clamp(p, 0.0, 1.0);
  return {1.0 - p, p};
}

Instance AdditiveModel::input_gradient(const Instance& x,
                                       std::size_t cls) const {
  check_input(x);
  double p = bias_;
  for (std::size_t i = 0; i < coef_.size(); ++i) p += coef_[i] * x.at(i, 0);
  Instance grad(coef_.size(), 1, 0.0);
  if (p <= 0.0 || p >= 1.0) return grad;
  const double sign = cls == 1 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < coef_.size(); ++i) grad.at(i, 0) = sign * coef_[i];
  return grad;
}

nlohmann::json AdditiveModel::to_json() const {
  return {{"bias", bias_}, {"coefficients", coef_}};
}

// ---------------------------------------------------------------------------

LinearSoftmaxModel::LinearSoftmaxModel(std::size_t n, std::size_t d,
                                       std::vector<std::vector<double>> weights,
                                       std::vector<double> biases)
    : n_(n), d_(d), weights_(std::move(weights)), biases_(std::move(biases)) {
  if (weights_.size() != biases_.size() || biases_.size() < 2) {
    throw std::invalid_argument("LinearSoftmaxModel: bad class count");
  }
  for (const auto& row : weights_) {
    if (row.size() != n * d) {
      throw std::invalid_argument("LinearSoftmaxModel: bad weight row size");
    }
  }
}

std::vector<double> LinearSoftmaxModel::predict_proba(const Instance& x) const {
  check_input(x);
  std::vector<double> logits(biases_);
  for (std::size_t c = 0; c < logits.size(); ++c) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      logits[c] += weights_[c][k] * x.values()[k];
    }
  }
  return softmax(logits);
}

Instance LinearSoftmaxModel::input_gradient(const Instance& x,
                                            std::size_t cls) const {
  const auto p = predict_proba(x);
  Instance grad(n_, d_, 0.0);
  // dp_c/dx = p_c (w_c - sum_k p_k w_k)
  for (std::size_t k = 0; k < x.size(); ++k) {
    double mean_w = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) mean_w += p[c] * weights_[c][k];
    grad.values()[k] = p[cls] * (weights_[cls][k] - mean_w);
  }
  return grad;
}

nlohmann::json LinearSoftmaxModel::to_json() const {
  return {{"n", n_}, {"d", d_}, {"weights", weights_}, {"biases", biases_}};
}

// ---------------------------------------------------------------------------

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kRelu:
      return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation: " + name);
}

MlpModel::MlpModel(std::size_t n, std::size_t d, std::vector<DenseLayer> layers,
                   Activation activation)
    : n_(n), d_(d), layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) throw std::invalid_argument("MlpModel: no layers");
  std::size_t width = n * d;
  for (const auto& layer : layers_) {
    if (layer.in != width || layer.weights.size() != layer.in * layer.out ||
        layer.biases.size() != layer.out) {
      throw std::invalid_argument("MlpModel: inconsistent layer shapes");
    }
    if (!all_finite(layer.weights) || !all_finite(layer.biases)) {
      throw std::invalid_argument("MlpModel: non-finite parameter");
    }
    width = layer.out;
  }
  if (width < 2) throw std::invalid_argument("MlpModel: need >= 2 classes");
}

MlpModel MlpModel::random(std::size_t n, std::size_t d,
                          const std::vector<std::size_t>& hidden,
                          std::size_t classes, Activation activation,
                          std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x31a9));
  std::vector<std::size_t> sizes{n * d};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(classes);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    const double a =
        std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> dist(-a, a);
    layer.weights.resize(layer.in * layer.out);
    for (auto& w : layer.weights) w = dist(rng);
    layer.biases.assign(layer.out, 0.0);
    layers.push_back(std::move(layer));
  }
  return MlpModel(n, d, std::move(layers), activation);
}

namespace {

struct MlpTrace {
  // activations[0] = input, activations[l + 1] = output of layer l
  // (post-activation for hidden layers, logits for the last one).
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> activations;
};

MlpTrace mlp_forward(const std::vector<DenseLayer>& layers, Activation act,
                     std::span<const double> input) {
  MlpTrace t;
  t.activations.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& in = t.activations.back();
    std::vector<double> z(layer.biases);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = layer.weights.data() + o * layer.in;
      double acc = 0.0;
      for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * in[i];
      z[o] += acc;
    }
    std::vector<double> a(z);
    if (l + 1 < layers.size()) {
      for (auto& v : a) v = activate(act, v);
    }
    t.pre.push_back(std::move(z));
    t.activations.push_back(std::move(a));
  }
  return t;
}

// Backpropagates d(loss)/d(logits) through the network. Returns d/d(input)
// and, when `grads` is non-null, accumulates parameter gradients.
std::vector<double> mlp_backward(const std::vector<DenseLayer>& layers,
                                 Activation act, const MlpTrace& t,
                                 std::vector<double> delta,
                                 std::vector<DenseLayer>* grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    if (l + 1 < layers.size()) {
      for (std::size_t o = 0; o < layer.out; ++o) {
        delta[o] *= activate_grad(act, t.pre[l][o], t.activations[l + 1][o]);
      }
    }
    const auto& in = t.activations[l];
    if (grads) {
      auto& g = (*grads)[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        g.biases[o] += delta[o];
        double* row = g.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) row[i] += delta[o] * in[i];
      }
    }
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = layer.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) prev[i] += row[i] * delta[o];
    }
    delta = std::move(prev);
  }
  return delta;
}

}  // namespace

std::vector<double> MlpModel::predict_proba(const Instance& x) const {
  check_input(x);
  const auto t = mlp_forward(layers_, activation_, x.values());
  return softmax(t.activations.back());
}

Instance MlpModel::input_gradient(const Instance& x, std::size_t cls) const {
  check_input(x);
  const auto t = mlp_forward(layers_, activation_, x.values());
  const auto p = softmax(t.activations.back());
  std::vector<double> delta(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    delta[k] = p[cls] * ((k == cls ? 1.0 : 0.0) - p[k]);
  }
  auto g = mlp_backward(layers_, activation_, t, std::move(delta), nullptr);
  return Instance(n_, d_, std::move(g));
}

nlohmann::json MlpModel::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    layers.push_back({{"in", layer.in},
                      {"out", layer.out},
                      {"weights", layer.weights},
                      {"biases", layer.biases}});
  }
  return {{"n", n_},
          {"d", d_},
          {"activation", to_string(activation_)},
          {"layers", layers}};
}

// ---------------------------------------------------------------------------

namespace {

double mean_cross_entropy(const MlpModel& model, std::span<const Instance> xs,
                          std::span<const std::size_t> labels) {
  double total = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const auto p = model.predict_proba(xs[s]);
    total -= std::log(std::max(p[labels[s]], 1e-300));
  }
  return total / static_cast<double>(xs.size());
}

}  // namespace

TrainedModel train_model(const Dataset& dataset, const ModelArchitecture& arch,
                         const ModelTrainConfig& config, std::uint64_t seed) {
  if (dataset.split.train.empty()) {
    throw std::invalid_argument("train_model: empty training split");
  }
  if (config.batch_size == 0 || config.epochs == 0) {
    throw std::invalid_argument("train_model: epochs and batch_size must be > 0");
  }
  const std::size_t n = dataset.elements();
  const std::size_t d = dataset.block_dim();
  const std::size_t classes = std::max<std::size_t>(dataset.num_classes, 2);
  std::vector<std::size_t> hidden;
  if (arch.kind == "mlp") {
    hidden = arch.hidden;
  } else if (arch.kind != "linear") {
    throw std::invalid_argument("train_model: unknown architecture '" +
                                arch.kind + "'");
  }
  MlpModel net = MlpModel::random(n, d, hidden, classes, arch.activation, seed);

  const auto xs = dataset.subset(dataset.split.train);
  std::vector<std::size_t> ys;
  for (std::size_t i : dataset.split.train) ys.push_back(dataset.labels[i]);

  TrainedModel result;
  result.seed = seed;
  result.loss_curve.push_back(mean_cross_entropy(net, xs, ys));

  auto& layers = net.mutable_layers();
  std::vector<DenseLayer> velocity = layers;
  for (auto& v : velocity) {
    std::fill(v.weights.begin(), v.weights.end(), 0.0);
    std::fill(v.biases.begin(), v.biases.end(), 0.0);
  }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0x7a11));
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<DenseLayer> grads = velocity;
      for (auto& g : grads) {
        std::fill(g.weights.begin(), g.weights.end(), 0.0);
        std::fill(g.biases.begin(), g.biases.end(), 0.0);
      }
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& x = xs[order[b]];
        const auto t = mlp_forward(layers, arch.activation, x.values());
        auto p = softmax(t.activations.back());
        batch_loss -= std::log(std::max(p[ys[order[b]]], 1e-300));
        p[ys[order[b]]] -= 1.0;
        mlp_backward(layers, arch.activation, t, std::move(p), &grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError(
            "train_model: non-finite loss at step " + std::to_string(step),
            step);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t k = 0; k < layers[l].weights.size(); ++k) {
          const double g =
              grads[l].weights[k] * scale + config.l2 * layers[l].weights[k];
          velocity[l].weights[k] =
              config.momentum * velocity[l].weights[k] - config.learning_rate * g;
          layers[l].weights[k] += velocity[l].weights[k];
        }
        for (std::size_t k = 0; k < layers[l].biases.size(); ++k) {
          const double g = grads[l].biases[k] * scale;
          velocity[l].biases[k] =
              config.momentum * velocity[l].biases[k] - config.learning_rate * g;
          layers[l].biases[k] += velocity[l].biases[k];
        }
      }
      ++step;
    }
    const double loss = mean_cross_entropy(net, xs, ys);
    if (!std::isfinite(loss)) {
      throw DivergenceError(
          "train_model: non-finite loss at step " + std::to_string(step), step);
    }
    result.loss_curve.push_back(loss);
  }

  if (arch.kind == "linear") {
    const auto& layer = net.layers().front();
    std::vector<std::vector<double>> w(layer.out);
    for (std::size_t c = 0; c < layer.out; ++c) {
      w[c].assign(layer.weights.begin() + c * layer.in,
                  layer.weights.begin() + (c + 1) * layer.in);
    }
    result.model = std::make_shared<LinearSoftmaxModel>(n, d, std::move(w),
                                                        layer.biases);
  } else {
    result.model = std::make_shared<MlpModel>(std::move(net));
  }
  return result;
}

double accuracy(const PredictiveModel& model, std::span<const Instance> xs,
                std::span<const std::size_t> labels) {
  if (xs.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (predicted_class(model, xs[i]) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(xs.size());
}

nlohmann::json model_checkpoint(const PredictiveModel& model,
                                std::uint64_t seed) {
  return {{"format", "faithkit.model"},
          {"version", kCheckpointVersion},
          {"architecture", model.architecture()},
          {"num_classes", model.num_classes()},
          {"input_elements", model.input_elements()},
          {"input_block_dim", model.input_block_dim()},
          {"seed", seed},
          {"parameters", model.to_json()}};
}

std::shared_ptr<const PredictiveModel> load_model(const nlohmann::json& j) {
  if (j.value("format", "") != "faithkit.model") {
    throw std::invalid_argument("load_model: not a faithkit model checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw std::invalid_argument("load_model: unsupported checkpoint version");
  }
  const auto arch = j.at("architecture").get<std::string>();
  const auto& p = j.at("parameters");
  if (arch == "mlp") {
    std::vector<DenseLayer> layers;
    for (const auto& l : p.at("layers")) {
      DenseLayer layer;
      layer.in = l.at("in");
      layer.out = l.at("out");
      layer.weights = l.at("weights").get<std::vector<double>>();
      layer.biases = l.at("biases").get<std::vector<double>>();
      layers.push_back(std::move(layer));
    }
    return std::make_shared<MlpModel>(
        p.at("n"), p.at("d"), std::move(layers),
        activation_from_string(p.at("activation")));
  }
  if (arch == "linear") {
    return std::make_shared<LinearSoftmaxModel>(
        p.at("n"), p.at("d"),
        p.at("weights").get<std::vector<std::vector<double>>>(),
        p.at("biases").get<std::vector<double>>());
  }
  if (arch == "additive") {
    return std::make_shared<AdditiveModel>(
        p.at("bias"), p.at("coefficients").get<std::vector<double>>());
  }
  if (arch == "constant") {
    return std::make_shared<ConstantModel>(
        p.at("probs").get<std::vector<double>>(), p.at("n"), p.at("d"));
  }
  throw std::invalid_argument("load_model: unknown architecture '" + arch + "'");
}

}  // namespace faithkit
