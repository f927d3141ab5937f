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

#ifndef FAITHKIT_MODELS_H_
#define FAITHKIT_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithkit/data.h"

namespace faithkit {

// The opaque model under explanation.
class PredictiveModel {
 public:
  virtual ~PredictiveModel() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::size_t input_elements() const = 0;
  virtual std::size_t input_block_dim() const = 0;

  // Class probabilities: non-negative, summing to one.
  virtual std::vector<double> predict_proba(const Instance& x) const = 0;

  virtual bool has_input_gradient() const { return false; }
  // d predict_proba(x)[cls] / dx, same shape as x.
  virtual Instance input_gradient(const Instance& x, std::size_t cls) const;

  virtual std::string architecture() const = 0;
  virtual nlohmann::json to_json() const = 0;

  void check_input(const Instance& x) const;
};

using ModelPtr = std::shared_ptr<const PredictiveModel>;

std::size_t predicted_class(const PredictiveModel& model, const Instance& x);

// f(x) in every metric formula: the probability of one fixed class.
class TargetedModel {
 public:
  TargetedModel(ModelPtr model, std::size_t target_class);

  const PredictiveModel& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  std::size_t target_class() const { return target_; }

  double operator()(const Instance& x) const;

 private:
  ModelPtr model_;
  std::size_t target_;
};

// Target = the class the model predicts at x.
TargetedModel target_prediction(const ModelPtr& model, const Instance& x);

double f_scalar(const TargetedModel& tm, const Instance& x);

// Analytic gradient when the model provides one, central differences with
// step `h` otherwise.
Instance input_gradient(const TargetedModel& tm, const Instance& x,
                        double h = 1e-4);
Instance finite_difference_gradient(const TargetedModel& tm, const Instance& x,
                                    double h = 1e-4);

// Fixed probability vector regardless of input.
class ConstantModel final : public PredictiveModel {
 public:
  ConstantModel(std::vector<double> probs, std::size_t n, std::size_t d = 1);

  std::size_t num_classes() const override { return probs_.size(); }
  std::size_t input_elements() const override { return n_; }
  std::size_t input_block_dim() const override { return d_; }
  std::vector<double> predict_proba(const Instance& x) const override;
  bool has_input_gradient() const override { return true; }
  Instance input_gradient(const Instance& x, std::size_t cls) const override;
  std::string architecture() const override { return "constant"; }
  nlohmann::json to_json() const override;

 private:
  std::vector<double> probs_;
  std::size_t n_;
  std::size_t d_;
};

// Two-class model with p(class 1) = bias + sum_i coef_i * x_i (d = 1),
// clamped to [0, 1]. Removal effects are additive whenever the clamp is
// inactive, which makes it the reference task for optimality checks.
class AdditiveModel final : public PredictiveModel {
 public:
  AdditiveModel(double bias, std::vector<double> coefficients);

  std::size_t num_classes() const override { return 2; }
  std::size_t input_elements() const override { return coef_.size(); }
  std::size_t input_block_dim() const override { return 1; }
  std::vector<double> predict_proba(const Instance& x) const override;
  bool has_input_gradient() const override { return true; }
  Instance input_gradient(const Instance& x, std::size_t cls) const override;
  std::string architecture() const override { return "additive"; }
  nlohmann::json to_json() const override;

  double bias() const { return bias_; }
  const std::vector<double>& coefficients() const { return coef_; }

 private:
  double bias_;
  std::vector<double> coef_;
};

// softmax(W vec(x) + b).
class LinearSoftmaxModel final : public PredictiveModel {
 public:
  // weights: num_classes rows of n*d entries.
  LinearSoftmaxModel(std::size_t n, std::size_t d,
                     std::vector<std::vector<double>> weights,
                     std::vector<double> biases);

  std::size_t num_classes() const override { return biases_.size(); }
  std::size_t input_elements() const override { return n_; }
  std::size_t input_block_dim() const override { return d_; }
  std::vector<double> predict_proba(const Instance& x) const override;
  bool has_input_gradient() const override { return true; }
  Instance input_gradient(const Instance& x, std::size_t cls) const override;
  std::string architecture() const override { return "linear"; }
  nlohmann::json to_json() const override;

  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<double>& biases() const { return biases_; }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> biases_;
};

enum class Activation { kTanh, kSigmoid, kRelu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Dense layer: out = W in + b, W stored row-major (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> biases;
};

// Fully connected network on vec(x); hidden layers use `activation`, the
// output layer is a softmax.
class MlpModel final : public PredictiveModel {
 public:
  MlpModel(std::size_t n, std::size_t d, std::vector<DenseLayer> layers,
           Activation activation);

  // Layer sizes [n*d, hidden..., classes], weights ~ U(-a, a) with Glorot a.
  static MlpModel random(std::size_t n, std::size_t d,
                         const std::vector<std::size_t>& hidden,
                         std::size_t classes, Activation activation,
                         std::uint64_t seed);

  std::size_t num_classes() const override { return layers_.back().out; }
  std::size_t input_elements() const override { return n_; }
  std::size_t input_block_dim() const override { return d_; }
  std::vector<double> predict_proba(const Instance& x) const override;
  bool has_input_gradient() const override { return true; }
  Instance input_gradient(const Instance& x, std::size_t cls) const override;
  std::string architecture() const override { return "mlp"; }
  nlohmann::json to_json() const override;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  Activation activation() const { return activation_; }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<DenseLayer> layers_;
  Activation activation_;
};

struct ModelArchitecture {
  std::string kind = "mlp";  // "mlp" or "linear"
  std::vector<std::size_t> hidden = {16};
  Activation activation = Activation::kTanh;
};

struct ModelTrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double l2 = 1e-4;
};

struct TrainedModel {
  std::shared_ptr<const PredictiveModel> model;
  // Mean training cross-entropy before training and after every epoch.
  std::vector<double> loss_curve;
  std::uint64_t seed = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Mini-batch gradient descent with momentum on mean cross-entropy over the
// training split. Throws DivergenceError when the loss turns non-finite.
TrainedModel train_model(const Dataset& dataset, const ModelArchitecture& arch,
                         const ModelTrainConfig& config, std::uint64_t seed);

double accuracy(const PredictiveModel& model, std::span<const Instance> xs,
                std::span<const std::size_t> labels);

// Versioned JSON checkpoint carrying the architecture tag, shapes,
// parameters and training seed.
nlohmann::json model_checkpoint(const PredictiveModel& model,
                                std::uint64_t seed);
std::shared_ptr<const PredictiveModel> load_model(const nlohmann::json& j);

}  // namespace faithkit

#endif  // FAITHKIT_MODELS_H_
