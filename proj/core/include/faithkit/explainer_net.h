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

#ifndef FAITHKIT_EXPLAINER_NET_H_
#define FAITHKIT_EXPLAINER_NET_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithkit/data.h"
#include "faithkit/math.h"
#include "faithkit/metrics.h"
#include "faithkit/models.h"
#include "faithkit/perturb.h"
#include "faithkit/signals.h"

namespace faithkit {

struct ExplainerArchitecture {
  std::size_t elements = 0;   // n
  std::size_t block_dim = 1;  // d
  std::size_t hidden = 16;
  std::size_t depth = 1;  // number of mixing layers
  // Separate encoder weights per element instead of one shared W_e.
  bool per_element_encoder = false;
  // Mixing update h + c + c*h instead of h + c, where c is the mixed
  // context; lets the context scale each element's own features.
  bool gated_mixing = false;

  nlohmann::json to_json() const;
  static ExplainerArchitecture from_json(const nlohmann::json& j);
};

// Learned explainer mapping an instance to saliency scores in [0, 1]^n:
//
//   h_i     = tanh(W_e x_i + b_e + p_i)                  per-element encoder
//             (W_e may be separate per element)
//   h_i    <- h_i + tanh(sum_j A_ij W_m h_j + b_m)       per mixing layer
//   s_i     = sigmoid(v . h_i + c)                       shared scalar head
//
// p_i is a learned position embedding, A an n x n mixing matrix. All
// parameters live in one flat vector so optimizers and gradient checks can
// treat them uniformly.
class ExplainerNet {
 public:
  ExplainerNet() = default;
  explicit ExplainerNet(const ExplainerArchitecture& arch);

  // Glorot-style init; `zero_head` zeroes v and c so every output is 0.5.
  static ExplainerNet random(const ExplainerArchitecture& arch,
                             std::uint64_t seed, bool zero_head = false);

  const ExplainerArchitecture& architecture() const { return arch_; }
  std::size_t num_parameters() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  // Activations kept for backpropagation.
  struct Trace {
    std::vector<std::vector<double>> layers;  // h after encoder and each mix
    std::vector<std::vector<double>> mixed;   // W_m h per mixing layer
    std::vector<std::vector<double>> squash;  // tanh outputs per mixing layer
    std::vector<double> scores;
  };

  // Throws std::invalid_argument on shape mismatch.
  std::vector<double> forward(const Instance& x) const;
  std::vector<double> forward(const Instance& x, Trace& trace) const;
  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(scores).
  void backward(const Instance& x, const Trace& trace,
                std::span<const double> d_scores, std::span<double> grad) const;

  nlohmann::json to_json() const;
  static ExplainerNet from_json(const nlohmann::json& j);

  friend bool operator==(const ExplainerNet& a, const ExplainerNet& b) {
    return a.params_ == b.params_;
  }

 private:
  struct Offsets {
    std::size_t enc_w, enc_b, pos;
    std::vector<std::size_t> mix_a, mix_w, mix_b;
    std::size_t head_v, head_c, total;
  };
  static Offsets layout(const ExplainerArchitecture& arch);
  std::size_t encoder_offset(std::size_t element) const {
    return off_.enc_w + (arch_.per_element_encoder
                             ? element * arch_.hidden * arch_.block_dim
                             : 0);
  }

  ExplainerArchitecture arch_;
  Offsets off_{};
  std::vector<double> params_;
};

enum class PcSimilarity { kPearson, kCosine };

std::string_view to_string(PcSimilarity s);
PcSimilarity pc_similarity_from_string(std::string_view name);

// Value and gradient (with respect to a) of a similarity; degenerate inputs
// give 0 with zero gradient.
double pearson_with_grad(std::span<const double> a, std::span<const double> b,
                         std::span<double> grad);
double cosine_with_grad(std::span<const double> a, std::span<const double> b,
                        std::span<double> grad);

// Mean over pairs of 1 - sim(forward(x), s). Adds the parameter gradient to
// `grad` when non-null.
double loss_pc(const ExplainerNet& net, std::span<const SignalPair> batch,
               PcSimilarity similarity = PcSimilarity::kPearson,
               std::vector<double>* grad = nullptr);

enum class LcMode { kExact, kSampled };

// Index-set family and frozen Δ values for one instance.
struct LcTarget {
  Instance instance;
  std::vector<IndexSet> family;
  std::vector<double> effects;
};

// Exact mode enumerates every subset of [0, n) (n <= 16); sampled mode draws
// `subsets` distinct uniform subsets from `seed`. Target = predicted class.
LcTarget make_lc_target(const Instance& x, const ModelPtr& model,
                        const RemovalStrategy& strategy,
                        const EffectConfig& effects, LcMode mode,
                        std::size_t subsets, std::uint64_t seed);

// -mean over targets of τ(local sums of forward(x), Δ). Only Pearson is
// differentiable; a Spearman loss can be evaluated but not differentiated.
double loss_lc(const ExplainerNet& net, std::span<const LcTarget> batch,
               CorrelationKind tau = CorrelationKind::kPearson,
               std::vector<double>* grad = nullptr);

struct AlphaSchedule {
  double midpoint = 0.0;
  double width = 1.0;
};

// 1 - logistic((epoch - midpoint) / width).
double alpha(double epoch, const AlphaSchedule& schedule);

// alpha * L_PC + (1 - alpha) * L_LC
double loss_obj(const ExplainerNet& net, std::span<const SignalPair> pc_batch,
                std::span<const LcTarget> lc_batch, double alpha_value,
                PcSimilarity similarity = PcSimilarity::kPearson,
                std::vector<double>* grad = nullptr);

using LossFunction =
    std::function<double(const ExplainerNet&, std::vector<double>*)>;

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences on every parameter; relative error uses
// max(|analytic|, |numeric|, 1e-8) as the denominator.
GradcheckResult gradcheck(const ExplainerNet& net, const LossFunction& loss,
                          double h = 1e-4);

enum class LossSelection { kObjective, kPatternOnly, kLocalOnly };
enum class OptimizerKind { kMomentum, kAdam };

std::string_view to_string(LossSelection s);
LossSelection loss_selection_from_string(std::string_view name);
std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view name);

struct ExplainerTrainConfig {
  std::size_t hidden = 16;
  std::size_t depth = 1;
  bool per_element_encoder = false;
  // The gated single layer fits the signals far better than the plain one
  // on the tabular tasks and stays stable with momentum at this step size.
  bool gated_mixing = true;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::kMomentum;
  double learning_rate = 0.02;
  double momentum = 0.9;
  double alpha_mid_fraction = 0.6;
  double alpha_width_fraction = 0.08;
  LossSelection loss = LossSelection::kObjective;
  LcMode lc_mode = LcMode::kExact;
  std::size_t lc_subsets = 64;
  PcSimilarity pc_similarity = PcSimilarity::kPearson;
  EffectConfig effects;
  std::uint64_t seed = 0;

  AlphaSchedule schedule() const;
  nlohmann::json to_json() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double alpha = 0.0;
  double loss_pc = 0.0;
  double loss_lc = 0.0;
  double loss_obj = 0.0;
};

struct TrainedExplainer {
  ExplainerNet net;
  std::vector<EpochLog> log;
};

// Thrown when a loss or parameter turns non-finite; carries the parameters
// from the end of the last finite epoch.
class ExplainerDivergence : public std::runtime_error {
 public:
  ExplainerDivergence(const std::string& what, ExplainerNet last_good,
                      std::size_t epoch)
      : std::runtime_error(what),
        last_good_(std::move(last_good)),
        epoch_(epoch) {}
  const ExplainerNet& last_good() const { return last_good_; }
  std::size_t epoch() const { return epoch_; }

 private:
  ExplainerNet last_good_;
  std::size_t epoch_;
};

// Mini-batch descent on loss_obj: signal pairs feed L_PC, `lc_samples` (with
// Δ from `model`) feed L_LC. Deterministic for fixed seeds.
TrainedExplainer train_explainer(std::span<const SignalPair> signals,
                                 std::span<const Instance> lc_samples,
                                 const ModelPtr& model,
                                 const RemovalStrategy& strategy,
                                 const ExplainerTrainConfig& cfg);

void write_training_log_csv(std::ostream& out, std::span<const EpochLog> log);

nlohmann::json explainer_checkpoint(const TrainedExplainer& trained,
                                    const ExplainerTrainConfig& cfg);
ExplainerNet load_explainer(const nlohmann::json& j);

}  // namespace faithkit

#endif  // FAITHKIT_EXPLAINER_NET_H_
