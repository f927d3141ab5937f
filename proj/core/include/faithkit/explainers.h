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

#ifndef FAITHKIT_EXPLAINERS_H_
#define FAITHKIT_EXPLAINERS_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithkit/data.h"
#include "faithkit/metrics.h"
#include "faithkit/models.h"
#include "faithkit/perturb.h"

namespace faithkit {

struct SaliencyExplanation {
  std::vector<double> scores;  // in [0, 1]
  std::vector<double> raw;     // method output before normalization
  std::string method;
  std::string normalization = "min_max";
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  static SaliencyExplanation from_json(const nlohmann::json& j);
};

struct ExplainerConfig {
  DeltaKind delta = DeltaKind::kAbsDiff;  // occlusion / feature ablation
  std::size_t ig_steps = 64;
  std::size_t lime_masks = 256;
  double lime_kernel_width = 0.25;
  double lime_ridge = 1e-3;
  std::size_t shap_exact_limit = 12;
  std::size_t shap_samples = 2048;
  double fd_step = 1e-4;
  // Partition of the elements for feature ablation; empty = singletons.
  std::vector<std::vector<std::size_t>> ablation_groups;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition_estimate() const { return condition_; }

 private:
  double condition_;
};

// raw_i = Δ[f(x), f(x \ {i})]
SaliencyExplanation occlusion(const Instance& x, const TargetedModel& tm,
                              const RemovalStrategy& strategy,
                              const ExplainerConfig& cfg = {});

// Each group's Δ is assigned to all of its members. Throws unless `groups`
// partitions [0, n).
SaliencyExplanation feature_ablation(
    const Instance& x, const TargetedModel& tm, const RemovalStrategy& strategy,
    const std::vector<std::vector<std::size_t>>& groups,
    const ExplainerConfig& cfg = {});

// Per-element L2 norm of the input gradient.
SaliencyExplanation saliency_grad(const Instance& x, const TargetedModel& tm,
                                  const ExplainerConfig& cfg = {});

// Midpoint-rule path integral from the baseline; raw values are block sums of
// (x - x°) * mean gradient and satisfy completeness up to quadrature error.
SaliencyExplanation integrated_gradients(const Instance& x,
                                         const TargetedModel& tm,
                                         const Instance& baseline,
                                         std::size_t steps,
                                         const ExplainerConfig& cfg = {});

// Binary keep/remove masks, exponential kernel on cosine distance to the
// all-kept mask, ridge-regularized weighted linear fit.
SaliencyExplanation lime(const Instance& x, const TargetedModel& tm,
                         const RemovalStrategy& strategy,
                         const ExplainerConfig& cfg = {});
// LIME on caller-provided masks (1 = kept).
SaliencyExplanation lime_from_masks(
    const Instance& x, const TargetedModel& tm, const RemovalStrategy& strategy,
    const std::vector<std::vector<int>>& masks, const ExplainerConfig& cfg = {});

// Shapley-kernel weighted least squares with the efficiency constraint
// eliminated exactly. All 2^n - 2 coalitions up to cfg.shap_exact_limit,
// kernel-sampled coalitions beyond.
SaliencyExplanation kernel_shap(const Instance& x, const TargetedModel& tm,
                                const RemovalStrategy& strategy,
                                const ExplainerConfig& cfg = {});

// phi_i = sum_{S ⊆ N\{i}} |S|!(n-|S|-1)!/n! [v(S ∪ {i}) - v(S)] with
// v(S) = f(x with the complement of S removed). Requires n <= 12.
std::vector<double> exact_shapley(const Instance& x, const TargetedModel& tm,
                                  const RemovalStrategy& strategy);
inline constexpr std::size_t kExactShapleyLimit = 12;

// Method tags understood by explain().
const std::vector<std::string>& baseline_method_tags();

SaliencyExplanation explain(const std::string& method, const Instance& x,
                            const TargetedModel& tm,
                            const RemovalStrategy& strategy,
                            const ExplainerConfig& cfg);

}  // namespace faithkit

#endif  // FAITHKIT_EXPLAINERS_H_
