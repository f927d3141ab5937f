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

#ifndef FAITHKIT_METRICS_H_
#define FAITHKIT_METRICS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithkit/data.h"
#include "faithkit/math.h"
#include "faithkit/models.h"
#include "faithkit/perturb.h"

namespace faithkit {

// Perturbation effect: how much removal moved the prediction.
enum class DeltaKind { kAbsDiff, kHalfSquared };
// Preservation effect: how much of the original prediction survives.
enum class PreservationKind { kConfidenceRatio, kRawConfidence };

std::string_view to_string(DeltaKind kind);
std::string_view to_string(PreservationKind kind);
DeltaKind delta_kind_from_string(std::string_view name);
PreservationKind preservation_kind_from_string(std::string_view name);

struct EffectConfig {
  DeltaKind delta = DeltaKind::kAbsDiff;
  PreservationKind preservation = PreservationKind::kConfidenceRatio;
  CorrelationKind tau = CorrelationKind::kPearson;
};

// Both arguments in [0, 1]; throws std::invalid_argument otherwise.
double delta(double y1, double y2, DeltaKind kind);
// Under kConfidenceRatio a zero original confidence is treated as fully
// preserved (returns 1).
double delta_minus(double y_orig, double y_pert, PreservationKind kind);

enum class Metric : std::size_t {
  kFC,
  kFE,
  kINF,
  kMC,
  kDEL,
  kINS,
  kNEG,
  kPOS,
  kRP,
  kIROF,
};
inline constexpr std::size_t kNumMetrics = 10;
inline constexpr std::array<Metric, kNumMetrics> kAllMetrics = {
    Metric::kFC,  Metric::kFE,  Metric::kINF, Metric::kMC,  Metric::kDEL,
    Metric::kINS, Metric::kNEG, Metric::kPOS, Metric::kRP,  Metric::kIROF};

using MetricScores = std::array<double, kNumMetrics>;

std::string_view metric_name(Metric m);
Metric metric_from_name(std::string_view name);
// DEL and POS are lower-is-better; every other metric is higher-is-better.
bool higher_is_better(Metric m);
inline double& at(MetricScores& s, Metric m) {
  return s[static_cast<std::size_t>(m)];
}
inline double at(const MetricScores& s, Metric m) {
  return s[static_cast<std::size_t>(m)];
}

enum class McSequence { kSingletons, kPrefixes };
// When the prediction counts as changed for NEG/POS.
enum class FlipRule {
  kArgmax,     // argmax class of predict_proba differs from the original
  kThreshold,  // target confidence dropped by at least flip_threshold
};

struct MetricConfig {
  EffectConfig effects;
  CorrelationKind mc_tau = CorrelationKind::kSpearman;
  std::size_t fc_exact_limit = 16;  // enumerate all subsets up to this n
  std::size_t fc_budget = 256;      // sampled subsets above the limit
  std::size_t inf_samples = 64;
  bool inf_distinct = false;
  std::size_t fe_samples = 32;
  McSequence mc_sequence = McSequence::kSingletons;
  FlipRule flip_rule = FlipRule::kArgmax;
  double flip_threshold = 0.5;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static MetricConfig from_json(const nlohmann::json& j);
};

// Evaluates f on perturbations of one instance, memoizing by index set.
class PerturbationOracle {
 public:
  PerturbationOracle(const Instance& x, const TargetedModel& tm,
                     const RemovalStrategy& strategy);

  const Instance& instance() const { return x_; }
  const TargetedModel& model() const { return tm_; }
  const RemovalStrategy& strategy() const { return strategy_; }
  std::size_t elements() const { return x_.elements(); }

  double original() const { return f_x_; }
  std::size_t original_class() const { return class_x_; }
  // f(x \ I)
  double removed(const IndexSet& I);
  const std::vector<double>& removed_proba(const IndexSet& I);
  // f(x° ∪ I)
  double inserted(const IndexSet& I);

  std::size_t evaluations() const { return evaluations_; }

 private:
  Instance x_;
  TargetedModel tm_;
  RemovalStrategy strategy_;
  double f_x_;
  std::size_t class_x_;
  std::map<IndexSet, std::vector<double>> removed_cache_;
  std::map<IndexSet, double> inserted_cache_;
  std::size_t evaluations_ = 0;
};

double local_sum(std::span<const double> s, const IndexSet& I);

// τ over an explicit family of index sets: local sums of s vs Δ[f(x), f(x\I)].
double local_correlation(std::span<const double> s, PerturbationOracle& oracle,
                         std::span<const IndexSet> family,
                         const EffectConfig& effects, CorrelationKind tau);

double fc(std::span<const double> s, PerturbationOracle& oracle,
          const MetricConfig& cfg);
double fc(std::span<const double> s, const Instance& x, const TargetedModel& tm,
          const RemovalStrategy& strategy, const MetricConfig& cfg);

using SaliencyMethod = std::function<std::vector<double>(const Instance&)>;
using PermutationMethod = std::function<Permutation(const Instance&)>;

struct FePair {
  Instance x;
  IndexSet removed;
};

// Correlation across samples: one (instance, index set) pair per entry.
double fe(const SaliencyMethod& method, std::span<const FePair> pairs,
          const TargetedModel& tm, const RemovalStrategy& strategy,
          const MetricConfig& cfg);

double inf(std::span<const double> s, PerturbationOracle& oracle,
           const MetricConfig& cfg, std::size_t samples, std::uint64_t seed);

double mc(std::span<const double> s, PerturbationOracle& oracle,
          const MetricConfig& cfg);

enum class CurveMode { kDEL, kINS, kNEG, kPOS };

// Step values k = 1..t of the preservation curve; t = n for DEL/INS, the
// first flip step (or n) for NEG/POS.
std::vector<double> curve_values(const Permutation& perm,
                                 PerturbationOracle& oracle,
                                 const MetricConfig& cfg, CurveMode mode);
// Exact average of the step-function integrand.
double curve_metric(const Permutation& perm, PerturbationOracle& oracle,
                    const MetricConfig& cfg, CurveMode mode);

// Δ after removing the top-j elements, j = 1..n (the j = 0 term is 0).
std::vector<double> rp_curve(const Permutation& perm, PerturbationOracle& oracle,
                             const MetricConfig& cfg);
double rp_sample(const Permutation& perm, PerturbationOracle& oracle,
                 const MetricConfig& cfg);
double irof_sample(const Permutation& perm, PerturbationOracle& oracle,
                   const MetricConfig& cfg);

double rp(const PermutationMethod& method, std::span<const Instance> samples,
          const TargetedModel& tm, const RemovalStrategy& strategy,
          const MetricConfig& cfg);
double irof(const PermutationMethod& method, std::span<const Instance> samples,
            const TargetedModel& tm, const RemovalStrategy& strategy,
            const MetricConfig& cfg);

struct MetricReport {
  MetricScores scores{};
  MetricScores timing_ms{};
  std::size_t model_evaluations = 0;
  nlohmann::json config;

  double score(Metric m) const { return at(scores, m); }
  nlohmann::json to_json(bool include_timing = true) const;
  static MetricReport from_json(const nlohmann::json& j);
};

inline constexpr int kMetricReportSchemaVersion = 1;

// All ten metrics for one explanation of one instance. Saliency metrics use
// s directly, permutation metrics use argsort_desc(s). FE uses cfg.fe_samples
// random non-empty index sets on x itself. Random streams derive from
// (cfg.seed, metric, sample_index).
MetricReport evaluate_all(std::span<const double> s, const Instance& x,
                          const TargetedModel& tm,
                          const RemovalStrategy& strategy,
                          const MetricConfig& cfg,
                          std::uint64_t sample_index = 0);

}  // namespace faithkit

#endif  // FAITHKIT_METRICS_H_
