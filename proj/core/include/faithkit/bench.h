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

#ifndef FAITHKIT_BENCH_H_
#define FAITHKIT_BENCH_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithkit/data.h"
#include "faithkit/explainer_net.h"
#include "faithkit/explainers.h"
#include "faithkit/metrics.h"
#include "faithkit/models.h"
#include "faithkit/perturb.h"
#include "faithkit/signals.h"

namespace faithkit {

using ExplainFn =
    std::function<std::vector<double>(const Instance&, const TargetedModel&)>;

struct BenchMethod {
  std::string name;
  ExplainFn explain;
};

// Wraps explain(tag, ...) with its scores (normalized to [0, 1]).
BenchMethod baseline_bench_method(const std::string& tag,
                                  const RemovalStrategy& strategy,
                                  const ExplainerConfig& cfg);
// The trained explainer needs no model access.
BenchMethod explainer_bench_method(const std::string& name, ExplainerNet net);

struct BenchmarkConfig {
  MetricConfig metrics;
  std::size_t latency_samples = 50;
  std::size_t warmup = 5;
  std::size_t max_test_samples = 0;  // 0 = every test sample
  std::size_t threads = 1;

  nlohmann::json to_json() const;
};

// Rank 1 is best; lower-better metrics rank ascending. Ties share the mean
// of their ranks.
struct RankTable {
  std::vector<MetricScores> ranks;
  std::vector<double> average_rank;
};
RankTable rank_methods(std::span<const MetricScores> scores);

struct BenchmarkResult {
  std::vector<std::string> methods;
  std::vector<MetricScores> scores;  // mean over test samples
  std::vector<MetricScores> ranks;
  std::vector<double> average_rank;
  std::vector<double> latency_ms;    // median per-sample explanation time
  std::vector<std::string> excluded;  // "method: reason"
  std::size_t samples = 0;
  nlohmann::json config;

  std::size_t index_of(const std::string& method) const;
  nlohmann::json to_json(bool include_timing = true) const;
  static BenchmarkResult from_json(const nlohmann::json& j);
  friend bool operator==(const BenchmarkResult&,
                         const BenchmarkResult&) = default;
};

inline constexpr int kBenchmarkSchemaVersion = 1;

// Per-sample step curves for DEL, INS, RP and IROF.
struct CurveRecord {
  std::string method;
  std::size_t sample = 0;
  Metric metric = Metric::kDEL;
  std::vector<double> values;
};

// Target = predicted class of each test sample. A method that throws on any
// sample is dropped (reason in `excluded`) and ranks cover the rest.
BenchmarkResult run_benchmark(std::span<const Instance> test,
                              const ModelPtr& model,
                              std::span<const BenchMethod> methods,
                              const RemovalStrategy& strategy,
                              const BenchmarkConfig& cfg,
                              std::vector<CurveRecord>* curves = nullptr);

// Median wall-clock ms per call over `samples` calls after `warmup` calls,
// cycling through `inputs`.
double median_latency_ms(const BenchMethod& method,
                         std::span<const Instance> inputs,
                         const ModelPtr& model, std::size_t samples,
                         std::size_t warmup);

struct AblationResult {
  std::vector<std::string> settings;  // objective, pattern_only, local_only
  std::vector<MetricScores> scores;
  std::vector<std::vector<EpochLog>> logs;

  // Metrics on which `settings[0]` is best or within `tolerance` of the best.
  std::size_t objective_best_or_tied(double tolerance) const;
  nlohmann::json to_json() const;
};

// Trains one explainer per loss selection with otherwise identical config and
// scores each on `test`.
AblationResult run_ablation(std::span<const SignalPair> signals,
                            std::span<const Instance> lc_samples,
                            std::span<const Instance> test,
                            const ModelPtr& model,
                            const RemovalStrategy& strategy,
                            const ExplainerTrainConfig& train_cfg,
                            const BenchmarkConfig& bench_cfg);

// True when `a` is at least as good as `b` on metric m, up to `tolerance`.
bool better_or_tied(Metric m, double a, double b, double tolerance);

// Writes <stem>.json (scores and ranks, no timing), <stem>_latency.json,
// <stem>.csv, <stem>.md and, when curves are given, <stem>_curves.csv into
// `dir`. Throws std::runtime_error if unwritable.
void emit_report(const BenchmarkResult& result,
                 std::span<const CurveRecord> curves,
                 const std::filesystem::path& dir,
                 const std::string& stem = "benchmark");

std::string markdown_rank_table(const BenchmarkResult& result);

}  // namespace faithkit

#endif  // FAITHKIT_BENCH_H_
