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

#ifndef FAITHKIT_SIGNALS_H_
#define FAITHKIT_SIGNALS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithkit/data.h"
#include "faithkit/explainers.h"
#include "faithkit/metrics.h"
#include "faithkit/models.h"

namespace faithkit {

struct EvaluatedExplanation {
  SaliencyExplanation explanation;
  MetricScores scores{};
};

// All K explanations generated for one sample, in method-list order.
struct SampleExplanations {
  std::size_t sample_index = 0;
  Instance instance;
  std::size_t target_class = 0;
  std::vector<EvaluatedExplanation> items;
  std::vector<std::string> failures;  // "method: reason"
};

enum class QuantileScope { kPerSample, kGlobal };

struct PipelineConfig {
  double dedup_threshold = 0.95;
  double p = 0.5;
  std::vector<std::string> methods = baseline_method_tags();
  QuantileScope scope = QuantileScope::kPerSample;

  // Throws std::invalid_argument listing every violated range.
  void validate() const;
  nlohmann::json to_json() const;
};

// Explains every sample with every method (target = predicted class) and
// attaches the ten metric scores. A method that throws on a sample is
// recorded in `failures` and skipped.
std::vector<SampleExplanations> generate_signals(
    std::span<const Instance> samples, std::span<const std::size_t> sample_ids,
    const ModelPtr& model, const std::vector<std::string>& methods,
    const ExplainerConfig& explainer_cfg, const RemovalStrategy& strategy,
    const MetricConfig& metric_cfg, std::size_t threads = 1);

struct DedupResult {
  std::vector<std::size_t> kept;      // indices of group heads
  std::vector<std::size_t> group_of;  // head index for every input
  std::size_t k_dedup() const { return kept.size(); }
};

// Greedy grouping in input order: an explanation joins the first kept
// explanation with cosine similarity >= threshold, otherwise it starts a
// new group.
DedupResult dedup(std::span<const std::vector<double>> explanations,
                  double threshold);

struct FilterResult {
  std::vector<std::size_t> kept;
  MetricScores thresholds{};
  bool guard_used = false;
  std::size_t k_filter() const { return kept.size(); }
};

// p-quantile for higher-is-better metrics, (1 - p)-quantile for the others.
MetricScores quantile_thresholds(std::span<const MetricScores> scores,
                                 double p);

// Keeps explanations passing all ten thresholds; if none pass, keeps the one
// with the best mean direction-adjusted rank.
FilterResult filter_with_thresholds(std::span<const MetricScores> scores,
                                    const MetricScores& thresholds);
FilterResult filter(std::span<const MetricScores> scores, double p);

struct SignalPair {
  std::size_t sample_index = 0;
  Instance instance;
  std::size_t target_class = 0;
  std::vector<double> saliency;
  std::string source_method;
  MetricScores metric_scores{};

  nlohmann::json to_json() const;
  static SignalPair from_json(const nlohmann::json& j);
};

struct SampleSummary {
  std::size_t sample_index = 0;
  std::size_t k = 0;
  std::size_t k_dedup = 0;
  std::size_t k_filter = 0;
  bool guard_used = false;
};

// One kept-index list per sample, indexing that sample's `items`.
std::vector<SignalPair> build_pairs(
    std::span<const SampleExplanations> samples,
    std::span<const std::vector<std::size_t>> kept);

struct SignalSet {
  std::vector<SignalPair> pairs;
  std::vector<SampleSummary> summary;
};

// dedup -> filter -> build_pairs over every sample.
SignalSet process_signals(std::span<const SampleExplanations> samples,
                          const PipelineConfig& cfg);

// JSON-lines: one SignalPair per line, each tagged with `config_hash`.
void write_signals_jsonl(std::ostream& out, std::span<const SignalPair> pairs,
                         const std::string& config_hash);
std::vector<SignalPair> read_signals_jsonl(std::istream& in,
                                           std::string* config_hash = nullptr);

}  // namespace faithkit

#endif  // FAITHKIT_SIGNALS_H_
