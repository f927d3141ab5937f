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

#include "faithkit/signals.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "faithkit/math.h"
#include "faithkit/parallel.h"

namespace faithkit {

void PipelineConfig::validate() const {
  std::vector<std::string> errors;
  if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0)) {
    errors.push_back("dedup_threshold must lie in (0, 1]");
  }
  if (!(p > 0.0 && p < 1.0)) errors.push_back("p must lie in (0, 1)");
  if (methods.size() < 2) errors.push_back("need at least 2 methods");
  if (!errors.empty()) {
    std::string msg = "invalid pipeline config:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw std::invalid_argument(msg);
  }
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"dedup_threshold", dedup_threshold},
          {"p", p},
          {"methods", methods},
          {"quantile_scope",
           scope == QuantileScope::kPerSample ? "per_sample" : "global"}};
}

std::vector<SampleExplanations> generate_signals(
    std::span<const Instance> samples, std::span<const std::size_t> sample_ids,
    const ModelPtr& model, const std::vector<std::string>& methods,
    const ExplainerConfig& explainer_cfg, const RemovalStrategy& strategy,
    const MetricConfig& metric_cfg, std::size_t threads) {
  if (methods.size() < 2) {
    throw std::invalid_argument("generate_signals: need K >= 2 methods");
  }
  if (samples.size() != sample_ids.size()) {
    throw std::invalid_argument("generate_signals: sample id count mismatch");
  }
  std::vector<SampleExplanations> out(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t s) {
    const Instance& x = samples[s];
    const TargetedModel tm = target_prediction(model, x);
    SampleExplanations& entry = out[s];
    entry.sample_index = sample_ids[s];
    entry.instance = x;
    entry.target_class = tm.target_class();
    ExplainerConfig cfg = explainer_cfg;
    cfg.seed = mix_seed(explainer_cfg.seed, sample_ids[s]);
    for (const auto& method : methods) {
      try {
        EvaluatedExplanation item;
        item.explanation = explain(method, x, tm, strategy, cfg);
        item.scores = evaluate_all(item.explanation.scores, x, tm, strategy,
                                   metric_cfg, sample_ids[s])
                          .scores;
        entry.items.push_back(std::move(item));
      } catch (const std::exception& e) {
        entry.failures.push_back(method + ": " + e.what());
      }
    }
  });
  return out;
}

DedupResult dedup(std::span<const std::vector<double>> explanations,
                  double threshold) {
  DedupResult result;
  result.group_of.resize(explanations.size());
  for (std::size_t k = 0; k < explanations.size(); ++k) {
    bool grouped = false;
    for (std::size_t head : result.kept) {
      if (cosine_similarity(explanations[k], explanations[head]) >= threshold) {
        result.group_of[k] = head;
        grouped = true;
        break;
      }
    }
    if (!grouped) {
      result.group_of[k] = k;
      result.kept.push_back(k);
    }
  }
  return result;
}

MetricScores quantile_thresholds(std::span<const MetricScores> scores,
                                 double p) {
  if (scores.empty()) {
    throw std::invalid_argument("quantile_thresholds: no scores");
  }
  MetricScores thresholds{};
  std::vector<double> column(scores.size());
  for (Metric m : kAllMetrics) {
    for (std::size_t k = 0; k < scores.size(); ++k) column[k] = at(scores[k], m);
    at(thresholds, m) = quantile(column, higher_is_better(m) ? p : 1.0 - p);
  }
  return thresholds;
}

FilterResult filter_with_thresholds(std::span<const MetricScores> scores,
                                    const MetricScores& thresholds) {
  FilterResult result;
  result.thresholds = thresholds;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    bool pass = true;
    for (Metric m : kAllMetrics) {
      const double r = at(scores[k], m);
      const double t = at(thresholds, m);
      pass = pass && (higher_is_better(m) ? r >= t : r <= t);
    }
    if (pass) result.kept.push_back(k);
  }
  if (result.kept.empty() && !scores.empty()) {
    std::vector<double> mean_rank(scores.size(), 0.0);
    std::vector<double> column(scores.size());
    for (Metric m : kAllMetrics) {
      for (std::size_t k = 0; k < scores.size(); ++k) {
        column[k] = at(scores[k], m);
      }
      const auto ranks = direction_ranks(column, higher_is_better(m));
      for (std::size_t k = 0; k < scores.size(); ++k) mean_rank[k] += ranks[k];
    }
    result.kept.push_back(static_cast<std::size_t>(
        std::min_element(mean_rank.begin(), mean_rank.end()) -
        mean_rank.begin()));
    result.guard_used = true;
  }
  return result;
}

FilterResult filter(std::span<const MetricScores> scores, double p) {
  return filter_with_thresholds(scores, quantile_thresholds(scores, p));
}

nlohmann::json SignalPair::to_json() const {
  nlohmann::json scores = nlohmann::json::object();
  for (Metric m : kAllMetrics) {
    scores[std::string(metric_name(m))] = at(metric_scores, m);
  }
  return {{"sample_index", sample_index},
          {"n", instance.elements()},
          {"d", instance.block_dim()},
          {"instance", instance.values()},
          {"target_class", target_class},
          {"saliency", saliency},
          {"source_method", source_method},
          {"metric_scores", scores}};
}

SignalPair SignalPair::from_json(const nlohmann::json& j) {
  SignalPair p;
  p.sample_index = j.at("sample_index");
  p.instance = Instance(j.at("n"), j.at("d"),
                        j.at("instance").get<std::vector<double>>());
  p.target_class = j.at("target_class");
  p.saliency = j.at("saliency").get<std::vector<double>>();
  p.source_method = j.at("source_method").get<std::string>();
  for (Metric m : kAllMetrics) {
    at(p.metric_scores, m) = j.at("metric_scores").at(std::string(metric_name(m)));
  }
  return p;
}

std::vector<SignalPair> build_pairs(
    std::span<const SampleExplanations> samples,
    std::span<const std::vector<std::size_t>> kept) {
  if (samples.size() != kept.size()) {
    throw std::invalid_argument("build_pairs: one kept list per sample");
  }
  std::vector<SignalPair> pairs;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (std::size_t k : kept[s]) {
      const auto& item = samples[s].items.at(k);
      SignalPair pair;
      pair.sample_index = samples[s].sample_index;
      pair.instance = samples[s].instance;
      pair.target_class = samples[s].target_class;
      pair.saliency = item.explanation.scores;
      pair.source_method = item.explanation.method;
      pair.metric_scores = item.scores;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

SignalSet process_signals(std::span<const SampleExplanations> samples,
                          const PipelineConfig& cfg) {
  cfg.validate();
  SignalSet set;
  std::vector<std::vector<std::size_t>> retained(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    std::vector<std::vector<double>> vectors;
    for (const auto& item : samples[s].items) {
      vectors.push_back(item.explanation.scores);
    }
    retained[s] = dedup(vectors, cfg.dedup_threshold).kept;
  }

  MetricScores global_thresholds{};
  if (cfg.scope == QuantileScope::kGlobal) {
    std::vector<MetricScores> all;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      for (std::size_t k : retained[s]) all.push_back(samples[s].items[k].scores);
    }
    if (!all.empty()) global_thresholds = quantile_thresholds(all, cfg.p);
  }

  std::vector<std::vector<std::size_t>> kept(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    SampleSummary summary;
    summary.sample_index = samples[s].sample_index;
    summary.k = samples[s].items.size();
    summary.k_dedup = retained[s].size();
    if (!retained[s].empty()) {
      std::vector<MetricScores> scores;
      for (std::size_t k : retained[s]) scores.push_back(samples[s].items[k].scores);
      const FilterResult fr =
          cfg.scope == QuantileScope::kPerSample
              ? filter(scores, cfg.p)
              : filter_with_thresholds(scores, global_thresholds);
      for (std::size_t k : fr.kept) kept[s].push_back(retained[s][k]);
      summary.guard_used = fr.guard_used;
    }
    summary.k_filter = kept[s].size();
    set.summary.push_back(summary);
  }
  set.pairs = build_pairs(samples, kept);
  return set;
}

void write_signals_jsonl(std::ostream& out, std::span<const SignalPair> pairs,
                         const std::string& config_hash) {
  for (const auto& pair : pairs) {
    auto j = pair.to_json();
    j["config_hash"] = config_hash;
    out << j.dump() << '\n';
  }
}

std::vector<SignalPair> read_signals_jsonl(std::istream& in,
                                           std::string* config_hash) {
  std::vector<SignalPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("signals line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    if (config_hash && j.contains("config_hash")) {
      *config_hash = j["config_hash"].get<std::string>();
    }
    pairs.push_back(SignalPair::from_json(j));
  }
  return pairs;
}

}  // namespace faithkit
