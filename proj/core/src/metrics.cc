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

#include "faithkit/metrics.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace faithkit {

namespace {

constexpr double kRangeSlack = 1e-12;

void check_unit(double y, const char* what) {
  if (!(y >= -kRangeSlack && y <= 1.0 + kRangeSlack)) {
    throw std::invalid_argument(std::string(what) + ": value " +
                                std::to_string(y) + " outside [0, 1]");
  }
}

}  // namespace

std::string_view to_string(DeltaKind kind) {
  return kind == DeltaKind::kAbsDiff ? "abs_diff" : "half_squared";
}

std::string_view to_string(PreservationKind kind) {
  return kind == PreservationKind::kConfidenceRatio ? "confidence_ratio"
                                                    : "raw_confidence";
}

DeltaKind delta_kind_from_string(std::string_view name) {
  if (name == "abs_diff") return DeltaKind::kAbsDiff;
  if (name == "half_squared") return DeltaKind::kHalfSquared;
  throw std::invalid_argument("unknown delta kind: " + std::string(name));
}

PreservationKind preservation_kind_from_string(std::string_view name) {
  if (name == "confidence_ratio") return PreservationKind::kConfidenceRatio;
  if (name == "raw_confidence") return PreservationKind::kRawConfidence;
  throw std::invalid_argument("unknown preservation kind: " +
                              std::string(name));
}

double delta(double y1, double y2, DeltaKind kind) {
  check_unit(y1, "delta");
  check_unit(y2, "delta");
  const double diff = y1 - y2;
  return kind == DeltaKind::kAbsDiff ? std::abs(diff) : 0.5 * diff * diff;
}

double delta_minus(double y_orig, double y_pert, PreservationKind kind) {
  check_unit(y_orig, "delta_minus");
  check_unit(y_pert, "delta_minus");
  if (kind == PreservationKind::kRawConfidence) {
    return std::clamp(y_pert, 0.0, 1.0);
  }
  if (y_orig <= 0.0) return 1.0;
  return std::min(1.0, std::max(0.0, y_pert) / y_orig);
}

namespace {

constexpr std::array<std::string_view, kNumMetrics> kMetricNames = {
    "FC", "FE", "INF", "MC", "DEL", "INS", "NEG", "POS", "RP", "IROF"};

}  // namespace

std::string_view metric_name(Metric m) {
  return kMetricNames[static_cast<std::size_t>(m)];
}

Metric metric_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (kMetricNames[i] == name) return kAllMetrics[i];
  }
  throw std::invalid_argument("unknown metric: " + std::string(name));
}

bool higher_is_better(Metric m) {
  return m != Metric::kDEL && m != Metric::kPOS;
}

nlohmann::json MetricConfig::to_json() const {
  return {{"delta", to_string(effects.delta)},
          {"delta_minus", to_string(effects.preservation)},
          {"tau", to_string(effects.tau)},
          {"tau_mc", to_string(mc_tau)},
          {"fc_exact_limit", fc_exact_limit},
          {"fc_budget", fc_budget},
          {"inf_samples", inf_samples},
          {"inf_distinct", inf_distinct},
          {"fe_samples", fe_samples},
          {"mc_sequence",
           mc_sequence == McSequence::kSingletons ? "singletons" : "prefixes"},
          {"flip_rule", flip_rule == FlipRule::kArgmax ? "argmax" : "threshold"},
          {"flip_threshold", flip_threshold},
          {"seed", seed}};
}

MetricConfig MetricConfig::from_json(const nlohmann::json& j) {
  MetricConfig c;
  c.effects.delta = delta_kind_from_string(j.at("delta").get<std::string>());
  c.effects.preservation =
      preservation_kind_from_string(j.at("delta_minus").get<std::string>());
  c.effects.tau = correlation_kind_from_string(j.at("tau").get<std::string>());
  c.mc_tau = correlation_kind_from_string(j.at("tau_mc").get<std::string>());
  c.fc_exact_limit = j.at("fc_exact_limit");
  c.fc_budget = j.at("fc_budget");
  c.inf_samples = j.at("inf_samples");
  c.inf_distinct = j.at("inf_distinct");
  c.fe_samples = j.at("fe_samples");
  c.mc_sequence = j.at("mc_sequence") == "singletons" ? McSequence::kSingletons
                                                      : McSequence::kPrefixes;
  c.flip_rule =
      j.at("flip_rule") == "argmax" ? FlipRule::kArgmax : FlipRule::kThreshold;
  c.flip_threshold = j.at("flip_threshold");
  c.seed = j.at("seed");
  return c;
}

// ---------------------------------------------------------------------------

PerturbationOracle::PerturbationOracle(const Instance& x,
                                       const TargetedModel& tm,
                                       const RemovalStrategy& strategy)
    : x_(x), tm_(tm), strategy_(strategy) {
  tm_.model().check_input(x_);
  if (!x_.same_shape(strategy_.baseline)) {
    throw std::invalid_argument("PerturbationOracle: baseline shape mismatch");
  }
  const auto p = tm_.model().predict_proba(x_);
  ++evaluations_;
  f_x_ = p[tm_.target_class()];
  class_x_ = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) -
                                      p.begin());
}

const std::vector<double>& PerturbationOracle::removed_proba(const IndexSet& I) {
  auto it = removed_cache_.find(I);
  if (it == removed_cache_.end()) {
    auto p = tm_.model().predict_proba(remove(x_, I, strategy_));
    ++evaluations_;
    it = removed_cache_.emplace(I, std::move(p)).first;
  }
  return it->second;
}

double PerturbationOracle::removed(const IndexSet& I) {
  return removed_proba(I)[tm_.target_class()];
}

double PerturbationOracle::inserted(const IndexSet& I) {
  auto it = inserted_cache_.find(I);
  if (it == inserted_cache_.end()) {
    const double v = tm_(insert(strategy_.baseline, x_, I));
    ++evaluations_;
    it = inserted_cache_.emplace(I, v).first;
  }
  return it->second;
}

double local_sum(std::span<const double> s, const IndexSet& I) {
  double total = 0.0;
  for (std::size_t i : I) total += s[i];
  return total;
}

namespace {

void check_explanation(std::span<const double> s, const PerturbationOracle& o) {
  if (s.size() != o.elements()) {
    throw std::invalid_argument("explanation has " + std::to_string(s.size()) +
                                " entries, instance has " +
                                std::to_string(o.elements()) + " elements");
  }
}

}  // namespace

double local_correlation(std::span<const double> s, PerturbationOracle& oracle,
                         std::span<const IndexSet> family,
                         const EffectConfig& effects, CorrelationKind tau) {
  check_explanation(s, oracle);
  std::vector<double> sums, effects_v;
  sums.reserve(family.size());
  effects_v.reserve(family.size());
  const double fx = oracle.original();
  for (const auto& I : family) {
    sums.push_back(local_sum(s, I));
    effects_v.push_back(delta(fx, oracle.removed(I), effects.delta));
  }
  return correlation(tau, sums, effects_v);
}

double fc(std::span<const double> s, PerturbationOracle& oracle,
          const MetricConfig& cfg) {
  const std::size_t n = oracle.elements();
  SubsetRequest req;
  if (n <= cfg.fc_exact_limit && n <= 16) {
    req.mode = SubsetMode::kAllSubsets;
  } else {
    req.mode = SubsetMode::kUniformPowerset;
    req.count = cfg.fc_budget;
    req.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(Metric::kFC));
  }
  const auto family = sample_subsets(n, req);
  return local_correlation(s, oracle, family, cfg.effects, cfg.effects.tau);
}

double fc(std::span<const double> s, const Instance& x, const TargetedModel& tm,
          const RemovalStrategy& strategy, const MetricConfig& cfg) {
  PerturbationOracle oracle(x, tm, strategy);
  return fc(s, oracle, cfg);
}

double fe(const SaliencyMethod& method, std::span<const FePair> pairs,
          const TargetedModel& tm, const RemovalStrategy& strategy,
          const MetricConfig& cfg) {
  if (pairs.size() < 2) throw std::invalid_argument("fe: need >= 2 pairs");
  std::vector<double> sums, effects;
  for (const auto& pair : pairs) {
    const auto s = method(pair.x);
    if (s.size() != pair.x.elements()) {
      throw std::invalid_argument("fe: explanation length mismatch");
    }
    pair.removed.check_range(pair.x.elements());
    sums.push_back(local_sum(s, pair.removed));
    effects.push_back(delta(tm(pair.x), tm(remove(pair.x, pair.removed, strategy)),
                            cfg.effects.delta));
  }
  return correlation(cfg.effects.tau, sums, effects);
}

double inf(std::span<const double> s, PerturbationOracle& oracle,
           const MetricConfig& cfg, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("inf: need >= 2 samples");
  SubsetRequest req;
  req.mode = SubsetMode::kUniformPowerset;
  req.count = samples;
  req.seed = seed;
  req.distinct = cfg.inf_distinct;
  const auto family = sample_subsets(oracle.elements(), req);
  return local_correlation(s, oracle, family, cfg.effects, cfg.effects.tau);
}

double mc(std::span<const double> s, PerturbationOracle& oracle,
          const MetricConfig& cfg) {
  check_explanation(s, oracle);
  const std::size_t n = oracle.elements();
  if (n < 2) throw std::invalid_argument("mc: need n >= 2");
  SubsetRequest req;
  Permutation order;
  if (cfg.mc_sequence == McSequence::kSingletons) {
    req.mode = SubsetMode::kSingletons;
  } else {
    order = argsort_desc(s);
    req.mode = SubsetMode::kPrefixes;
    req.order = &order;
  }
  const auto family = sample_subsets(n, req);
  return local_correlation(s, oracle, family, cfg.effects, cfg.mc_tau);
}

namespace {

bool prediction_changed(PerturbationOracle& oracle, const IndexSet& I,
                        const MetricConfig& cfg) {
  const auto& p = oracle.removed_proba(I);
  if (cfg.flip_rule == FlipRule::kArgmax) {
    const auto cls = static_cast<std::size_t>(
        std::max_element(p.begin(), p.end()) - p.begin());
    return cls != oracle.original_class();
  }
  return oracle.original() - p[oracle.model().target_class()] >=
         cfg.flip_threshold;
}

void check_perm(const Permutation& perm, const PerturbationOracle& oracle) {
  if (perm.size() == 0) throw std::invalid_argument("curve metric: n = 0");
  if (perm.size() != oracle.elements()) {
    throw std::invalid_argument("permutation length does not match instance");
  }
}

}  // namespace

std::vector<double> curve_values(const Permutation& perm,
                                 PerturbationOracle& oracle,
                                 const MetricConfig& cfg, CurveMode mode) {
  check_perm(perm, oracle);
  const std::size_t n = perm.size();
  const double fx = oracle.original();
  const auto kind = cfg.effects.preservation;
  std::vector<double> values;
  values.reserve(n);
  switch (mode) {
    case CurveMode::kDEL:
      for (std::size_t k = 1; k <= n; ++k) {
        values.push_back(
            delta_minus(fx, oracle.removed(IndexSet::prefix(perm, k)), kind));
      }
      break;
    case CurveMode::kINS:
      for (std::size_t k = 1; k <= n; ++k) {
        values.push_back(
            delta_minus(fx, oracle.inserted(IndexSet::prefix(perm, k)), kind));
      }
      break;
    case CurveMode::kNEG:
    case CurveMode::kPOS: {
      const Permutation order = mode == CurveMode::kPOS ? perm : perm.reversed();
      for (std::size_t k = 1; k <= n; ++k) {
        const auto I = IndexSet::prefix(order, k);
        values.push_back(delta_minus(fx, oracle.removed(I), kind));
        if (prediction_changed(oracle, I, cfg)) break;
      }
      break;
    }
  }
  return values;
}

double curve_metric(const Permutation& perm, PerturbationOracle& oracle,
                    const MetricConfig& cfg, CurveMode mode) {
  const auto values = curve_values(perm, oracle, cfg, mode);
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

std::vector<double> rp_curve(const Permutation& perm, PerturbationOracle& oracle,
                             const MetricConfig& cfg) {
  check_perm(perm, oracle);
  const double fx = oracle.original();
  std::vector<double> values;
  for (std::size_t j = 1; j <= perm.size(); ++j) {
    values.push_back(delta(fx, oracle.removed(IndexSet::prefix(perm, j)),
                           cfg.effects.delta));
  }
  return values;
}

double rp_sample(const Permutation& perm, PerturbationOracle& oracle,
                 const MetricConfig& cfg) {
  const auto values = rp_curve(perm, oracle, cfg);
  double total = 0.0;  // the j = 0 term contributes Δ[f(x), f(x)] = 0
  for (double v : values) total += v;
  return total / static_cast<double>(perm.size() + 1);
}

double irof_sample(const Permutation& perm, PerturbationOracle& oracle,
                   const MetricConfig& cfg) {
  const auto values = curve_values(perm, oracle, cfg, CurveMode::kDEL);
  double total = 0.0;
  for (double v : values) total += 1.0 - v;
  return total / static_cast<double>(perm.size());
}

namespace {

template <typename PerSample>
double dataset_mean(const PermutationMethod& method,
                    std::span<const Instance> samples, const TargetedModel& tm,
                    const RemovalStrategy& strategy, PerSample per_sample) {
  if (samples.empty()) throw std::invalid_argument("need >= 1 sample");
  double total = 0.0;
  for (const auto& x : samples) {
    PerturbationOracle oracle(x, tm, strategy);
    total += per_sample(method(x), oracle);
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

double rp(const PermutationMethod& method, std::span<const Instance> samples,
          const TargetedModel& tm, const RemovalStrategy& strategy,
          const MetricConfig& cfg) {
  return dataset_mean(method, samples, tm, strategy,
                      [&](const Permutation& p, PerturbationOracle& o) {
                        return rp_sample(p, o, cfg);
                      });
}

double irof(const PermutationMethod& method, std::span<const Instance> samples,
            const TargetedModel& tm, const RemovalStrategy& strategy,
            const MetricConfig& cfg) {
  return dataset_mean(method, samples, tm, strategy,
                      [&](const Permutation& p, PerturbationOracle& o) {
                        return irof_sample(p, o, cfg);
                      });
}

// ---------------------------------------------------------------------------

nlohmann::json MetricReport::to_json(bool include_timing) const {
  nlohmann::json scores_j = nlohmann::json::object();
  nlohmann::json dirs = nlohmann::json::object();
  nlohmann::json timing = nlohmann::json::object();
  for (Metric m : kAllMetrics) {
    const std::string name(metric_name(m));
    scores_j[name] = score(m);
    dirs[name] = higher_is_better(m) ? "higher" : "lower";
    timing[name] = at(timing_ms, m);
  }
  nlohmann::json j = {{"schema_version", kMetricReportSchemaVersion},
                      {"scores", scores_j},
                      {"directions", dirs},
                      {"model_evaluations", model_evaluations},
                      {"config", config}};
  if (include_timing) j["timing_ms"] = timing;
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kMetricReportSchemaVersion) {
    throw std::invalid_argument("MetricReport: unsupported schema version");
  }
  MetricReport r;
  for (Metric m : kAllMetrics) {
    const std::string name(metric_name(m));
    at(r.scores, m) = j.at("scores").at(name);
    if (j.contains("timing_ms")) at(r.timing_ms, m) = j["timing_ms"].at(name);
  }
  r.model_evaluations = j.value("model_evaluations", std::size_t{0});
  r.config = j.value("config", nlohmann::json::object());
  return r;
}

MetricReport evaluate_all(std::span<const double> s, const Instance& x,
                          const TargetedModel& tm,
                          const RemovalStrategy& strategy,
                          const MetricConfig& cfg, std::uint64_t sample_index) {
  PerturbationOracle oracle(x, tm, strategy);
  check_explanation(s, oracle);
  const Permutation perm = argsort_desc(s);
  const std::size_t n = x.elements();
  MetricReport report;
  report.config = cfg.to_json();
  report.config["removal"] = to_string(strategy.kind);
  report.config["sample_index"] = sample_index;

  auto stream = [&](Metric m) {
    return mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(m)),
                    sample_index);
  };
  auto timed = [&](Metric m, auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    at(report.scores, m) = fn();
    at(report.timing_ms, m) = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
  };

  timed(Metric::kFC, [&] {
    MetricConfig c = cfg;
    c.seed = stream(Metric::kFC);
    return fc(s, oracle, c);
  });
  timed(Metric::kFE, [&] {
    SubsetRequest req;
    req.mode = SubsetMode::kUniformPowerset;
    req.count = cfg.fe_samples;
    req.seed = stream(Metric::kFE);
    req.exclude_empty = true;
    const auto family = sample_subsets(n, req);
    return local_correlation(s, oracle, family, cfg.effects, cfg.effects.tau);
  });
  timed(Metric::kINF, [&] {
    return inf(s, oracle, cfg, cfg.inf_samples, stream(Metric::kINF));
  });
  timed(Metric::kMC, [&] { return n >= 2 ? mc(s, oracle, cfg) : 0.0; });
  timed(Metric::kDEL,
        [&] { return curve_metric(perm, oracle, cfg, CurveMode::kDEL); });
  timed(Metric::kINS,
        [&] { return curve_metric(perm, oracle, cfg, CurveMode::kINS); });
  timed(Metric::kNEG,
        [&] { return curve_metric(perm, oracle, cfg, CurveMode::kNEG); });
  timed(Metric::kPOS,
        [&] { return curve_metric(perm, oracle, cfg, CurveMode::kPOS); });
  timed(Metric::kRP, [&] { return rp_sample(perm, oracle, cfg); });
  timed(Metric::kIROF, [&] { return irof_sample(perm, oracle, cfg); });
  report.model_evaluations = oracle.evaluations();
  return report;
}

}  // namespace faithkit
