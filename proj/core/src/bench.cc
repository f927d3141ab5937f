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

#include "faithkit/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "faithkit/parallel.h"

namespace faithkit {

BenchMethod baseline_bench_method(const std::string& tag,
                                  const RemovalStrategy& strategy,
                                  const ExplainerConfig& cfg) {
  return {tag, [tag, strategy, cfg](const Instance& x, const TargetedModel& tm) {
            return explain(tag, x, tm, strategy, cfg).scores;
          }};
}

BenchMethod explainer_bench_method(const std::string& name, ExplainerNet net) {
  return {name, [net = std::move(net)](const Instance& x, const TargetedModel&) {
            return net.forward(x);
          }};
}

nlohmann::json BenchmarkConfig::to_json() const {
  return {{"metrics", metrics.to_json()},
          {"latency_samples", latency_samples},
          {"warmup", warmup},
          {"max_test_samples", max_test_samples}};
}

RankTable rank_methods(std::span<const MetricScores> scores) {
  RankTable t;
  t.ranks.assign(scores.size(), MetricScores{});
  t.average_rank.assign(scores.size(), 0.0);
  if (scores.empty()) return t;
  std::vector<double> column(scores.size());
  for (Metric m : kAllMetrics) {
    for (std::size_t q = 0; q < scores.size(); ++q) column[q] = at(scores[q], m);
    const auto r = direction_ranks(column, higher_is_better(m));
    for (std::size_t q = 0; q < scores.size(); ++q) {
      at(t.ranks[q], m) = r[q];
      t.average_rank[q] += r[q];
    }
  }
  for (double& a : t.average_rank) a /= double(kAllMetrics.size());
  return t;
}

std::size_t BenchmarkResult::index_of(const std::string& method) const {
  const auto it = std::find(methods.begin(), methods.end(), method);
  if (it == methods.end()) {
    throw std::out_of_range("method not in benchmark: " + method);
  }
  return std::size_t(it - methods.begin());
}

namespace {

nlohmann::json scores_json(const MetricScores& s) {
  nlohmann::json j = nlohmann::json::object();
  for (Metric m : kAllMetrics) j[std::string(metric_name(m))] = at(s, m);
  return j;
}

MetricScores scores_from_json(const nlohmann::json& j) {
  MetricScores s{};
  for (Metric m : kAllMetrics) at(s, m) = j.at(std::string(metric_name(m)));
  return s;
}

}  // namespace

nlohmann::json BenchmarkResult::to_json(bool include_timing) const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t q = 0; q < methods.size(); ++q) {
    nlohmann::json row = {{"method", methods[q]},
                          {"scores", scores_json(scores[q])},
                          {"ranks", scores_json(ranks[q])},
                          {"average_rank", average_rank[q]}};
    if (include_timing) row["latency_ms"] = latency_ms[q];
    rows.push_back(std::move(row));
  }
  nlohmann::json dirs = nlohmann::json::object();
  for (Metric m : kAllMetrics) {
    dirs[std::string(metric_name(m))] = higher_is_better(m) ? "higher" : "lower";
  }
  return {{"schema_version", kBenchmarkSchemaVersion},
          {"samples", samples},
          {"directions", dirs},
          {"methods", rows},
          {"excluded", excluded},
          {"config", config}};
}

BenchmarkResult BenchmarkResult::from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != kBenchmarkSchemaVersion) {
    throw std::invalid_argument("unsupported benchmark schema version");
  }
  BenchmarkResult r;
  r.samples = j.at("samples");
  for (const auto& row : j.at("methods")) {
    r.methods.push_back(row.at("method"));
    r.scores.push_back(scores_from_json(row.at("scores")));
    r.ranks.push_back(scores_from_json(row.at("ranks")));
    r.average_rank.push_back(row.at("average_rank"));
    r.latency_ms.push_back(row.value("latency_ms", 0.0));
  }
  r.excluded = j.at("excluded").get<std::vector<std::string>>();
  r.config = j.at("config");
  return r;
}

double median_latency_ms(const BenchMethod& method,
                         std::span<const Instance> inputs,
                         const ModelPtr& model, std::size_t samples,
                         std::size_t warmup) {
  if (inputs.empty() || samples == 0) {
    throw std::invalid_argument("latency needs inputs and samples > 0");
  }
  std::vector<TargetedModel> targets;
  for (const auto& x : inputs) targets.push_back(target_prediction(model, x));
  for (std::size_t k = 0; k < warmup; ++k) {
    method.explain(inputs[k % inputs.size()], targets[k % inputs.size()]);
  }
  std::vector<double> times;
  times.reserve(samples);
  double sink = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const std::size_t q = k % inputs.size();
    const auto start = std::chrono::steady_clock::now();
    const auto s = method.explain(inputs[q], targets[q]);
    const auto stop = std::chrono::steady_clock::now();
    sink += s.empty() ? 0.0 : s[0];
    times.push_back(
        std::chrono::duration<double, std::milli>(stop - start).count());
  }
  if (std::isnan(sink)) times.push_back(0.0);  // keeps `sink` observable
  std::sort(times.begin(), times.end());
  const std::size_t m = times.size();
  return m % 2 ? times[m / 2] : 0.5 * (times[m / 2 - 1] + times[m / 2]);
}

namespace {

struct SampleOutcome {
  std::vector<MetricScores> scores;  // per method
  std::vector<std::string> errors;   // per method, empty if fine
  std::vector<std::vector<CurveRecord>> curves;
};

void record_curves(const std::string& method, std::size_t sample,
                   std::span<const double> s, const Instance& x,
                   const TargetedModel& tm, const RemovalStrategy& strategy,
                   const MetricConfig& cfg, std::vector<CurveRecord>& out) {
  PerturbationOracle oracle(x, tm, strategy);
  const Permutation perm = argsort_desc(s);
  auto del = curve_values(perm, oracle, cfg, CurveMode::kDEL);
  std::vector<double> irof(del.size());
  for (std::size_t k = 0; k < del.size(); ++k) irof[k] = 1.0 - del[k];
  out.push_back({method, sample, Metric::kDEL, del});
  out.push_back({method, sample, Metric::kINS,
                 curve_values(perm, oracle, cfg, CurveMode::kINS)});
  out.push_back({method, sample, Metric::kRP, rp_curve(perm, oracle, cfg)});
  out.push_back({method, sample, Metric::kIROF, std::move(irof)});
}

}  // namespace

BenchmarkResult run_benchmark(std::span<const Instance> test,
                              const ModelPtr& model,
                              std::span<const BenchMethod> methods,
                              const RemovalStrategy& strategy,
                              const BenchmarkConfig& cfg,
                              std::vector<CurveRecord>* curves) {
  if (test.empty()) throw std::invalid_argument("benchmark: empty test set");
  if (methods.empty()) throw std::invalid_argument("benchmark: no methods");
  const std::size_t count = cfg.max_test_samples == 0
                                ? test.size()
                                : std::min(cfg.max_test_samples, test.size());
  const auto samples = test.first(count);
  std::vector<SampleOutcome> outcomes(count);
  parallel_for(count, cfg.threads, [&](std::size_t q) {
    const Instance& x = samples[q];
    const TargetedModel tm = target_prediction(model, x);
    auto& out = outcomes[q];
    out.scores.assign(methods.size(), MetricScores{});
    out.errors.assign(methods.size(), "");
    out.curves.assign(methods.size(), {});
    for (std::size_t k = 0; k < methods.size(); ++k) {
      try {
        const auto s = methods[k].explain(x, tm);
        out.scores[k] = evaluate_all(s, x, tm, strategy, cfg.metrics, q).scores;
        if (curves) {
          record_curves(methods[k].name, q, s, x, tm, strategy, cfg.metrics,
                        out.curves[k]);
        }
      } catch (const std::exception& e) {
        out.errors[k] = e.what();
      }
    }
  });

  BenchmarkResult r;
  r.samples = count;
  r.config = cfg.to_json();
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    std::string error;
    for (std::size_t q = 0; q < count && error.empty(); ++q) {
      if (!outcomes[q].errors[k].empty()) {
        error = "sample " + std::to_string(q) + ": " + outcomes[q].errors[k];
      }
    }
    if (!error.empty()) {
      r.excluded.push_back(methods[k].name + ": " + error);
      continue;
    }
    MetricScores mean{};
    for (std::size_t q = 0; q < count; ++q) {
      for (std::size_t m = 0; m < mean.size(); ++m) {
        mean[m] += outcomes[q].scores[k][m];
      }
    }
    for (double& v : mean) v /= double(count);
    kept.push_back(k);
    r.methods.push_back(methods[k].name);
    r.scores.push_back(mean);
  }
  if (kept.empty()) throw std::runtime_error("benchmark: every method failed");
  const RankTable t = rank_methods(r.scores);
  r.ranks = t.ranks;
  r.average_rank = t.average_rank;
  for (std::size_t k : kept) {
    r.latency_ms.push_back(median_latency_ms(methods[k], samples, model,
                                             cfg.latency_samples, cfg.warmup));
  }
  if (curves) {
    curves->clear();
    for (std::size_t k : kept) {
      for (std::size_t q = 0; q < count; ++q) {
        for (auto& c : outcomes[q].curves[k]) curves->push_back(std::move(c));
      }
    }
  }
  return r;
}

bool better_or_tied(Metric m, double a, double b, double tolerance) {
  return higher_is_better(m) ? a >= b - tolerance : a <= b + tolerance;
}

std::size_t AblationResult::objective_best_or_tied(double tolerance) const {
  std::size_t wins = 0;
  for (Metric m : kAllMetrics) {
    bool ok = true;
    for (std::size_t q = 1; q < scores.size(); ++q) {
      ok = ok && better_or_tied(m, at(scores[0], m), at(scores[q], m),
                                tolerance);
    }
    wins += ok ? 1 : 0;
  }
  return wins;
}

nlohmann::json AblationResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t q = 0; q < settings.size(); ++q) {
    nlohmann::json row = {{"setting", settings[q]},
                          {"scores", scores_json(scores[q])}};
    if (q < logs.size() && !logs[q].empty()) {
      const auto& e = logs[q].back();
      row["final_losses"] = {{"loss_pc", e.loss_pc},
                             {"loss_lc", e.loss_lc},
                             {"loss_obj", e.loss_obj}};
    }
    rows.push_back(std::move(row));
  }
  return {{"schema_version", kBenchmarkSchemaVersion}, {"settings", rows}};
}

AblationResult run_ablation(std::span<const SignalPair> signals,
                            std::span<const Instance> lc_samples,
                            std::span<const Instance> test,
                            const ModelPtr& model,
                            const RemovalStrategy& strategy,
                            const ExplainerTrainConfig& train_cfg,
                            const BenchmarkConfig& bench_cfg) {
  AblationResult out;
  for (LossSelection sel : {LossSelection::kObjective,
                            LossSelection::kPatternOnly,
                            LossSelection::kLocalOnly}) {
    ExplainerTrainConfig cfg = train_cfg;
    cfg.loss = sel;
    auto trained = train_explainer(signals, lc_samples, model, strategy, cfg);
    const std::vector<BenchMethod> method{
        explainer_bench_method(std::string(to_string(sel)), trained.net)};
    BenchmarkConfig bc = bench_cfg;
    bc.latency_samples = 1;
    bc.warmup = 0;
    const auto r = run_benchmark(test, model, method, strategy, bc);
    out.settings.emplace_back(to_string(sel));
    out.scores.push_back(r.scores.at(0));
    out.logs.push_back(std::move(trained.log));
  }
  return out;
}

std::string markdown_rank_table(const BenchmarkResult& result) {
  std::ostringstream md;
  md.precision(4);
  md << "| Method |";
  for (Metric m : kAllMetrics) {
    md << ' ' << metric_name(m) << (higher_is_better(m) ? " ↑" : " ↓") << " |";
  }
  md << " Avg. rank |\n|---|";
  for (std::size_t k = 0; k <= kAllMetrics.size(); ++k) md << "---|";
  md << '\n';
  for (std::size_t q = 0; q < result.methods.size(); ++q) {
    md << "| " << result.methods[q] << " |";
    for (Metric m : kAllMetrics) {
      md << ' ' << at(result.scores[q], m) << " (" << at(result.ranks[q], m)
         << ") |";
    }
    md << ' ' << result.average_rank[q] << " |\n";
  }
  return md.str();
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void emit_report(const BenchmarkResult& result,
                 std::span<const CurveRecord> curves,
                 const std::filesystem::path& dir, const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string());
  {
    auto out = open_out(dir / (stem + ".json"));
    out << result.to_json(false).dump(2) << '\n';
  }
  {
    // Wall-clock numbers live apart so the score file stays reproducible.
    nlohmann::json latency = nlohmann::json::object();
    for (std::size_t q = 0; q < result.methods.size(); ++q) {
      latency[result.methods[q]] = result.latency_ms[q];
    }
    auto out = open_out(dir / (stem + "_latency.json"));
    out << nlohmann::json{{"unit", "ms"}, {"median_latency", latency}}.dump(2)
        << '\n';
  }
  {
    auto out = open_out(dir / (stem + ".csv"));
    out.precision(17);
    out << "method";
    for (Metric m : kAllMetrics) out << ',' << metric_name(m);
    out << ",average_rank\n";
    for (std::size_t q = 0; q < result.methods.size(); ++q) {
      out << result.methods[q];
      for (Metric m : kAllMetrics) out << ',' << at(result.scores[q], m);
      out << ',' << result.average_rank[q] << '\n';
    }
  }
  {
    auto out = open_out(dir / (stem + ".md"));
    out << markdown_rank_table(result);
  }
  if (!curves.empty()) {
    auto out = open_out(dir / (stem + "_curves.csv"));
    out.precision(17);
    out << "method,sample,metric,step,value\n";
    for (const auto& c : curves) {
      for (std::size_t k = 0; k < c.values.size(); ++k) {
        out << c.method << ',' << c.sample << ',' << metric_name(c.metric)
            << ',' << k + 1 << ',' << c.values[k] << '\n';
      }
    }
  }
}

}  // namespace faithkit
