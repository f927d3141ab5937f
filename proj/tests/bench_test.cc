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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "test_support.h"

namespace faithkit {
namespace {

MetricScores uniform_scores(double up, double down) {
  MetricScores s{};
  for (Metric m : kAllMetrics) at(s, m) = higher_is_better(m) ? up : down;
  return s;
}

// Rank of entry q on one column by counting, independent of the library.
double count_rank(const std::vector<MetricScores>& scores, std::size_t q,
                  Metric m) {
  double better = 0.0, tied = 0.0;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (r == q) continue;
    const double a = at(scores[r], m), b = at(scores[q], m);
    if (a == b) tied += 1.0;
    else if (higher_is_better(m) ? a > b : a < b) better += 1.0;
  }
  return 1.0 + better + tied / 2.0;
}

TEST(Ranks, DominatingMethod) {
  const std::vector<MetricScores> scores{uniform_scores(0.2, 0.8),
                                         uniform_scores(0.9, 0.1)};
  const auto t = rank_methods(scores);
  EXPECT_EQ(t.average_rank, (std::vector<double>{2.0, 1.0}));
}

TEST(Ranks, TiesShareMeanRank) {
  std::vector<MetricScores> scores{uniform_scores(0.5, 0.5),
                                   uniform_scores(0.5, 0.5),
                                   uniform_scores(0.1, 0.9)};
  const auto t = rank_methods(scores);
  for (Metric m : kAllMetrics) {
    EXPECT_EQ(at(t.ranks[0], m), 1.5);
    EXPECT_EQ(at(t.ranks[1], m), 1.5);
    EXPECT_EQ(at(t.ranks[2], m), 3.0);
  }
}

TEST(Ranks, InvariantUnderMonotoneRescaling) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MetricScores> scores(5);
    for (auto& s : scores) {
      for (double& v : s) v = testing::uniform_vector(1, rng)[0];
    }
    const auto before = rank_methods(scores).average_rank;
    const std::size_t col = trial % kNumMetrics;
    for (auto& s : scores) s[col] = std::exp(4.0 * s[col]) + 3.0;
    EXPECT_EQ(rank_methods(scores).average_rank, before);
  }
}

TEST(BetterOrTied, RespectsDirection) {
  EXPECT_TRUE(better_or_tied(Metric::kDEL, 0.2, 0.3, 0.0));
  EXPECT_FALSE(better_or_tied(Metric::kDEL, 0.3, 0.2, 0.0));
  EXPECT_TRUE(better_or_tied(Metric::kINS, 0.3, 0.2, 0.0));
  EXPECT_TRUE(better_or_tied(Metric::kINS, 0.2, 0.2005, 1e-3));
  EXPECT_FALSE(better_or_tied(Metric::kINS, 0.2, 0.21, 1e-3));
}

TEST(Ablation, BestOrTiedCount) {
  AblationResult r;
  r.settings = {"objective", "pattern_only", "local_only"};
  r.scores = {uniform_scores(0.5, 0.5), uniform_scores(0.4, 0.6),
              uniform_scores(0.5, 0.5)};
  at(r.scores[1], Metric::kFC) = 0.9;
  at(r.scores[2], Metric::kDEL) = 0.1;
  EXPECT_EQ(r.objective_best_or_tied(1e-3), 8u);
}

class Benchmark : public ::testing::Test {
 protected:
  void SetUp() override {
    task_ = testing::additive_task(5, 3);
    for (int k = 0; k < 6; ++k) {
      std::vector<double> v(5);
      for (std::size_t i = 0; i < 5; ++i) v[i] = 0.1 + 0.15 * ((i + k) % 5);
      test_.push_back(testing::row(v));
    }
    methods_.push_back(baseline_bench_method("occlusion", task_.strategy, {}));
    methods_.push_back(baseline_bench_method("saliency", task_.strategy, {}));
    methods_.push_back({"reversed", [](const Instance& x, const TargetedModel&) {
                          std::vector<double> s(x.elements());
                          for (std::size_t i = 0; i < s.size(); ++i)
                            s[i] = 1.0 - x.at(i, 0);
                          return s;
                        }});
    cfg_.latency_samples = 3;
    cfg_.warmup = 1;
  }
  testing::AdditiveTask task_;
  std::vector<Instance> test_;
  std::vector<BenchMethod> methods_;
  BenchmarkConfig cfg_;
};

TEST_F(Benchmark, ShapesRanksAndCurves) {
  std::vector<CurveRecord> curves;
  const auto r = run_benchmark(test_, task_.model, methods_, task_.strategy,
                               cfg_, &curves);
  ASSERT_EQ(r.methods.size(), 3u);
  EXPECT_EQ(r.samples, test_.size());
  for (std::size_t q = 0; q < r.methods.size(); ++q) {
    double sum = 0.0;
    for (Metric m : kAllMetrics) {
      EXPECT_EQ(at(r.ranks[q], m), count_rank(r.scores, q, m));
      EXPECT_GE(at(r.ranks[q], m), 1.0);
      EXPECT_LE(at(r.ranks[q], m), 3.0);
      sum += at(r.ranks[q], m);
    }
    EXPECT_DOUBLE_EQ(r.average_rank[q], sum / kNumMetrics);
    EXPECT_GE(r.latency_ms[q], 0.0);
  }
  EXPECT_EQ(curves.size(), 3u * test_.size() * 4u);
  for (const auto& c : curves) EXPECT_EQ(c.values.size(), 5u);
}

TEST_F(Benchmark, JsonRoundTripAndRederivedRanks) {
  const auto r =
      run_benchmark(test_, task_.model, methods_, task_.strategy, cfg_);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("schema_version"), kBenchmarkSchemaVersion);
  EXPECT_EQ(BenchmarkResult::from_json(j), r);

  // Re-derive every rank from the emitted score matrix alone.
  std::vector<MetricScores> parsed;
  for (const auto& row : j.at("methods")) {
    MetricScores s{};
    for (Metric m : kAllMetrics) {
      at(s, m) = row.at("scores").at(std::string(metric_name(m))).get<double>();
    }
    parsed.push_back(s);
  }
  for (std::size_t q = 0; q < parsed.size(); ++q) {
    for (Metric m : kAllMetrics) {
      EXPECT_EQ(count_rank(parsed, q, m), at(r.ranks[q], m));
    }
  }
}

TEST_F(Benchmark, FailingMethodExcluded) {
  methods_.push_back({"broken", [](const Instance&, const TargetedModel&)
                                    -> std::vector<double> {
                        throw std::runtime_error("boom");
                      }});
  const auto r =
      run_benchmark(test_, task_.model, methods_, task_.strategy, cfg_);
  EXPECT_EQ(r.methods.size(), 3u);
  ASSERT_EQ(r.excluded.size(), 1u);
  EXPECT_NE(r.excluded[0].find("broken"), std::string::npos);
  EXPECT_NE(r.excluded[0].find("boom"), std::string::npos);
}

TEST_F(Benchmark, MarkdownAndFiles) {
  std::vector<CurveRecord> curves;
  const auto r = run_benchmark(test_, task_.model, methods_, task_.strategy,
                               cfg_, &curves);
  const std::string md = markdown_rank_table(r);
  std::istringstream lines(md);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 2u + r.methods.size());
  for (const auto& row : rows) {
    EXPECT_EQ(std::count(row.begin(), row.end(), '|'), 13) << row;
  }
  EXPECT_NE(rows[0].find("Avg. rank"), std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "faithkit_bench_test";
  std::filesystem::remove_all(dir);
  emit_report(r, curves, dir);
  for (const char* f : {"benchmark.json", "benchmark_latency.json",
                        "benchmark.csv", "benchmark.md",
                        "benchmark_curves.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream curve_file(dir / "benchmark_curves.csv");
  std::size_t count = 0;
  while (std::getline(curve_file, line)) ++count;
  EXPECT_EQ(count, 1u + curves.size() * 5u);
  std::filesystem::remove_all(dir);

  EXPECT_THROW(emit_report(r, curves, "/proc/faithkit_no_such_dir"),
               std::runtime_error);
}

TEST_F(Benchmark, TimingFreeJsonIsReproducible) {
  const auto a = run_benchmark(test_, task_.model, methods_, task_.strategy,
                               cfg_).to_json(false);
  const auto b = run_benchmark(test_, task_.model, methods_, task_.strategy,
                               cfg_).to_json(false);
  EXPECT_EQ(a.dump(), b.dump());
}

}  // namespace
}  // namespace faithkit
