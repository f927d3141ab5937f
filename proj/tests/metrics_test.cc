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
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "faithkit/explainers.h"
#include "test_support.h"

namespace faithkit {
namespace {

using testing::row;

MetricConfig pearson_everywhere() {
  MetricConfig cfg;
  cfg.mc_tau = CorrelationKind::kPearson;
  return cfg;
}

std::vector<Permutation> all_permutations(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Permutation> out;
  do out.emplace_back(order);
  while (std::next_permutation(order.begin(), order.end()));
  return out;
}

TEST(Delta, Examples) {
  EXPECT_EQ(delta(0.9, 0.9, DeltaKind::kAbsDiff), 0.0);
  EXPECT_NEAR(delta(0.9, 0.5, DeltaKind::kAbsDiff), 0.4, 1e-15);
  EXPECT_EQ(delta(1.0, 0.0, DeltaKind::kHalfSquared), 0.5);
  EXPECT_THROW(delta(1.2, 0.0, DeltaKind::kAbsDiff), std::invalid_argument);
}

TEST(DeltaMinus, Examples) {
  const auto ratio = PreservationKind::kConfidenceRatio;
  EXPECT_EQ(delta_minus(0.7, 0.7, ratio), 1.0);
  EXPECT_NEAR(delta_minus(0.9, 0.45, ratio), 0.5, 1e-15);
  EXPECT_EQ(delta_minus(0.9, 0.3, PreservationKind::kRawConfidence), 0.3);
  EXPECT_EQ(delta_minus(0.5, 0.9, ratio), 1.0);
  EXPECT_EQ(delta_minus(0.0, 0.0, ratio), 1.0);
}

TEST(Directions, DelAndPosLowerIsBetter) {
  for (Metric m : kAllMetrics) {
    const bool lower = m == Metric::kDEL || m == Metric::kPOS;
    EXPECT_EQ(higher_is_better(m), !lower) << metric_name(m);
    EXPECT_EQ(metric_from_name(metric_name(m)), m);
  }
}

TEST(Fc, TwoElementAdditiveExample) {
  TargetedModel tm(testing::additive(0.5, {0.1, 0.3}), 1);
  const std::vector<double> s{0.25, 0.75};
  EXPECT_NEAR(fc(s, row({1, 1}), tm, testing::zero_baseline(2), {}), 1.0,
              1e-12);
}

TEST(Fc, ConstantModelIsZero) {
  TargetedModel tm(testing::constant({0.4, 0.6}, 3), 1);
  const std::vector<double> s{0.1, 0.5, 0.9};
  EXPECT_EQ(fc(s, row({1, 2, 3}), tm, testing::zero_baseline(3), {}), 0.0);
}

TEST(Fc, SampledCloseToExactOnMlp) {
  std::mt19937_64 rng(21);
  auto mlp = std::make_shared<MlpModel>(
      MlpModel::random(8, 1, {12}, 2, Activation::kTanh, 3));
  const Instance x = row(testing::uniform_vector(8, rng, -1, 1));
  const TargetedModel tm = target_prediction(mlp, x);
  const auto strat = testing::zero_baseline(8);
  const auto s = occlusion(x, tm, strat).scores;
  MetricConfig exact;
  const double reference = fc(s, x, tm, strat, exact);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MetricConfig sampled;
    sampled.fc_exact_limit = 0;
    sampled.fc_budget = 256;
    sampled.seed = seed;
    EXPECT_LT(std::abs(fc(s, x, tm, strat, sampled) - reference), 0.05)
        << "seed " << seed;
  }
}

TEST(Inf, DistinctFullBudgetEqualsExactFc) {
  std::mt19937_64 rng(5);
  auto mlp = std::make_shared<MlpModel>(
      MlpModel::random(6, 1, {8}, 2, Activation::kTanh, 9));
  const Instance x = row(testing::uniform_vector(6, rng, -1, 1));
  const TargetedModel tm = target_prediction(mlp, x);
  const auto strat = testing::zero_baseline(6);
  const auto s = testing::uniform_vector(6, rng);
  MetricConfig cfg;
  cfg.inf_distinct = true;
  PerturbationOracle oracle(x, tm, strat);
  EXPECT_NEAR(inf(s, oracle, cfg, 64, 17), fc(s, oracle, cfg), 1e-9);
}

TEST(Inf, AdditiveProportional) {
  const auto t = testing::additive_task(6, 2);
  TargetedModel tm(t.model, 1);
  MetricConfig cfg;
  cfg.inf_distinct = true;
  PerturbationOracle oracle(t.x, tm, t.strategy);
  EXPECT_NEAR(inf(t.w, oracle, cfg, 64, 0), 1.0, 1e-9);
}

TEST(Inf, ConstantAndDeterminism) {
  TargetedModel flat(testing::constant({0.5, 0.5}, 4), 0);
  const std::vector<double> s{0.1, 0.4, 0.2, 0.9};
  PerturbationOracle o1(row({1, 2, 3, 4}), flat, testing::zero_baseline(4));
  EXPECT_EQ(inf(s, o1, {}, 32, 3), 0.0);

  const auto t = testing::additive_task(4, 7);
  TargetedModel tm(t.model, 1);
  PerturbationOracle o2(t.x, tm, t.strategy);
  EXPECT_EQ(inf(s, o2, {}, 32, 3), inf(s, o2, {}, 32, 3));
}

TEST(Mc, SingletonsMatchOrder) {
  const auto t = testing::additive_task(6, 3);
  TargetedModel tm(t.model, 1);
  PerturbationOracle oracle(t.x, tm, t.strategy);
  EXPECT_NEAR(mc(t.w, oracle, {}), 1.0, 1e-12);
  std::vector<double> anti(t.w.size());
  for (std::size_t i = 0; i < anti.size(); ++i) anti[i] = 1.0 - t.w[i];
  EXPECT_NEAR(mc(anti, oracle, {}), -1.0, 1e-12);
}

TEST(Mc, TwoEqualElementsBounded) {
  TargetedModel tm(testing::additive(0.5, {0.2, 0.2}), 1);
  PerturbationOracle oracle(row({1, 1}), tm, testing::zero_baseline(2));
  const double v = mc(std::vector<double>{0.3, 0.7}, oracle, {});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LE(std::abs(v), 1.0);
}

TEST(Fe, EmptySetsGiveZero) {
  const auto t = testing::additive_task(4, 1);
  TargetedModel tm(t.model, 1);
  std::vector<FePair> pairs(5, FePair{t.x, IndexSet{}});
  SaliencyMethod method = [&](const Instance&) { return t.w; };
  EXPECT_EQ(fe(method, pairs, tm, t.strategy, {}), 0.0);
}

TEST(Fe, AdditiveWithExactAttributions) {
  std::mt19937_64 rng(12);
  const std::vector<double> c{0.05, 0.1, 0.02, 0.08, 0.03};
  TargetedModel tm(testing::additive(0.5, c), 1);
  const auto strat = testing::zero_baseline(5);
  std::vector<FePair> pairs;
  for (int k = 0; k < 50; ++k) {
    IndexSet I;
    while (I.empty()) I = IndexSet::from_mask(rng() % 32, 5);
    pairs.push_back({row(testing::uniform_vector(5, rng)), I});
  }
  SaliencyMethod closed_form = [&](const Instance& x) {
    std::vector<double> s(5);
    for (std::size_t i = 0; i < 5; ++i) s[i] = c[i] * x.at(i, 0);
    return s;
  };
  EXPECT_NEAR(fe(closed_form, pairs, tm, strat, {}), 1.0, 1e-9);
  SaliencyMethod shapley = [&](const Instance& x) {
    return exact_shapley(x, tm, strat);
  };
  EXPECT_GE(fe(shapley, pairs, tm, strat, {}), 0.99);
}

TEST(Curve, DeletionTwoElementExample) {
  TargetedModel tm(testing::additive(0.5, {0.1, 0.3}), 1);
  PerturbationOracle oracle(row({1, 1}), tm, testing::zero_baseline(2));
  const double del =
      curve_metric(Permutation({1, 0}), oracle, {}, CurveMode::kDEL);
  EXPECT_NEAR(del, (0.6 / 0.9 + 0.5 / 0.9) / 2.0, 1e-12);
}

TEST(Curve, FullInsertionRestoresPrediction) {
  const auto t = testing::additive_task(5, 4);
  TargetedModel tm(t.model, 1);
  PerturbationOracle oracle(t.x, tm, t.strategy);
  const auto values =
      curve_values(Permutation({3, 1, 4, 0, 2}), oracle, {}, CurveMode::kINS);
  ASSERT_EQ(values.size(), 5u);
  EXPECT_EQ(values.back(), 1.0);
}

TEST(Curve, NoFlipMeansFullLength) {
  TargetedModel tm(testing::constant({0.2, 0.8}, 4), 1);
  PerturbationOracle oracle(row({1, 2, 3, 4}), tm, testing::zero_baseline(4));
  for (CurveMode mode : {CurveMode::kNEG, CurveMode::kPOS}) {
    EXPECT_EQ(curve_values(Permutation::identity(4), oracle, {}, mode).size(),
              4u);
  }
}

TEST(Curve, PositiveStopsAtFirstFlip) {
  // p(1) = 0.75 drops to 0.49 after the first removal: t = 1.
  TargetedModel tm(testing::additive(0.0, {0.26, 0.25, 0.24}), 1);
  PerturbationOracle oracle(row({1, 1, 1}), tm, testing::zero_baseline(3));
  const auto values =
      curve_values(Permutation({0, 1, 2}), oracle, {}, CurveMode::kPOS);
  ASSERT_EQ(values.size(), 1u);
  EXPECT_NEAR(values[0], 0.49 / 0.75, 1e-12);
}

// Argsort of the removal weights is not POS-optimal once the flip step
// depends on the order: removing the largest weight first flips at once and
// the average covers only that low step.
TEST(Curve, ArgsortNotAlwaysPosOptimal) {
  TargetedModel tm(testing::additive(0.0, {0.26, 0.25, 0.24}), 1);
  PerturbationOracle oracle(row({1, 1, 1}), tm, testing::zero_baseline(3));
  const double by_weight =
      curve_metric(Permutation({0, 1, 2}), oracle, {}, CurveMode::kPOS);
  const double alternative =
      curve_metric(Permutation({2, 1, 0}), oracle, {}, CurveMode::kPOS);
  EXPECT_NEAR(by_weight, 0.49 / 0.75, 1e-12);
  EXPECT_NEAR(alternative, (0.51 / 0.75 + 0.26 / 0.75) / 2.0, 1e-12);
  EXPECT_LT(alternative, by_weight);
}

TEST(Rp, ConstantModelIsZero) {
  TargetedModel tm(testing::constant({0.5, 0.5}, 3), 0);
  const std::vector<Instance> xs{row({1, 2, 3}), row({3, 2, 1})};
  PermutationMethod method = [](const Instance&) {
    return Permutation::identity(3);
  };
  EXPECT_EQ(rp(method, xs, tm, testing::zero_baseline(3), {}), 0.0);
}

TEST(Rp, SingleElementIsHalvedEffect) {
  TargetedModel tm(testing::additive(0.5, {0.3}), 1);
  const std::vector<Instance> xs{row({1})};
  PermutationMethod method = [](const Instance&) {
    return Permutation::identity(1);
  };
  EXPECT_NEAR(rp(method, xs, tm, testing::zero_baseline(1), {}), 0.15, 1e-12);
}

TEST(Irof, FullyPreservedIsZero) {
  TargetedModel tm(testing::constant({0.3, 0.7}, 4), 1);
  const std::vector<Instance> xs{row({1, 2, 3, 4})};
  PermutationMethod method = [](const Instance&) {
    return Permutation({2, 0, 3, 1});
  };
  EXPECT_EQ(irof(method, xs, tm, testing::zero_baseline(4), {}), 0.0);
}

TEST(Irof, BoundedOnRandomExplanations) {
  std::mt19937_64 rng(33);
  auto mlp = std::make_shared<MlpModel>(
      MlpModel::random(6, 1, {8}, 3, Activation::kTanh, 1));
  const auto strat = testing::zero_baseline(6);
  for (int k = 0; k < 100; ++k) {
    const Instance x = row(testing::uniform_vector(6, rng, -2, 2));
    const TargetedModel tm = target_prediction(mlp, x);
    PerturbationOracle oracle(x, tm, strat);
    const double v =
        irof_sample(argsort_desc(testing::uniform_vector(6, rng)), oracle, {});
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

// For additive removal effects argsort(w) is optimal for every
// permutation metric whose step count does not depend on the order.
TEST(PermutationOptimality, BruteForceOnAdditiveTasks) {
  const auto perms = all_permutations(5);
  ASSERT_EQ(perms.size(), 120u);
  const double eps = 1e-12;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = testing::additive_task(5, seed);
    TargetedModel tm(t.model, 1);
    PerturbationOracle oracle(t.x, tm, t.strategy);
    const MetricConfig cfg;
    const Permutation best = argsort_desc(t.w);
    const double del = curve_metric(best, oracle, cfg, CurveMode::kDEL);
    const double ins = curve_metric(best, oracle, cfg, CurveMode::kINS);
    const double neg = curve_metric(best, oracle, cfg, CurveMode::kNEG);
    const double pos = curve_metric(best, oracle, cfg, CurveMode::kPOS);
    const double r = rp_sample(best, oracle, cfg);
    const double ir = irof_sample(best, oracle, cfg);
    for (const auto& p : perms) {
      EXPECT_LE(del, curve_metric(p, oracle, cfg, CurveMode::kDEL) + eps);
      EXPECT_GE(ins, curve_metric(p, oracle, cfg, CurveMode::kINS) - eps);
      EXPECT_GE(neg, curve_metric(p, oracle, cfg, CurveMode::kNEG) - eps);
      EXPECT_LE(pos, curve_metric(p, oracle, cfg, CurveMode::kPOS) + eps);
      EXPECT_GE(r, rp_sample(p, oracle, cfg) - eps);
      EXPECT_GE(ir, irof_sample(p, oracle, cfg) - eps);
    }
  }
}

TEST(ProportionalSaliency, AllCorrelationMetricsAreOne) {
  std::mt19937_64 rng(77);
  const MetricConfig cfg = pearson_everywhere();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed % 7;
    const auto t = testing::additive_task(n, 100 + seed);
    TargetedModel tm(t.model, 1);
    PerturbationOracle oracle(t.x, tm, t.strategy);
    std::vector<double> s = t.w;
    for (double& v : s) v *= 1.7;
    EXPECT_NEAR(fc(s, oracle, cfg), 1.0, 1e-9);
    EXPECT_NEAR(mc(s, oracle, cfg), 1.0, 1e-9);
    EXPECT_NEAR(inf(s, oracle, cfg, 64, seed), 1.0, 1e-9);
    std::vector<FePair> pairs;
    for (int k = 0; k < 16; ++k) {
      IndexSet I;
      while (I.empty()) I = IndexSet::from_mask(rng() % (1u << n), n);
      pairs.push_back({t.x, I});
    }
    SaliencyMethod method = [&](const Instance&) { return s; };
    EXPECT_NEAR(fe(method, pairs, tm, t.strategy, cfg), 1.0, 1e-9);
  }
}

TEST(MonotoneTransform, RankBasedScoresUnchanged) {
  std::mt19937_64 rng(3);
  auto mlp = std::make_shared<MlpModel>(
      MlpModel::random(6, 1, {8}, 2, Activation::kTanh, 2));
  MetricConfig cfg;
  cfg.effects.tau = CorrelationKind::kSpearman;
  for (int k = 0; k < 10; ++k) {
    const Instance x = row(testing::uniform_vector(6, rng, -1, 1));
    const TargetedModel tm = target_prediction(mlp, x);
    const auto s = testing::uniform_vector(6, rng);
    std::vector<double> g(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) g[i] = std::exp(3.0 * s[i]) - 1.0;
    const auto a = evaluate_all(s, x, tm, testing::zero_baseline(6), cfg, k);
    const auto b = evaluate_all(g, x, tm, testing::zero_baseline(6), cfg, k);
    for (Metric m : {Metric::kDEL, Metric::kINS, Metric::kNEG, Metric::kPOS,
                     Metric::kRP, Metric::kIROF, Metric::kMC}) {
      EXPECT_EQ(a.score(m), b.score(m)) << metric_name(m);
    }
    // FC sums several entries, so only a rank-preserving transform of the sums
    // would keep it fixed; it stays a valid correlation either way.
    EXPECT_LE(std::abs(b.score(Metric::kFC)), 1.0);
  }
}

TEST(EvaluateAll, ReportShapeAndDeterminism) {
  const auto t = testing::additive_task(5, 8);
  TargetedModel tm(t.model, 1);
  const auto a = evaluate_all(t.w, t.x, tm, t.strategy, {});
  const auto b = evaluate_all(t.w, t.x, tm, t.strategy, {});
  EXPECT_EQ(a.scores, b.scores);
  const auto j = a.to_json();
  EXPECT_EQ(j.at("scores").size(), kNumMetrics);
  EXPECT_EQ(j.at("directions").at("DEL"), "lower");
  EXPECT_EQ(j.at("directions").at("INS"), "higher");
  EXPECT_EQ(j.at("schema_version"), kMetricReportSchemaVersion);
  EXPECT_EQ(MetricReport::from_json(j).scores, a.scores);
}

TEST(EvaluateAll, ProportionalBeatsRandomCompetitorsOnDeletion) {
  std::mt19937_64 rng(19);
  const auto t = testing::additive_task(6, 9);
  TargetedModel tm(t.model, 1);
  const auto best = evaluate_all(t.w, t.x, tm, t.strategy, {});
  EXPECT_NEAR(best.score(Metric::kFC), 1.0, 1e-9);
  EXPECT_NEAR(best.score(Metric::kMC), 1.0, 1e-9);
  for (int k = 0; k < 20; ++k) {
    const auto r = evaluate_all(testing::uniform_vector(6, rng), t.x, tm,
                                t.strategy, {});
    EXPECT_LE(best.score(Metric::kDEL), r.score(Metric::kDEL) + 1e-12);
  }
}

TEST(EvaluateAll, RangeInvariants) {
  std::mt19937_64 rng(4);
  auto mlp = std::make_shared<MlpModel>(
      MlpModel::random(5, 2, {8}, 3, Activation::kTanh, 6));
  const auto strat = RemovalStrategy::baseline_replace(Instance(5, 2, 0.0));
  for (int k = 0; k < 10; ++k) {
    const Instance x(5, 2, testing::uniform_vector(10, rng, -2, 2));
    const auto tm = target_prediction(mlp, x);
    const auto r =
        evaluate_all(testing::uniform_vector(5, rng), x, tm, strat, {}, k);
    for (Metric m : kAllMetrics) {
      const double v = r.score(m);
      const bool corr = m == Metric::kFC || m == Metric::kFE ||
                        m == Metric::kINF || m == Metric::kMC;
      EXPECT_GE(v, corr ? -1.0 : 0.0) << metric_name(m);
      EXPECT_LE(v, 1.0) << metric_name(m);
    }
  }
}

}  // namespace
}  // namespace faithkit
