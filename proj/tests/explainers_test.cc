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

#include "faithkit/explainers.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "test_support.h"

namespace faithkit {
namespace {

using testing::row;

std::shared_ptr<MlpModel> random_mlp(std::size_t n, std::size_t d,
                                     std::uint64_t seed) {
  return std::make_shared<MlpModel>(
      MlpModel::random(n, d, {10}, 3, Activation::kTanh, seed));
}

void expect_valid(const SaliencyExplanation& e, std::size_t n) {
  ASSERT_EQ(e.scores.size(), n) << e.method;
  for (double v : e.scores) {
    EXPECT_TRUE(std::isfinite(v)) << e.method;
    EXPECT_GE(v, 0.0) << e.method;
    EXPECT_LE(v, 1.0) << e.method;
  }
}

TEST(Occlusion, ConstantModelIsHalf) {
  TargetedModel tm(testing::constant({0.5, 0.5}, 4), 0);
  const auto e = occlusion(row({1, 2, 3, 4}), tm, testing::zero_baseline(4));
  EXPECT_EQ(e.scores, std::vector<double>(4, 0.5));
}

TEST(Occlusion, SingleElement) {
  TargetedModel tm(testing::additive(0.5, {0.2}), 1);
  EXPECT_EQ(occlusion(row({1}), tm, testing::zero_baseline(1)).scores,
            std::vector<double>{0.5});
}

TEST(Occlusion, AdditiveOrdering) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = testing::additive_task(6, seed);
    TargetedModel tm(t.model, 1);
    EXPECT_EQ(argsort_desc(occlusion(t.x, tm, t.strategy).scores),
              argsort_desc(t.w));
  }
}

TEST(FeatureAblation, SingletonsEqualOcclusion) {
  const auto t = testing::additive_task(5, 3);
  TargetedModel tm(t.model, 1);
  EXPECT_EQ(feature_ablation(t.x, tm, t.strategy, {{0}, {1}, {2}, {3}, {4}})
                .scores,
            occlusion(t.x, tm, t.strategy).scores);
}

TEST(FeatureAblation, OneGroupIsUniform) {
  const auto t = testing::additive_task(4, 3);
  TargetedModel tm(t.model, 1);
  const auto e = feature_ablation(t.x, tm, t.strategy, {{0, 1, 2, 3}});
  for (double v : e.scores) EXPECT_EQ(v, e.scores[0]);
}

TEST(FeatureAblation, TwoGroupsOrderedBySum) {
  TargetedModel tm(testing::additive(0.5, {0.05, 0.1, 0.02, 0.2}), 1);
  const Instance x = row({1, 1, 1, 1});
  const auto e =
      feature_ablation(x, tm, testing::zero_baseline(4), {{0, 1}, {2, 3}});
  // Group {2,3} removes 0.22, group {0,1} removes 0.15.
  EXPECT_EQ(e.scores[2], 1.0);
  EXPECT_EQ(e.scores[3], 1.0);
  EXPECT_EQ(e.scores[0], 0.0);
  EXPECT_NEAR(e.raw[0], 0.15, 1e-12);
  EXPECT_NEAR(e.raw[2], 0.22, 1e-12);
}

TEST(FeatureAblation, RejectsNonPartition) {
  const auto t = testing::additive_task(3, 0);
  TargetedModel tm(t.model, 1);
  EXPECT_THROW(feature_ablation(t.x, tm, t.strategy, {{0, 1}, {1, 2}}),
               std::invalid_argument);
  EXPECT_THROW(feature_ablation(t.x, tm, t.strategy, {{0, 1}}),
               std::invalid_argument);
}

TEST(SaliencyGrad, ConstantModelIsHalf) {
  TargetedModel tm(testing::constant({0.1, 0.9}, 3), 1);
  EXPECT_EQ(saliency_grad(row({1, 2, 3}), tm).scores,
            std::vector<double>(3, 0.5));
}

TEST(SaliencyGrad, LinearSoftmaxOrdering) {
  const std::vector<double> w0{0.3, -1.2, 0.5, 0.0}, w1{-0.4, 0.8, 0.6, 1.5};
  auto m = std::make_shared<LinearSoftmaxModel>(
      4, 1, std::vector<std::vector<double>>{w0, w1},
      std::vector<double>{0.0, 0.0});
  std::vector<double> diff(4);
  for (std::size_t i = 0; i < 4; ++i) diff[i] = std::abs(w1[i] - w0[i]);
  TargetedModel tm(m, 1);
  EXPECT_EQ(argsort_desc(saliency_grad(row({0.1, 0.2, 0.3, 0.4}), tm).scores),
            argsort_desc(diff));
}

TEST(SaliencyGrad, FiniteDifferencePathAgrees) {
  std::mt19937_64 rng(1);
  auto mlp = random_mlp(5, 1, 4);
  const Instance x = row(testing::uniform_vector(5, rng, -1, 1));
  TargetedModel tm(mlp, 0);
  const auto analytic = saliency_grad(x, tm).scores;
  std::vector<double> fd(5);
  const Instance g = finite_difference_gradient(tm, x);
  for (std::size_t i = 0; i < 5; ++i) fd[i] = std::abs(g.at(i, 0));
  EXPECT_EQ(argsort_desc(analytic), argsort_desc(fd));
}

TEST(IntegratedGradients, InputAtBaseline) {
  auto mlp = random_mlp(3, 1, 1);
  TargetedModel tm(mlp, 0);
  const Instance x = row({0.2, 0.4, 0.6});
  EXPECT_EQ(integrated_gradients(x, tm, x, 16).scores,
            std::vector<double>(3, 0.5));
}

TEST(IntegratedGradients, Completeness) {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto mlp = random_mlp(4, 2, seed);
    const Instance base(4, 2, 0.0);
    for (int k = 0; k < 10; ++k) {
      const Instance x(4, 2, testing::uniform_vector(8, rng, -1, 1));
      TargetedModel tm(mlp, seed % 3);
      const auto e = integrated_gradients(x, tm, base, 256);
      double sum = 0.0;
      for (double v : e.raw) sum += v;
      EXPECT_LT(std::abs(sum - (tm(x) - tm(base))), 1e-3);
    }
  }
}

TEST(IntegratedGradients, LinearModelClosedForm) {
  const std::vector<double> c{0.1, 0.05, 0.2};
  TargetedModel tm(testing::additive(0.3, c), 1);
  const Instance x = row({0.7, 0.4, 0.5}), base = row({0.1, 0.2, 0.3});
  for (std::size_t steps : {1u, 3u, 64u}) {
    const auto e = integrated_gradients(x, tm, base, steps);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(e.raw[i], c[i] * (x.at(i, 0) - base.at(i, 0)), 1e-14);
    }
  }
}

TEST(Lime, DeterministicWithSeed) {
  auto mlp = random_mlp(5, 1, 2);
  TargetedModel tm(mlp, 1);
  const Instance x = row({0.1, -0.4, 0.3, 0.9, -0.2});
  ExplainerConfig cfg;
  cfg.seed = 4;
  EXPECT_EQ(lime(x, tm, testing::zero_baseline(5), cfg).scores,
            lime(x, tm, testing::zero_baseline(5), cfg).scores);
}

TEST(Lime, AdditiveOrderingAcrossSeeds) {
  const auto t = testing::additive_task(6, 11);
  TargetedModel tm(t.model, 1);
  const auto expected = argsort_desc(t.w);
  int matches = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ExplainerConfig cfg;
    cfg.lime_masks = 512;
    cfg.seed = seed;
    matches += argsort_desc(lime(t.x, tm, t.strategy, cfg).scores) == expected;
  }
  EXPECT_GE(matches, 95);
}

TEST(Lime, DegenerateMasksHandled) {
  const auto t = testing::additive_task(4, 1);
  TargetedModel tm(t.model, 1);
  const std::vector<std::vector<int>> masks(10, {1, 0, 1, 0});
  try {
    expect_valid(lime_from_masks(t.x, tm, t.strategy, masks), 4);
  } catch (const IllConditionedError& e) {
    EXPECT_GT(e.condition_estimate(), 0.0);
  }
  ExplainerConfig small;
  small.lime_masks = 3;
  EXPECT_THROW(lime(t.x, tm, t.strategy, small), std::invalid_argument);
}

TEST(KernelShap, MatchesExactShapleyOnMlps) {
  std::mt19937_64 rng(2);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t n = 3 + seed;
    auto mlp = random_mlp(n, 1, seed);
    const Instance x = row(testing::uniform_vector(n, rng, -1, 1));
    const auto strat = testing::zero_baseline(n);
    const TargetedModel tm = target_prediction(mlp, x);
    const auto ks = kernel_shap(x, tm, strat);
    const auto exact = exact_shapley(x, tm, strat);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ks.raw[i], exact[i], 1e-6);
  }
}

TEST(KernelShap, SymmetryAndEfficiency) {
  TargetedModel tm(testing::additive(0.2, {0.1, 0.1, 0.3}), 1);
  const Instance x = row({0.5, 0.5, 0.9});
  const auto strat = testing::zero_baseline(3);
  const auto e = kernel_shap(x, tm, strat);
  EXPECT_NEAR(e.raw[0], e.raw[1], 1e-12);
  double sum = 0.0;
  for (double v : e.raw) sum += v;
  EXPECT_NEAR(sum, tm(x) - tm(remove(x, IndexSet::all(3), strat)), 1e-6);
}

TEST(KernelShap, SampledModeIsCloseToExact) {
  std::mt19937_64 rng(8);
  auto mlp = random_mlp(8, 1, 3);
  const Instance x = row(testing::uniform_vector(8, rng, -1, 1));
  const auto strat = testing::zero_baseline(8);
  const TargetedModel tm = target_prediction(mlp, x);
  ExplainerConfig cfg;
  cfg.shap_exact_limit = 4;
  cfg.shap_samples = 4096;
  const auto sampled = kernel_shap(x, tm, strat, cfg);
  const auto exact = exact_shapley(x, tm, strat);
  EXPECT_GT(pearson(sampled.raw, exact), 0.95);
}

TEST(ExactShapley, Axioms) {
  const auto t = testing::additive_task(6, 5);
  TargetedModel tm(t.model, 1);
  const auto phi = exact_shapley(t.x, tm, t.strategy);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(phi[i], t.w[i], 1e-12);

  TargetedModel dummy(testing::additive(0.4, {0.1, 0.0, 0.2}), 1);
  const Instance x = row({1, 1, 1});
  const auto strat = testing::zero_baseline(3);
  const auto phi2 = exact_shapley(x, dummy, strat);
  EXPECT_NEAR(phi2[1], 0.0, 1e-12);
  EXPECT_NEAR(phi2[0] + phi2[1] + phi2[2],
              dummy(x) - dummy(remove(x, IndexSet::all(3), strat)), 1e-12);
  EXPECT_THROW(exact_shapley(Instance(13, 1), TargetedModel(
                                                  testing::constant({1.0}, 13), 0),
                             testing::zero_baseline(13)),
               std::invalid_argument);
}

TEST(AllMethods, ValidAndDeterministic) {
  std::mt19937_64 rng(6);
  auto mlp = random_mlp(5, 2, 7);
  const auto strat = RemovalStrategy::baseline_replace(Instance(5, 2, 0.0));
  ExplainerConfig cfg;
  cfg.seed = 3;
  for (int k = 0; k < 5; ++k) {
    const Instance x(5, 2, testing::uniform_vector(10, rng, -1, 1));
    const auto tm = target_prediction(mlp, x);
    for (const auto& tag : baseline_method_tags()) {
      const auto a = explain(tag, x, tm, strat, cfg);
      expect_valid(a, 5);
      EXPECT_EQ(a.scores, explain(tag, x, tm, strat, cfg).scores) << tag;
      EXPECT_EQ(a.method, tag);
    }
  }
  EXPECT_THROW(explain("nope", Instance(5, 2), target_prediction(mlp, Instance(5, 2)),
                       strat, cfg),
               std::invalid_argument);
}

TEST(AllMethods, AdditiveArgsortAgreement) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = testing::additive_task(5, 40 + seed);
    TargetedModel tm(t.model, 1);
    const auto expected = argsort_desc(t.w);
    EXPECT_EQ(argsort_desc(exact_shapley(t.x, tm, t.strategy)), expected);
    EXPECT_EQ(argsort_desc(occlusion(t.x, tm, t.strategy).scores), expected);
    EXPECT_EQ(argsort_desc(
                  integrated_gradients(t.x, tm, t.strategy.baseline, 32).scores),
              expected);
  }
}

// Saliency is |c_i|, so it matches c∘x only when x is constant.
TEST(AllMethods, SaliencyOnConstantInput) {
  const std::vector<double> c{0.05, 0.12, 0.03, 0.08};
  TargetedModel tm(testing::additive(0.3, c), 1);
  const Instance x = row({0.8, 0.8, 0.8, 0.8});
  std::vector<double> w(4);
  for (std::size_t i = 0; i < 4; ++i) w[i] = c[i] * 0.8;
  EXPECT_EQ(argsort_desc(saliency_grad(x, tm).scores), argsort_desc(w));
}

TEST(Explanation, JsonRoundTrip) {
  const auto t = testing::additive_task(4, 2);
  TargetedModel tm(t.model, 1);
  const auto e = occlusion(t.x, tm, t.strategy);
  const auto back = SaliencyExplanation::from_json(e.to_json());
  EXPECT_EQ(back.scores, e.scores);
  EXPECT_EQ(back.raw, e.raw);
  EXPECT_EQ(back.method, e.method);
}

}  // namespace
}  // namespace faithkit
