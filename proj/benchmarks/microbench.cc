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

// Microbenchmarks for the hot paths: model forward, the baseline explainers,
// the ten-metric evaluation and the explainer network forward pass.
#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "faithkit/explainer_net.h"
#include "faithkit/explainers.h"
#include "faithkit/metrics.h"
#include "faithkit/models.h"

namespace {

using namespace faithkit;

struct Setup {
  explicit Setup(std::size_t n)
      : model(std::make_shared<MlpModel>(
            MlpModel::random(n, 1, {16}, 2, Activation::kTanh, 1))),
        strategy(RemovalStrategy::baseline_replace(Instance(n, 1, 0.0))) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (double& e : v) e = u(rng);
    x = Instance::from_row(v);
  }
  ModelPtr model;
  RemovalStrategy strategy;
  Instance x;
};

void BM_MlpForward(benchmark::State& state) {
  Setup s(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(s.model->predict_proba(s.x));
}
BENCHMARK(BM_MlpForward)->Arg(8)->Arg(32);

void BM_Explain(benchmark::State& state, const char* method) {
  Setup s(state.range(0));
  const TargetedModel tm = target_prediction(s.model, s.x);
  ExplainerConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain(method, s.x, tm, s.strategy, cfg));
  }
}
BENCHMARK_CAPTURE(BM_Explain, occlusion, "occlusion")->Arg(8);
BENCHMARK_CAPTURE(BM_Explain, integrated_gradients, "integrated_gradients")->Arg(8);
BENCHMARK_CAPTURE(BM_Explain, lime, "lime")->Arg(8);
BENCHMARK_CAPTURE(BM_Explain, kernel_shap, "kernel_shap")->Arg(8)->Arg(12);

void BM_EvaluateAll(benchmark::State& state) {
  Setup s(state.range(0));
  const TargetedModel tm = target_prediction(s.model, s.x);
  std::vector<double> scores(state.range(0));
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = 1.0 / (1.0 + i);
  const MetricConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_all(scores, s.x, tm, s.strategy, cfg));
  }
}
BENCHMARK(BM_EvaluateAll)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ExplainerForward(benchmark::State& state) {
  Setup s(state.range(0));
  ExplainerArchitecture arch;
  arch.elements = state.range(0);
  arch.gated_mixing = true;
  const ExplainerNet net = ExplainerNet::random(arch, 3);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(s.x));
}
BENCHMARK(BM_ExplainerForward)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
