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

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "faithkit/math.h"

namespace faithkit {

nlohmann::json SaliencyExplanation::to_json() const {
  nlohmann::json j = {{"method_tag", method},
                      {"scores", scores},
                      {"raw", raw},
                      {"normalization", normalization}};
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

SaliencyExplanation SaliencyExplanation::from_json(const nlohmann::json& j) {
  SaliencyExplanation e;
  e.method = j.at("method_tag").get<std::string>();
  e.scores = j.at("scores").get<std::vector<double>>();
  e.raw = j.value("raw", e.scores);
  e.normalization = j.value("normalization", std::string("min_max"));
  e.notes = j.value("notes", std::vector<std::string>{});
  return e;
}

nlohmann::json ExplainerConfig::to_json() const {
  return {{"delta", to_string(delta)},
          {"ig_steps", ig_steps},
          {"lime_masks", lime_masks},
          {"lime_kernel_width", lime_kernel_width},
          {"lime_ridge", lime_ridge},
          {"shap_exact_limit", shap_exact_limit},
          {"shap_samples", shap_samples},
          {"fd_step", fd_step},
          {"ablation_groups", ablation_groups},
          {"seed", seed}};
}

namespace {

SaliencyExplanation finish(std::string method, std::vector<double> raw) {
  SaliencyExplanation e;
  e.scores = min_max_normalize(raw);
  e.raw = std::move(raw);
  e.method = std::move(method);
  return e;
}

}  // namespace

SaliencyExplanation occlusion(const Instance& x, const TargetedModel& tm,
                              const RemovalStrategy& strategy,
                              const ExplainerConfig& cfg) {
  const double fx = tm(x);
  std::vector<double> raw(x.elements());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = delta(fx, tm(remove(x, IndexSet{i}, strategy)), cfg.delta);
  }
  return finish("occlusion", std::move(raw));
}

SaliencyExplanation feature_ablation(
    const Instance& x, const TargetedModel& tm, const RemovalStrategy& strategy,
    const std::vector<std::vector<std::size_t>>& groups,
    const ExplainerConfig& cfg) {
  const std::size_t n = x.elements();
  std::vector<int> owner(n, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw std::invalid_argument("feature_ablation: empty group");
    }
    for (std::size_t i : groups[g]) {
      if (i >= n || owner[i] != -1) {
        throw std::invalid_argument("feature_ablation: groups must partition "
                                    "the elements");
      }
      owner[i] = static_cast<int>(g);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw std::invalid_argument("feature_ablation: groups must cover every "
                                "element");
  }
  const double fx = tm(x);
  std::vector<double> raw(n);
  for (const auto& group : groups) {
    const double effect =
        delta(fx, tm(remove(x, IndexSet(group), strategy)), cfg.delta);
    for (std::size_t i : group) raw[i] = effect;
  }
  return finish("feature_ablation", std::move(raw));
}

SaliencyExplanation saliency_grad(const Instance& x, const TargetedModel& tm,
                                  const ExplainerConfig& cfg) {
  const Instance grad = input_gradient(tm, x, cfg.fd_step);
  std::vector<double> raw(x.elements());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double sq = 0.0;
    for (double g : grad.element(i)) sq += g * g;
    raw[i] = std::sqrt(sq);
  }
  return finish("saliency", std::move(raw));
}

SaliencyExplanation integrated_gradients(const Instance& x,
                                         const TargetedModel& tm,
                                         const Instance& baseline,
                                         std::size_t steps,
                                         const ExplainerConfig& cfg) {
  if (steps < 1) throw std::invalid_argument("integrated_gradients: steps < 1");
  if (!x.same_shape(baseline)) {
    throw std::invalid_argument("integrated_gradients: baseline shape mismatch");
  }
  std::vector<double> mean_grad(x.size(), 0.0);
  Instance point = x;
  for (std::size_t k = 0; k < steps; ++k) {
    const double alpha =
        (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (std::size_t v = 0; v < x.size(); ++v) {
      point.values()[v] =
          baseline.values()[v] + alpha * (x.values()[v] - baseline.values()[v]);
    }
    const Instance g = input_gradient(tm, point, cfg.fd_step);
    for (std::size_t v = 0; v < x.size(); ++v) mean_grad[v] += g.values()[v];
  }
  std::vector<double> raw(x.elements(), 0.0);
  for (std::size_t i = 0; i < x.elements(); ++i) {
    for (std::size_t j = 0; j < x.block_dim(); ++j) {
      const std::size_t v = i * x.block_dim() + j;
      raw[i] += (x.values()[v] - baseline.values()[v]) * mean_grad[v] /
                static_cast<double>(steps);
    }
  }
  return finish("integrated_gradients", std::move(raw));
}

// ---------------------------------------------------------------------------

namespace {

Instance apply_mask(const Instance& x, std::span<const int> mask,
                    const RemovalStrategy& strategy) {
  std::vector<std::size_t> removed;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) removed.push_back(i);
  }
  return remove(x, IndexSet(std::move(removed)), strategy);
}

double reciprocal_condition(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

}  // namespace

SaliencyExplanation lime_from_masks(
    const Instance& x, const TargetedModel& tm, const RemovalStrategy& strategy,
    const std::vector<std::vector<int>>& masks, const ExplainerConfig& cfg) {
  const std::size_t n = x.elements();
  const std::size_t m = masks.size();
  if (m == 0) throw std::invalid_argument("lime: no masks");
  Eigen::MatrixXd design(m, n + 1);
  Eigen::VectorXd target(m), weight(m);
  for (std::size_t r = 0; r < m; ++r) {
    if (masks[r].size() != n) throw std::invalid_argument("lime: mask length");
    std::size_t kept = 0;
    design(r, 0) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      design(r, i + 1) = masks[r][i] ? 1.0 : 0.0;
      kept += masks[r][i] ? 1 : 0;
    }
    const double dist =
        1.0 - std::sqrt(static_cast<double>(kept) / static_cast<double>(n));
    weight(r) = std::exp(-dist * dist /
                         (cfg.lime_kernel_width * cfg.lime_kernel_width));
    target(r) = tm(apply_mask(x, masks[r], strategy));
  }
  const Eigen::MatrixXd gram = design.transpose() * weight.asDiagonal() * design;
  const Eigen::VectorXd rhs = design.transpose() * weight.asDiagonal() * target;

  SaliencyExplanation out;
  double ridge = cfg.lime_ridge;
  Eigen::VectorXd beta;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd a = gram;
    for (std::size_t i = 1; i <= n; ++i) a(i, i) += ridge;
    if (reciprocal_condition(a) > 1e-12) {
      beta = a.ldlt().solve(rhs);
      break;
    }
    if (attempt >= 12) {
      throw IllConditionedError("lime: system stays singular after raising "
                                "the ridge strength",
                                1.0 / std::max(reciprocal_condition(a), 1e-300));
    }
    ridge = std::max(ridge * 10.0, 1e-8);
    out.notes.push_back("singular system; ridge raised to " +
                        std::to_string(ridge));
  }
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = beta(static_cast<long>(i + 1));
  auto e = finish("lime", std::move(raw));
  e.notes = std::move(out.notes);
  return e;
}

SaliencyExplanation lime(const Instance& x, const TargetedModel& tm,
                         const RemovalStrategy& strategy,
                         const ExplainerConfig& cfg) {
  const std::size_t n = x.elements();
  if (cfg.lime_masks < n + 2) {
    throw std::invalid_argument("lime: mask count must be >= n + 2");
  }
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x11e));
  std::vector<std::vector<int>> masks;
  masks.emplace_back(n, 1);
  while (masks.size() < cfg.lime_masks) {
    std::vector<int> mask(n);
    for (auto& b : mask) b = static_cast<int>(rng() >> 63);
    masks.push_back(std::move(mask));
  }
  return lime_from_masks(x, tm, strategy, masks, cfg);
}

// ---------------------------------------------------------------------------

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

double shapley_kernel(std::size_t n, std::size_t size) {
  return static_cast<double>(n - 1) /
         (binomial(n, size) * static_cast<double>(size) *
          static_cast<double>(n - size));
}

}  // namespace

SaliencyExplanation kernel_shap(const Instance& x, const TargetedModel& tm,
                                const RemovalStrategy& strategy,
                                const ExplainerConfig& cfg) {
  const std::size_t n = x.elements();
  if (n < 2) throw std::invalid_argument("kernel_shap: need n >= 2");
  const double v_full = tm(x);
  const double v_empty = tm(remove(x, IndexSet::all(n), strategy));

  std::vector<std::vector<int>> coalitions;
  std::vector<double> weights;
  if (n <= cfg.shap_exact_limit && n < 63) {
    for (std::uint64_t m = 1; m + 1 < (1ULL << n); ++m) {
      std::vector<int> z(n);
      std::size_t size = 0;
      for (std::size_t i = 0; i < n; ++i) {
        z[i] = static_cast<int>(m >> i & 1ULL);
        size += static_cast<std::size_t>(z[i]);
      }
      coalitions.push_back(std::move(z));
      weights.push_back(shapley_kernel(n, size));
    }
  } else {
    std::vector<double> size_mass(n - 1);
    for (std::size_t k = 1; k < n; ++k) {
      size_mass[k - 1] = static_cast<double>(n - 1) /
                         (static_cast<double>(k) * static_cast<double>(n - k));
    }
    std::discrete_distribution<std::size_t> pick_size(size_mass.begin(),
                                                      size_mass.end());
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x54a9));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    while (coalitions.size() < cfg.shap_samples) {
      const std::size_t k = pick_size(rng) + 1;
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<int> z(n, 0);
      for (std::size_t i = 0; i < k; ++i) z[idx[i]] = 1;
      std::vector<int> complement(n);
      for (std::size_t i = 0; i < n; ++i) complement[i] = 1 - z[i];
      coalitions.push_back(std::move(z));
      coalitions.push_back(std::move(complement));
      weights.push_back(1.0);
      weights.push_back(1.0);
    }
  }

  // Eliminate the last attribution through efficiency:
  // phi_last = (v_full - v_empty) - sum_{i<last} phi_i.
  const std::size_t last = n - 1;
  const double total = v_full - v_empty;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(last, last);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(last);
  Eigen::VectorXd row(last);
  for (std::size_t c = 0; c < coalitions.size(); ++c) {
    const auto& z = coalitions[c];
    const double y = tm(apply_mask(x, z, strategy)) - v_empty -
                     static_cast<double>(z[last]) * total;
    for (std::size_t i = 0; i < last; ++i) {
      row(static_cast<long>(i)) = static_cast<double>(z[i] - z[last]);
    }
    a.noalias() += weights[c] * row * row.transpose();
    rhs.noalias() += weights[c] * y * row;
  }
  const double rcond = reciprocal_condition(a);
  if (!(rcond > 1e-12)) {
    throw IllConditionedError(
        "kernel_shap: ill-conditioned system (condition estimate " +
            std::to_string(rcond > 0.0 ? 1.0 / rcond : INFINITY) + ")",
        rcond > 0.0 ? 1.0 / rcond : INFINITY);
  }
  const Eigen::VectorXd phi = a.ldlt().solve(rhs);
  std::vector<double> raw(n);
  double partial = 0.0;
  for (std::size_t i = 0; i < last; ++i) {
    raw[i] = phi(static_cast<long>(i));
    partial += raw[i];
  }
  raw[last] = total - partial;
  return finish("kernel_shap", std::move(raw));
}

std::vector<double> exact_shapley(const Instance& x, const TargetedModel& tm,
                                  const RemovalStrategy& strategy) {
  const std::size_t n = x.elements();
  if (n > kExactShapleyLimit) {
    throw std::invalid_argument("exact_shapley: n = " + std::to_string(n) +
                                " exceeds " +
                                std::to_string(kExactShapleyLimit));
  }
  const std::uint64_t full = (1ULL << n) - 1;
  std::vector<double> value(1ULL << n);
  for (std::uint64_t m = 0; m <= full; ++m) {
    // Coalition m is present; its complement is removed.
    value[m] = tm(remove(x, IndexSet::from_mask(full & ~m, n), strategy));
  }
  std::vector<double> coef(n);
  double factorial_n = 1.0;
  for (std::size_t k = 2; k <= n; ++k) factorial_n *= static_cast<double>(k);
  for (std::size_t s = 0; s < n; ++s) {
    double fs = 1.0, fr = 1.0;
    for (std::size_t k = 2; k <= s; ++k) fs *= static_cast<double>(k);
    for (std::size_t k = 2; k <= n - s - 1; ++k) fr *= static_cast<double>(k);
    coef[s] = fs * fr / factorial_n;
  }
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bit = 1ULL << i;
    for (std::uint64_t m = 0; m <= full; ++m) {
      if (m & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(m));
      phi[i] += coef[size] * (value[m | bit] - value[m]);
    }
  }
  return phi;
}

const std::vector<std::string>& baseline_method_tags() {
  static const std::vector<std::string> tags = {
      "occlusion", "saliency",    "integrated_gradients",
      "lime",      "kernel_shap", "feature_ablation"};
  return tags;
}

SaliencyExplanation explain(const std::string& method, const Instance& x,
                            const TargetedModel& tm,
                            const RemovalStrategy& strategy,
                            const ExplainerConfig& cfg) {
  if (method == "occlusion") return occlusion(x, tm, strategy, cfg);
  if (method == "saliency") return saliency_grad(x, tm, cfg);
  if (method == "integrated_gradients") {
    return integrated_gradients(x, tm, strategy.baseline, cfg.ig_steps, cfg);
  }
  if (method == "lime") return lime(x, tm, strategy, cfg);
  if (method == "kernel_shap") return kernel_shap(x, tm, strategy, cfg);
  if (method == "feature_ablation") {
    auto groups = cfg.ablation_groups;
    if (groups.empty()) {
      for (std::size_t i = 0; i < x.elements(); ++i) groups.push_back({i});
    }
    return feature_ablation(x, tm, strategy, groups, cfg);
  }
  throw std::invalid_argument("unknown explanation method: " + method);
}

}  // namespace faithkit
