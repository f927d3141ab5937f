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

#ifndef FAITHKIT_MATH_H_
#define FAITHKIT_MATH_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

// Numeric primitives shared by the metric engine, the explainers and the
// explainer network. Indices are 0-based throughout the library.
namespace faithkit {

using RealVector = std::vector<double>;

// An ordering of [0, n) by non-increasing importance: order()[0] is the most
// important element.
class Permutation {
 public:
  Permutation() = default;
  // Throws std::invalid_argument unless `order` is a bijection on [0, n).
  explicit Permutation(std::vector<std::size_t> order);

  static Permutation identity(std::size_t n);

  std::size_t size() const { return order_.size(); }
  std::size_t operator[](std::size_t rank) const { return order_[rank]; }
  const std::vector<std::size_t>& order() const { return order_; }

  // Least important element first.
  Permutation reversed() const;

  // Position of every element: rank_of()[order()[i]] == i.
  std::vector<std::size_t> rank_of() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> order_;
};

enum class CorrelationKind { kPearson, kSpearman };

std::string_view to_string(CorrelationKind kind);
CorrelationKind correlation_kind_from_string(std::string_view name);

// Pearson correlation. A zero-variance argument yields exactly 0.
// Throws std::invalid_argument on length mismatch or length < 2.
double pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of fractional ranks (ties share their mean rank).
double spearman(std::span<const double> a, std::span<const double> b);

double correlation(CorrelationKind kind, std::span<const double> a,
                   std::span<const double> b);

// 1-based fractional ranks, ascending; tied values get their mean rank.
std::vector<double> fractional_ranks(std::span<const double> values);

// Rank 1 = best; lower values win unless `higher_is_better`. Ties share the
// mean of their ranks.
std::vector<double> direction_ranks(std::span<const double> values,
                                    bool higher_is_better);

// Indices sorted by descending score, ties broken by ascending index.
Permutation argsort_desc(std::span<const double> scores);

// Rank-based saliency: the element at rank i (0-based) scores (n - i) / n.
std::vector<double> perm_to_saliency(const Permutation& perm);

// Linear-interpolation quantile of the sorted values (type 7).
double quantile(std::span<const double> values, double p);

// Cosine similarity; two zero vectors are similar (1), a zero vector against a
// non-zero one is not (0).
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Min-max scaling to [0, 1]; a constant vector maps to all 0.5.
std::vector<double> min_max_normalize(std::span<const double> values);

double logistic(double z);

bool all_finite(std::span<const double> values);

// SplitMix64 finalizer, used to derive independent seeds from (seed, ids...).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace faithkit

#endif  // FAITHKIT_MATH_H_
