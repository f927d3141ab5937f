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

#include "faithkit/perturb.h"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

namespace faithkit {

IndexSet::IndexSet(std::initializer_list<std::size_t> indices)
    : IndexSet(std::vector<std::size_t>(indices)) {}

IndexSet::IndexSet(std::vector<std::size_t> indices)
    : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw std::invalid_argument("IndexSet: duplicate index");
  }
}

IndexSet IndexSet::from_mask(std::uint64_t mask, std::size_t n) {
  IndexSet out;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask >> i & 1ULL) out.indices_.push_back(i);
  }
  return out;
}

IndexSet IndexSet::all(std::size_t n) {
  IndexSet out;
  out.indices_.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.indices_[i] = i;
  return out;
}

IndexSet IndexSet::prefix(const Permutation& order, std::size_t k) {
  if (k > order.size()) throw std::out_of_range("IndexSet::prefix: k > n");
  return IndexSet(std::vector<std::size_t>(order.order().begin(),
                                           order.order().begin() + k));
}

std::uint64_t IndexSet::mask() const {
  std::uint64_t m = 0;
  for (std::size_t i : indices_) {
    if (i >= 64) throw std::out_of_range("IndexSet::mask: index >= 64");
    m |= 1ULL << i;
  }
  return m;
}

IndexSet IndexSet::complement(std::size_t n) const {
  IndexSet out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k < indices_.size() && indices_[k] == i) {
      ++k;
    } else {
      out.indices_.push_back(i);
    }
  }
  return out;
}

bool IndexSet::contains(std::size_t i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

void IndexSet::check_range(std::size_t n) const {
  if (!indices_.empty() && indices_.back() >= n) {
    throw std::out_of_range("index " + std::to_string(indices_.back()) +
                            " out of range for " + std::to_string(n) +
                            " elements");
  }
}

std::string to_string(RemovalKind kind) {
  switch (kind) {
    case RemovalKind::kBaselineReplace:
      return "baseline_replace";
    case RemovalKind::kMeanReplace:
      return "mean_replace";
    case RemovalKind::kGaussianNoise:
      return "gaussian_noise";
  }
  return "unknown";
}

RemovalStrategy RemovalStrategy::baseline_replace(Instance baseline) {
  return {RemovalKind::kBaselineReplace, std::move(baseline), 0.0, 0};
}

RemovalStrategy RemovalStrategy::mean_replace(const Dataset& dataset) {
  return {RemovalKind::kMeanReplace, training_mean(dataset), 0.0, 0};
}

RemovalStrategy RemovalStrategy::gaussian_noise(Instance centre, double sigma,
                                                std::uint64_t seed) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_noise: sigma must be > 0");
  }
  return {RemovalKind::kGaussianNoise, std::move(centre), sigma, seed};
}

Instance remove(const Instance& x, const IndexSet& removed,
                const RemovalStrategy& strategy, std::uint64_t call_index) {
  if (!x.same_shape(strategy.baseline)) {
    throw std::invalid_argument("remove: baseline shape mismatch");
  }
  removed.check_range(x.elements());
  Instance out = x;
  if (strategy.kind != RemovalKind::kGaussianNoise) {
    for (std::size_t i : removed) {
      const auto src = strategy.baseline.element(i);
      std::copy(src.begin(), src.end(), out.element(i).begin());
    }
    return out;
  }
  std::uint64_t stream = mix_seed(strategy.seed, call_index);
  for (std::size_t i : removed) stream = mix_seed(stream, i);
  std::mt19937_64 rng(stream);
  std::normal_distribution<double> noise(0.0, strategy.sigma);
  for (std::size_t i : removed) {
    for (std::size_t j = 0; j < x.block_dim(); ++j) {
      out.at(i, j) = strategy.baseline.at(i, j) + noise(rng);
    }
  }
  return out;
}

Instance insert(const Instance& baseline, const Instance& x,
                const IndexSet& kept) {
  if (!x.same_shape(baseline)) {
    throw std::invalid_argument("insert: baseline shape mismatch");
  }
  kept.check_range(x.elements());
  Instance out = baseline;
  for (std::size_t i : kept) {
    const auto src = x.element(i);
    std::copy(src.begin(), src.end(), out.element(i).begin());
  }
  return out;
}

std::vector<IndexSet> sample_subsets(std::size_t n, const SubsetRequest& req) {
  if (n == 0) throw std::invalid_argument("sample_subsets: n must be >= 1");
  std::vector<IndexSet> out;
  switch (req.mode) {
    case SubsetMode::kAllSubsets: {
      if (n > 16) {
        throw std::invalid_argument(
            "sample_subsets: all_subsets requires n <= 16");
      }
      for (std::uint64_t m = req.exclude_empty ? 1 : 0; m < (1ULL << n); ++m) {
        out.push_back(IndexSet::from_mask(m, n));
      }
      return out;
    }
    case SubsetMode::kSingletons:
      for (std::size_t i = 0; i < n; ++i) out.push_back(IndexSet{i});
      return out;
    case SubsetMode::kPrefixes:
      if (!req.order || req.order->size() != n) {
        throw std::invalid_argument(
            "sample_subsets: prefixes need a permutation of length n");
      }
      for (std::size_t k = 1; k <= n; ++k) {
        out.push_back(IndexSet::prefix(*req.order, k));
      }
      return out;
    case SubsetMode::kUniformPowerset:
      break;
  }
  if (n > 30) {
    throw std::invalid_argument("sample_subsets: uniform power set needs n <= 30");
  }
  if (req.count < 1) throw std::invalid_argument("sample_subsets: count < 1");
  const std::uint64_t universe =
      (1ULL << n) - (req.exclude_empty ? 1ULL : 0ULL);
  if (req.distinct && req.count > universe) {
    throw std::invalid_argument(
        "sample_subsets: more distinct subsets requested than exist");
  }
  std::mt19937_64 rng(mix_seed(req.seed, 0x5e75));
  std::set<std::uint64_t> seen;
  out.reserve(req.count);
  while (out.size() < req.count) {
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < n; ++i) mask |= (rng() >> 63) << i;
    if (req.exclude_empty && mask == 0) continue;
    if (req.distinct && !seen.insert(mask).second) continue;
    out.push_back(IndexSet::from_mask(mask, n));
  }
  return out;
}

}  // namespace faithkit
