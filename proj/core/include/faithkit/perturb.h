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

#ifndef FAITHKIT_PERTURB_H_
#define FAITHKIT_PERTURB_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "faithkit/data.h"
#include "faithkit/math.h"

namespace faithkit {

// A set of element indices, kept sorted and unique.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::initializer_list<std::size_t> indices);
  explicit IndexSet(std::vector<std::size_t> indices);

  // Bits of `mask` (n <= 64).
  static IndexSet from_mask(std::uint64_t mask, std::size_t n);
  static IndexSet all(std::size_t n);
  // The first k entries of `order`.
  static IndexSet prefix(const Permutation& order, std::size_t k);

  std::uint64_t mask() const;  // requires max index < 64
  IndexSet complement(std::size_t n) const;
  bool contains(std::size_t i) const;
  bool empty() const { return indices_.empty(); }
  std::size_t size() const { return indices_.size(); }
  const std::vector<std::size_t>& indices() const { return indices_; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  // Throws std::out_of_range if any index >= n.
  void check_range(std::size_t n) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;
  friend auto operator<=>(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<std::size_t> indices_;
};

enum class RemovalKind { kBaselineReplace, kMeanReplace, kGaussianNoise };

std::string to_string(RemovalKind kind);

// How removed elements are filled. Every kind carries a baseline x°: the
// replacement value for the replace kinds and the noise centre for
// kGaussianNoise. Insertion always starts from the baseline.
struct RemovalStrategy {
  RemovalKind kind = RemovalKind::kBaselineReplace;
  Instance baseline;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  static RemovalStrategy baseline_replace(Instance baseline);
  // Baseline = per-feature mean of the training split.
  static RemovalStrategy mean_replace(const Dataset& dataset);
  static RemovalStrategy gaussian_noise(Instance centre, double sigma,
                                        std::uint64_t seed);

  bool deterministic() const { return kind != RemovalKind::kGaussianNoise; }
};

// x with the elements in `removed` replaced per the strategy. Noise draws are
// a pure function of (strategy seed, removed set, call_index), so repeated or
// concurrent calls reproduce bit-for-bit.
Instance remove(const Instance& x, const IndexSet& removed,
                const RemovalStrategy& strategy, std::uint64_t call_index = 0);

// Baseline with the elements in `kept` copied from x.
Instance insert(const Instance& baseline, const Instance& x,
                const IndexSet& kept);

enum class SubsetMode {
  kUniformPowerset,  // each index included independently with prob. 1/2
  kAllSubsets,       // all 2^n subsets in mask order (n <= 16)
  kSingletons,       // {0}, {1}, ..., {n-1}
  kPrefixes,         // top-1, top-2, ..., top-n of a permutation
};

struct SubsetRequest {
  SubsetMode mode = SubsetMode::kUniformPowerset;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  // kUniformPowerset only: draw without replacement (count <= 2^n).
  bool distinct = false;
  bool exclude_empty = false;
  const Permutation* order = nullptr;  // kPrefixes only
};

std::vector<IndexSet> sample_subsets(std::size_t n, const SubsetRequest& req);

}  // namespace faithkit

#endif  // FAITHKIT_PERTURB_H_
