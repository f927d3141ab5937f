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

#include <random>
#include <set>
#include <stdexcept>

#include <gtest/gtest.h>

#include "test_support.h"

namespace faithkit {
namespace {

using testing::row;

TEST(Remove, EmptySetLeavesInput) {
  const Instance x = row({1, 2, 3});
  EXPECT_EQ(remove(x, IndexSet{}, testing::zero_baseline(3)), x);
}

TEST(Remove, FullSetGivesBaseline) {
  const Instance base = row({0.5, -1, 2});
  EXPECT_EQ(remove(row({1, 2, 3}), IndexSet::all(3),
                   RemovalStrategy::baseline_replace(base)),
            base);
}

TEST(Remove, SingleElement) {
  EXPECT_EQ(remove(row({1, 2, 3}), IndexSet{1}, testing::zero_baseline(3)),
            row({1, 0, 3}));
}

TEST(Remove, OutOfRange) {
  EXPECT_THROW(remove(row({1, 2}), IndexSet{2}, testing::zero_baseline(2)),
               std::out_of_range);
  EXPECT_THROW(insert(row({0, 0}), row({1, 2}), IndexSet{5}), std::out_of_range);
}

TEST(Remove, DisjointRemovalsCommute) {
  std::mt19937_64 rng(2);
  const auto strat = RemovalStrategy::baseline_replace(row({9, 8, 7, 6, 5}));
  for (int trial = 0; trial < 100; ++trial) {
    const Instance x = row(testing::uniform_vector(5, rng));
    const auto mask = rng() % 32;
    const IndexSet I = IndexSet::from_mask(mask, 5);
    const IndexSet J = IndexSet::from_mask(~mask & 31 & rng(), 5);
    EXPECT_EQ(remove(remove(x, I, strat), J, strat),
              remove(remove(x, J, strat), I, strat));
  }
}

TEST(Remove, GaussianNoiseReproducible) {
  const auto strat = RemovalStrategy::gaussian_noise(row({0, 0, 0}), 0.3, 42);
  const Instance x = row({1, 2, 3});
  const Instance a = remove(x, IndexSet{0, 2}, strat, 5);
  EXPECT_EQ(a, remove(x, IndexSet{0, 2}, strat, 5));
  EXPECT_EQ(a.at(1, 0), 2.0);
  EXPECT_NE(a.at(0, 0), 1.0);
  EXPECT_NE(a, remove(x, IndexSet{0, 2}, strat, 6));
  EXPECT_THROW(RemovalStrategy::gaussian_noise(row({0}), 0.0, 1),
               std::invalid_argument);
}

TEST(Insert, Boundaries) {
  const Instance base = row({0, 0, 0}), x = row({1, 2, 3});
  EXPECT_EQ(insert(base, x, IndexSet{}), base);
  EXPECT_EQ(insert(base, x, IndexSet::all(3)), x);
}

TEST(Insert, EqualsRemoveOfComplement) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance base = row(testing::uniform_vector(6, rng));
    const Instance x = row(testing::uniform_vector(6, rng));
    const IndexSet I = IndexSet::from_mask(rng() % 64, 6);
    EXPECT_EQ(insert(base, x, I),
              remove(x, I.complement(6), RemovalStrategy::baseline_replace(base)));
  }
}

TEST(SampleSubsets, AllSubsetsOfThree) {
  const auto sets = sample_subsets(3, {.mode = SubsetMode::kAllSubsets});
  ASSERT_EQ(sets.size(), 8u);
  EXPECT_EQ(sets.front(), IndexSet{});
  EXPECT_EQ(sets.back(), IndexSet({0, 1, 2}));
}

TEST(SampleSubsets, AllSubsetsLimit) {
  EXPECT_THROW(sample_subsets(17, {.mode = SubsetMode::kAllSubsets}),
               std::invalid_argument);
}

TEST(SampleSubsets, Singletons) {
  const auto sets = sample_subsets(4, {.mode = SubsetMode::kSingletons});
  EXPECT_EQ(sets, (std::vector<IndexSet>{IndexSet{0}, IndexSet{1}, IndexSet{2},
                                         IndexSet{3}}));
}

TEST(SampleSubsets, Prefixes) {
  const Permutation p({2, 0, 1});
  const auto sets =
      sample_subsets(3, {.mode = SubsetMode::kPrefixes, .order = &p});
  EXPECT_EQ(sets, (std::vector<IndexSet>{IndexSet{2}, IndexSet{0, 2},
                                         IndexSet{0, 1, 2}}));
}

TEST(SampleSubsets, UniformPowersetMeanSize) {
  const auto sets = sample_subsets(
      4, {.mode = SubsetMode::kUniformPowerset, .count = 4000, .seed = 3});
  ASSERT_EQ(sets.size(), 4000u);
  double total = 0.0;
  for (const auto& s : sets) total += double(s.size());
  EXPECT_NEAR(total / 4000.0, 2.0, 0.1);
}

TEST(SampleSubsets, DeterministicAndDistinct) {
  const SubsetRequest req{.mode = SubsetMode::kUniformPowerset,
                          .count = 64,
                          .seed = 11,
                          .distinct = true};
  const auto a = sample_subsets(6, req);
  EXPECT_EQ(a, sample_subsets(6, req));
  std::set<IndexSet> unique(a.begin(), a.end());
  EXPECT_EQ(unique.size(), 64u);
  EXPECT_THROW(sample_subsets(31, {.mode = SubsetMode::kUniformPowerset}),
               std::invalid_argument);
}

TEST(IndexSet, Basics) {
  EXPECT_THROW(IndexSet({1, 1}), std::invalid_argument);
  const IndexSet s{3, 1};
  EXPECT_EQ(s.indices(), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(s.complement(5), IndexSet({0, 2, 4}));
  EXPECT_EQ(IndexSet::from_mask(0b101, 3), IndexSet({0, 2}));
  EXPECT_EQ(IndexSet({0, 2}).mask(), 0b101u);
}

}  // namespace
}  // namespace faithkit
