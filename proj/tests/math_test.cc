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

#include "faithkit/math.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "test_support.h"

namespace faithkit {
namespace {

TEST(Pearson, ProportionalIsOne) {
  EXPECT_DOUBLE_EQ(pearson(std::vector{1.0, 2.0, 3.0}, std::vector{2.0, 4.0, 6.0}), 1.0);
}

TEST(Pearson, ReversedIsMinusOne) {
  EXPECT_DOUBLE_EQ(pearson(std::vector{1.0, 2.0, 3.0}, std::vector{3.0, 2.0, 1.0}), -1.0);
}

TEST(Pearson, ZeroVarianceIsExactlyZero) {
  EXPECT_EQ(pearson(std::vector{5.0, 5.0, 5.0}, std::vector{1.0, 2.0, 3.0}), 0.0);
  EXPECT_EQ(pearson(std::vector{1.0, 2.0, 3.0}, std::vector{5.0, 5.0, 5.0}), 0.0);
}

TEST(Pearson, RejectsBadLengths) {
  EXPECT_THROW(pearson(std::vector{1.0, 2.0}, std::vector{1.0, 2.0, 3.0}),
               std::invalid_argument);
  EXPECT_THROW(pearson(std::vector{1.0}, std::vector{1.0}), std::invalid_argument);
}

TEST(Spearman, SameRankOrder) {
  EXPECT_DOUBLE_EQ(spearman(std::vector{0.1, 0.4, 0.3}, std::vector{10.0, 30.0, 20.0}), 1.0);
}

TEST(Spearman, ReversedRanks) {
  EXPECT_DOUBLE_EQ(spearman(std::vector{1.0, 2.0, 3.0}, std::vector{9.0, 4.0, 1.0}), -1.0);
}

TEST(Spearman, MeanRankTies) {
  // ranks (1.5, 1.5, 3) and (1, 2.5, 2.5): centred (-.5,-.5,1), (-1,.5,.5),
  // covariance 0.75, variances 1.5 each.
  EXPECT_NEAR(spearman(std::vector{1.0, 1.0, 2.0}, std::vector{1.0, 2.0, 2.0}), 0.5, 1e-12);
}

TEST(Correlation, SymmetricAndAffineInvariant) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = testing::uniform_vector(7, rng, -1, 1);
    auto b = testing::uniform_vector(7, rng, -1, 1);
    const double sa = scale(rng), sb = scale(rng), ta = shift(rng), tb = shift(rng);
    auto a2 = a, b2 = b;
    for (double& v : a2) v = sa * v + ta;
    for (double& v : b2) v = sb * v + tb;
    for (auto kind : {CorrelationKind::kPearson, CorrelationKind::kSpearman}) {
      EXPECT_NEAR(correlation(kind, a, b), correlation(kind, b, a), 1e-12);
      EXPECT_NEAR(correlation(kind, a, b), correlation(kind, a2, b2), 1e-12);
    }
  }
}

TEST(ArgsortDesc, Examples) {
  EXPECT_EQ(argsort_desc(std::vector{0.2, 0.9, 0.5}).order(),
            (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(argsort_desc(std::vector{0.5, 0.5}).order(),
            (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(argsort_desc(std::vector{0.25, 0.5, 0.75, 1.0}).order(),
            (std::vector<std::size_t>{3, 2, 1, 0}));
}

TEST(ArgsortDesc, RejectsEmpty) {
  EXPECT_THROW(argsort_desc(std::vector<double>{}), std::invalid_argument);
}

TEST(PermToSaliency, Examples) {
  EXPECT_EQ(perm_to_saliency(Permutation::identity(4)),
            (std::vector{1.0, 0.75, 0.5, 0.25}));
  const auto s = perm_to_saliency(Permutation({2, 0, 1}));
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[2], 1.0, 1e-15);
}

TEST(PermToSaliency, RoundTripExhaustive) {
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t count = 0;
    do {
      const Permutation p(order);
      EXPECT_EQ(argsort_desc(perm_to_saliency(p)), p);
      ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    EXPECT_EQ(count, std::size_t(std::tgamma(double(n) + 1) + 0.5));
  }
}

TEST(Permutation, RejectsNonBijection) {
  EXPECT_THROW(Permutation({0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(Permutation({0, 3, 1}), std::invalid_argument);
}

TEST(Permutation, ReversedAndRanks) {
  const Permutation p({2, 0, 1});
  EXPECT_EQ(p.reversed().order(), (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_EQ(p.rank_of(), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Quantile, Examples) {
  EXPECT_DOUBLE_EQ(quantile(std::vector{1.0, 2.0, 3.0, 4.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(std::vector{3.0, -1.0, 7.0}, 0.0), -1.0);
  // sorted (10, 20, 40): position 0.25 * 2 = 0.5 -> 10 + 0.5 * 10
  EXPECT_DOUBLE_EQ(quantile(std::vector{40.0, 10.0, 20.0}, 0.25), 15.0);
}

TEST(Quantile, Errors) {
  EXPECT_THROW(quantile(std::vector<double>{}, 0.5), std::invalid_argument);
  EXPECT_THROW(quantile(std::vector{1.0}, 1.5), std::invalid_argument);
  EXPECT_THROW(quantile(std::vector{1.0}, -0.1), std::invalid_argument);
}

TEST(Quantile, MonotoneInP) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = testing::uniform_vector(9, rng, -3, 3);
    double prev = quantile(v, 0.0);
    for (int k = 1; k <= 100; ++k) {
      const double q = quantile(v, k / 100.0);
      EXPECT_GE(q, prev);
      prev = q;
    }
    EXPECT_DOUBLE_EQ(prev, *std::max_element(v.begin(), v.end()));
  }
}

TEST(Cosine, ZeroVectorConventions) {
  EXPECT_EQ(cosine_similarity(std::vector{0.0, 0.0}, std::vector{0.0, 0.0}), 1.0);
  EXPECT_EQ(cosine_similarity(std::vector{0.0, 0.0}, std::vector{1.0, 0.0}), 0.0);
  EXPECT_NEAR(cosine_similarity(std::vector{1.0, 0.0}, std::vector{0.0, 2.0}), 0.0, 1e-15);
}

TEST(MinMax, ConstantMapsToHalf) {
  EXPECT_EQ(min_max_normalize(std::vector{3.0, 3.0, 3.0}),
            (std::vector{0.5, 0.5, 0.5}));
  EXPECT_EQ(min_max_normalize(std::vector{1.0, 3.0, 2.0}),
            (std::vector{0.0, 1.0, 0.5}));
}

TEST(DirectionRanks, MeanTies) {
  EXPECT_EQ(direction_ranks(std::vector{0.9, 0.5, 0.9}, true),
            (std::vector{1.5, 3.0, 1.5}));
  EXPECT_EQ(direction_ranks(std::vector{0.9, 0.5, 0.9}, false),
            (std::vector{2.5, 1.0, 2.5}));
}

TEST(MixSeed, DistinctStreams) {
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
  EXPECT_EQ(mix_seed(7, 3), mix_seed(7, 3));
}

}  // namespace
}  // namespace faithkit
