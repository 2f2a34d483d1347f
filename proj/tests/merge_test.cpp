/* Copyright 2026 The tvmerge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tvmerge/merge.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "reference_merge.hpp"
#include "test_support.hpp"
#include "tvmerge/error.hpp"

namespace tvmerge {
namespace {

using testing::RandomTaus;
using testing::Tau;
using testing::Values;

std::vector<int> Owners1(const Assignment& a) {
  std::vector<int> out;
  for (auto o : a.owner) out.push_back(o + 1);
  return out;
}

PreferenceVector CensusPreference(const Assignment& a, std::size_t T) {
  PreferenceVector pref;
  for (auto c : AssignmentCensus(a, T)) pref.budgets.push_back(static_cast<std::int64_t>(c));
  return pref;
}

MergeConfig Tunable(std::uint64_t seed, int rounds = 2) {
  MergeConfig cfg;
  cfg.method = MergeMethod::kTunable;
  cfg.rounds = rounds;
  cfg.seed = seed;
  return cfg;
}

TEST(MagmaxTest, ToyVectors) {
  const std::vector<TaskVector> taus{Tau({1, -3, 2}), Tau({-2, 1, 2})};
  const auto r = MagmaxMerge(taus);
  EXPECT_EQ(Values(r.merged), (std::vector<float>{-2, -3, 2}));
  EXPECT_EQ(Owners1(r.assignment), (std::vector<int>{2, 1, 2}));
}

TEST(MagmaxTest, SingleTaskIsIdentity) {
  const std::vector<TaskVector> taus{Tau({1, -3, 2})};
  const auto r = MagmaxMerge(taus);
  EXPECT_TRUE(BitwiseEqual(r.merged, taus[0]));
  EXPECT_EQ(Owners1(r.assignment), (std::vector<int>{1, 1, 1}));
}

TEST(MagmaxTest, AllZeroTiesGoToLastTask) {
  const std::vector<TaskVector> taus{Tau({0, 0, 0}), Tau({0, 0, 0})};
  const auto r = MagmaxMerge(taus);
  EXPECT_EQ(Values(r.merged), (std::vector<float>{0, 0, 0}));
  EXPECT_EQ(Owners1(r.assignment), (std::vector<int>{2, 2, 2}));
}

TEST(MagmaxTest, DominantLastTaskOwnsEverything) {
  std::mt19937_64 gen(1);
  auto taus = RandomTaus(gen, 500, 3);
  for (std::size_t p = 0; p < 500; ++p) {
    taus[2].flat()[p] = 10 * std::max({std::fabs(taus[0].flat()[p]), std::fabs(taus[1].flat()[p])});
  }
  const auto census = AssignmentCensus(MagmaxMerge(taus).assignment, 3);
  EXPECT_EQ(census, (std::vector<std::uint64_t>{0, 0, 500}));
}

TEST(MagmaxTest, Errors) {
  EXPECT_THROW(MagmaxMerge({}), Error);
  const std::vector<TaskVector> bad{Tau({1, 2}), Tau({1, 2, 3})};
  try {
    MagmaxMerge(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos);
  }
}

TEST(TunableTest, HandExecutedExample) {
  const std::vector<TaskVector> taus{Tau({5, 4, 1, 0}), Tau({1, 2, 3, 4})};
  const auto r = TunableMerge(taus, {{2, 2}}, Tunable(99));
  EXPECT_EQ(Values(r.merged), (std::vector<float>{5, 4, 3, 4}));
  EXPECT_EQ(Owners1(r.assignment), (std::vector<int>{1, 1, 2, 2}));
  EXPECT_EQ(r.assignment.provenance, (std::vector<std::uint16_t>{1, 1, 1, 1}));
  // No randomness was drawn, so any seed gives the same result.
  const auto other = TunableMerge(taus, {{2, 2}}, Tunable(12345));
  EXPECT_EQ(other.assignment.owner, r.assignment.owner);
}

TEST(TunableTest, AllBudgetOnLastTaskGivesLastVector) {
  std::mt19937_64 gen(2);
  const auto taus = RandomTaus(gen, 300, 4);
  const auto r = TunableMerge(taus, {{0, 0, 0, 300}}, Tunable(5));
  EXPECT_TRUE(BitwiseEqual(r.merged, taus[3]));
  EXPECT_EQ(AssignmentCensus(r.assignment, 4), (std::vector<std::uint64_t>{0, 0, 0, 300}));
}

TEST(TunableTest, MagmaxCensusReproducesMagmax) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto taus = RandomTaus(gen, 1000, 5, trial % 2 ? 3 : 0);
    const auto mm = MagmaxMerge(taus);
    const auto tm = TunableMerge(taus, CensusPreference(mm.assignment, 5), Tunable(trial));
    EXPECT_TRUE(BitwiseEqual(tm.merged, mm.merged));
    EXPECT_EQ(tm.assignment.owner, mm.assignment.owner);
  }
}

TEST(TunableTest, MatchesReferenceOnSmallInstances) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + gen() % 12;
    const std::size_t T = 1 + gen() % 3;
    const auto taus = RandomTaus(gen, d, T, trial % 3 == 0 ? 0 : 2);
    PreferenceVector pref;
    std::int64_t left = static_cast<std::int64_t>(d);
    for (std::size_t t = 0; t + 1 < T; ++t) {
      const auto n = static_cast<std::int64_t>(gen() % static_cast<std::uint64_t>(left + 1));
      pref.budgets.push_back(n);
      left -= n;
    }
    pref.budgets.push_back(left);
    const int K = 1 + static_cast<int>(gen() % 3);
    const std::uint64_t seed = gen();

    std::vector<std::vector<float>> raw;
    for (const auto& tau : taus) raw.push_back(Values(tau));
    const auto ref = testing::ReferenceTunableMerge(raw, pref.budgets, K, seed);
    const auto got = TunableMerge(taus, pref, Tunable(seed, K));
    ASSERT_EQ(Values(got.merged), ref.merged) << "trial " << trial;
    ASSERT_EQ(Owners1(got.assignment), ref.owner) << "trial " << trial;
    for (std::size_t p = 0; p < d; ++p) {
      ASSERT_EQ(got.assignment.provenance[p], ref.provenance[p]) << "trial " << trial;
    }
  }
}

TEST(TunableTest, CensusEqualsBudgets) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 5000, T = 6;
    const auto taus = RandomTaus(gen, d, T);
    std::vector<double> w(T);
    for (auto& x : w) x = std::uniform_real_distribution<double>(0.1, 1)(gen);
    const PreferenceVector pref = AllocateByWeights(w, d);
    const auto r = TunableMerge(taus, pref, Tunable(trial));
    const auto census = AssignmentCensus(r.assignment, T);
    for (std::size_t t = 0; t < T; ++t) {
      EXPECT_EQ(census[t], static_cast<std::uint64_t>(pref.budgets[t]));
    }
    for (std::size_t p = 0; p < d; ++p) {
      ASSERT_EQ(r.merged.flat()[p], taus[r.assignment.owner[p]].flat()[p]);
    }
  }
}

TEST(TunableTest, FirstPassOfLastTaskIsItsMagmaxSet) {
  std::mt19937_64 gen(6);
  const auto taus = RandomTaus(gen, 2000, 4);
  const auto mm = MagmaxMerge(taus);
  // Budget for the last task well below its magmax win count.
  const auto wins = AssignmentCensus(mm.assignment, 4)[3];
  const auto n4 = static_cast<std::int64_t>(wins / 2);
  const PreferenceVector pref{{600, 600, 2000 - 1200 - n4, n4}};
  const auto r = TunableMerge(taus, pref, Tunable(8));
  for (std::size_t p = 0; p < 2000; ++p) {
    if (r.assignment.owner[p] == 3) {
      EXPECT_EQ(mm.assignment.owner[p], 3);
      EXPECT_EQ(r.assignment.provenance[p], 1);
    }
  }
}

TEST(TunableTest, DeterministicAcrossThreadCounts) {
  std::mt19937_64 gen(7);
  const auto taus = RandomTaus(gen, 200000, 5, 2);
  const PreferenceVector pref{{10000, 50000, 40000, 60000, 40000}};
  MergeResult one, many;
  {
    testing::ScopedEnv env("TVM_THREADS", "1");
    one = TunableMerge(taus, pref, Tunable(77));
  }
  {
    testing::ScopedEnv env("TVM_THREADS", "4");
    many = TunableMerge(taus, pref, Tunable(77));
  }
  EXPECT_TRUE(BitwiseEqual(one.merged, many.merged));
  EXPECT_EQ(one.assignment.owner, many.assignment.owner);
  EXPECT_EQ(one.assignment.provenance, many.assignment.provenance);
}

TEST(TunableTest, RejectsBadPreference) {
  const std::vector<TaskVector> taus{Tau({1, 2, 3}), Tau({3, 2, 1})};
  EXPECT_THROW(TunableMerge(taus, {{1, 1}}, Tunable(0)), Error);
  EXPECT_THROW(TunableMerge(taus, {{-1, 4}}, Tunable(0)), Error);
  EXPECT_THROW(TunableMerge(taus, {{3}}, Tunable(0)), Error);
  EXPECT_THROW(TunableMerge(taus, {{1, 2}}, Tunable(0, 0)), Error);
}

TEST(AverageTest, Examples) {
  EXPECT_EQ(Values(AverageMerge(std::vector{Tau({2, 0}), Tau({0, 2})})),
            (std::vector<float>{1, 1}));
  const auto t1 = Tau({0.3f, -7, 1e-8f});
  EXPECT_TRUE(BitwiseEqual(AverageMerge(std::vector{t1}), t1));
  EXPECT_EQ(Values(AverageMerge(std::vector{Tau({1.5f, -2}), Tau({-1.5f, 2})})),
            (std::vector<float>{0, 0}));
}

TEST(RandomMixTest, SingleTaskAndDeterminism) {
  const auto t1 = Tau({1, 2, 3});
  EXPECT_TRUE(BitwiseEqual(RandomMixMerge(std::vector{t1}, 3).merged, t1));

  std::mt19937_64 gen(8);
  const auto taus = RandomTaus(gen, 1000, 3);
  const auto a = RandomMixMerge(taus, 17);
  const auto b = RandomMixMerge(taus, 17);
  EXPECT_TRUE(BitwiseEqual(a.merged, b.merged));
  EXPECT_EQ(a.assignment.owner, b.assignment.owner);
  EXPECT_NE(RandomMixMerge(taus, 18).assignment.owner, a.assignment.owner);
}

TEST(RandomMixTest, CountsWithinBinomialBound) {
  std::mt19937_64 gen(9);
  const std::size_t d = 100000;
  const auto taus = RandomTaus(gen, d, 4);
  const auto census = AssignmentCensus(RandomMixMerge(taus, 2026).assignment, 4);
  const double mean = d / 4.0;
  const double sigma = std::sqrt(d * 0.25 * 0.75);
  for (auto c : census) EXPECT_LE(std::fabs(static_cast<double>(c) - mean), 3 * sigma);
}

TEST(CensusTest, Examples) {
  Assignment a;
  a.owner = {1, 0, 1};
  EXPECT_EQ(AssignmentCensus(a, 2), (std::vector<std::uint64_t>{1, 2}));
  EXPECT_THROW(AssignmentCensus(a, 1), Error);
  EXPECT_DOUBLE_EQ(ResidualFraction(a), 0);
}

TEST(CensusTest, OwnerMapRoundTrip) {
  Assignment a;
  a.owner = {1, 0, 2};
  a.provenance = {1, 2, 0};
  const OwnerMapFile map = ToOwnerMap(a);
  EXPECT_EQ(map.owner, (std::vector<std::uint16_t>{2, 1, 3}));
  const Assignment back = FromOwnerMap(map);
  EXPECT_EQ(back.owner, a.owner);
  EXPECT_EQ(back.provenance, a.provenance);
  EXPECT_DOUBLE_EQ(ResidualFraction(a), 1.0 / 3);
}

TEST(MergeMethodTest, Names) {
  EXPECT_EQ(ParseMergeMethod("magmax"), MergeMethod::kMagmax);
  EXPECT_EQ(ParseMergeMethod("randmix"), MergeMethod::kRandomMix);
  EXPECT_FALSE(ParseMergeMethod("ties").has_value());
  EXPECT_EQ(MergeMethodName(MergeMethod::kTunable), "tunable");
}

}  // namespace
}  // namespace tvmerge
