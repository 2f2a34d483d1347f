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

#include "tvmerge/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <map>
#include <numeric>
#include <vector>

#include "test_support.hpp"
#include "tvmerge/parallel.hpp"

namespace tvmerge {
namespace {

TEST(KeyedStreamTest, SameKeySameSequence) {
  KeyedStream a(42, 1, 2), b(42, 1, 2);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(KeyedStreamTest, LabelsSeparateStreams) {
  KeyedStream base(42, 1, 2);
  KeyedStream other_seed(43, 1, 2), other_a(42, 2, 2), other_b(42, 1, 3), swapped(42, 2, 1);
  const std::uint64_t first = base();
  EXPECT_NE(first, other_seed());
  EXPECT_NE(first, other_a());
  EXPECT_NE(first, other_b());
  EXPECT_NE(first, swapped());
}

TEST(KeyedStreamTest, UniformStaysInRangeAndCoversIt) {
  KeyedStream s(7, 0, 0);
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 6000; ++i) {
    const auto v = s.Uniform(6);
    ASSERT_LT(v, 6u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 800);
  EXPECT_EQ(KeyedStream(1, 2, 3).Uniform(1), 0u);
}

TEST(KeyedStreamTest, UniformRealInUnitInterval) {
  KeyedStream s(9, 0, 0);
  double sum = 0;
  for (int i = 0; i < 10000; ++i) {
    const double u = s.UniformReal();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 10000, 0.5, 0.02);
}

TEST(ShuffleTest, PrefixMatchesFullShuffle) {
  for (std::size_t n : {1u, 2u, 5u, 40u}) {
    for (std::size_t count = 0; count <= n; ++count) {
      std::vector<int> full(n), partial(n);
      std::iota(full.begin(), full.end(), 0);
      partial = full;
      KeyedStream a(5, n, count), b(5, n, count);
      Shuffle(std::span<int>(full), a);
      ShufflePrefix(std::span<int>(partial), count, b);
      EXPECT_TRUE(std::equal(full.begin(), full.begin() + count, partial.begin()));
    }
  }
}

TEST(ShuffleTest, ProducesPermutation) {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  KeyedStream s(11, 0, 0);
  Shuffle(std::span<int>(v), s);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(ShuffleTest, AllPermutationsOfThreeAppear) {
  std::map<std::vector<int>, int> seen;
  for (std::uint64_t seed = 0; seed < 600; ++seed) {
    std::vector<int> v{0, 1, 2};
    KeyedStream s(seed, 0, 0);
    Shuffle(std::span<int>(v), s);
    ++seen[v];
  }
  ASSERT_EQ(seen.size(), 6u);
  for (const auto& [perm, count] : seen) EXPECT_GT(count, 60);
}

TEST(ParallelTest, ChunkCountIgnoresWorkerCount) {
  std::size_t one, four;
  {
    testing::ScopedEnv env("TVM_THREADS", "1");
    one = ChunkCount(100000, 1024);
  }
  {
    testing::ScopedEnv env("TVM_THREADS", "4");
    four = ChunkCount(100000, 1024);
  }
  EXPECT_EQ(one, four);
  EXPECT_EQ(ChunkCount(0, 8), 0u);
  EXPECT_EQ(ChunkCount(3, 8), 1u);
  EXPECT_EQ(ChunkCount(1u << 30, 1), 64u);
}

TEST(ParallelTest, CoversEveryIndexOnce) {
  testing::ScopedEnv env("TVM_THREADS", "4");
  std::vector<std::atomic<int>> hits(10007);
  ParallelChunks(hits.size(), 16, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ++hits[i];
  });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelTest, RethrowsWorkerException) {
  testing::ScopedEnv env("TVM_THREADS", "4");
  EXPECT_THROW(ParallelChunks(1000, 1,
                              [](std::size_t chunk, std::size_t, std::size_t) {
                                if (chunk == 3) throw std::runtime_error("boom");
                              }),
               std::runtime_error);
}

TEST(ParallelTest, ThreadVariableParsing) {
  {
    testing::ScopedEnv env("TVM_THREADS", "3");
    EXPECT_EQ(WorkerCount(), 3u);
  }
  {
    testing::ScopedEnv env("TVM_THREADS", "zero");
    EXPECT_GE(WorkerCount(), 1u);
  }
}

}  // namespace
}  // namespace tvmerge
