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

// Step-by-step reference for budgeted magnitude merging. Written with ordered
// sets and 1-based task indices, deliberately unlike the library code path,
// so the two can be compared element for element.

#ifndef TVMERGE_TESTS_REFERENCE_MERGE_HPP_
#define TVMERGE_TESTS_REFERENCE_MERGE_HPP_

#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "tvmerge/rng.hpp"

namespace tvmerge::testing {

struct ReferenceOutcome {
  std::vector<float> merged;
  std::vector<int> owner;       // 1-based
  std::vector<int> provenance;  // round, or 0 for the residual pass
};

// Full forward Fisher-Yates of `items`.
inline std::vector<std::size_t> ReferenceShuffle(std::vector<std::size_t> items,
                                                 KeyedStream stream) {
  for (std::size_t i = 0; i + 1 < items.size(); ++i) {
    const std::size_t j = i + stream.Uniform(items.size() - i);
    std::swap(items[i], items[j]);
  }
  return items;
}

// tau[t - 1][p - 1] holds task t's value at element p.
inline ReferenceOutcome ReferenceTunableMerge(const std::vector<std::vector<float>>& tau,
                                              const std::vector<std::int64_t>& n, int K,
                                              std::uint64_t seed) {
  const int T = static_cast<int>(tau.size());
  const std::size_t d = tau[0].size();
  std::set<std::size_t> unselected;
  for (std::size_t p = 1; p <= d; ++p) unselected.insert(p);
  std::vector<std::set<std::size_t>> S(T + 1);
  std::vector<int> provenance(d + 1, 0);

  for (int k = 1; k <= K; ++k) {
    for (int t = T; t >= 1; --t) {
      // Elements where task t attains the largest magnitude among tasks
      // 1..t, later index winning ties.
      std::vector<std::size_t> hat;
      for (std::size_t p : unselected) {
        int winner = 1;
        for (int u = 2; u <= t; ++u) {
          if (std::fabs(tau[u - 1][p - 1]) >= std::fabs(tau[winner - 1][p - 1])) winner = u;
        }
        if (winner == t) hat.push_back(p);
      }
      const auto have = static_cast<std::int64_t>(S[t].size());
      if (have + static_cast<std::int64_t>(hat.size()) > n[t - 1]) {
        const auto want = static_cast<std::size_t>(n[t - 1] - have);
        hat = ReferenceShuffle(hat, KeyedStream(seed, static_cast<std::uint64_t>(k),
                                                static_cast<std::uint64_t>(t)));
        hat.resize(want);
      }
      for (std::size_t p : hat) {
        S[t].insert(p);
        unselected.erase(p);
        provenance[p] = k;
      }
    }
  }

  std::vector<std::size_t> rest(unselected.begin(), unselected.end());
  rest = ReferenceShuffle(rest, KeyedStream(seed, static_cast<std::uint64_t>(K + 1), 0));
  std::size_t next = 0;
  for (int t = 1; t <= T; ++t) {
    while (static_cast<std::int64_t>(S[t].size()) < n[t - 1]) S[t].insert(rest[next++]);
  }

  ReferenceOutcome out;
  out.merged.assign(d, 0);
  out.owner.assign(d, 0);
  out.provenance.assign(d, 0);
  for (int t = 1; t <= T; ++t) {
    for (std::size_t p : S[t]) {
      out.merged[p - 1] = tau[t - 1][p - 1];
      out.owner[p - 1] = t;
      out.provenance[p - 1] = provenance[p];
    }
  }
  return out;
}

}  // namespace tvmerge::testing

#endif  // TVMERGE_TESTS_REFERENCE_MERGE_HPP_
