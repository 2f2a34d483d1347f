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

// Preference vectors: per-task element budgets that sum to d.

#ifndef TVMERGE_PREFERENCE_HPP_
#define TVMERGE_PREFERENCE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tvmerge {

struct PreferenceVector {
  // Signed so that invalid (negative) budgets read from files can be
  // reported rather than silently wrapped.
  std::vector<std::int64_t> budgets;

  std::size_t task_count() const { return budgets.size(); }
  std::int64_t sum() const;

  friend bool operator==(const PreferenceVector&, const PreferenceVector&) = default;
};

struct SimilarityVector {
  std::vector<double> scores;
};

struct AlphaSchedule {
  double alpha = 1.0;
  int tasks = 1;
  std::uint64_t d = 1;
};

// Largest α honoured; larger values are clamped.
inline constexpr double kMaxAlpha = 1e6;

struct PreferenceReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string message() const;
};

// n̄_t = floor(s_t / Σs · d), remainder R = d − Σn̄ handed one unit each to
// the first R tasks.
PreferenceVector PreferenceFromSimilarities(const SimilarityVector& s,
                                            std::uint64_t d);

// Weights α^(T−t); α = 0 puts the whole budget on the last task.
PreferenceVector PreferenceFromAlpha(const AlphaSchedule& schedule);

PreferenceReport ValidatePreference(const PreferenceVector& pref, std::uint64_t d);

// Floor-plus-remainder allocation of d over normalized weights. Exposed for
// reuse; `weights` must be non-negative with a positive sum.
PreferenceVector AllocateByWeights(std::span<const double> weights, std::uint64_t d);

}  // namespace tvmerge

#endif  // TVMERGE_PREFERENCE_HPP_
