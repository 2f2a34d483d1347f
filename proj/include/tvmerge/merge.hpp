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

// Task-vector merging.
//
// Tasks are indexed 0..T-1 in training order throughout the C++ API. Files
// and reports use 1-based task ids.

#ifndef TVMERGE_MERGE_HPP_
#define TVMERGE_MERGE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tvmerge/preference.hpp"
#include "tvmerge/tensor_container.hpp"

namespace tvmerge {

enum class MergeMethod { kMagmax, kTunable, kAverage, kRandomMix };

// Argmax tie handling. Only one rule exists: among equal magnitudes the task
// trained last wins.
enum class TieRule { kLaterTaskWins };

std::optional<MergeMethod> ParseMergeMethod(std::string_view name);
std::string_view MergeMethodName(MergeMethod method);

struct MergeConfig {
  MergeMethod method = MergeMethod::kTunable;
  int rounds = 2;  // K assignment rounds
  std::uint64_t seed = 0;
  TieRule tie_rule = TieRule::kLaterTaskWins;
};

// Provenance value for elements placed by the residual random step. Round
// k assignments carry k (1-based).
inline constexpr std::uint16_t kResidualProvenance = 0;

struct Assignment {
  std::vector<std::uint16_t> owner;       // 0-based task per flat index
  std::vector<std::uint16_t> provenance;  // round k, or kResidualProvenance

  std::size_t size() const { return owner.size(); }
};

struct MergeResult {
  TaskVector merged;
  Assignment assignment;
};

// Element-wise max-magnitude merge.
MergeResult MagmaxMerge(std::span<const TaskVector> taus,
                        TieRule tie_rule = TieRule::kLaterTaskWins);

// Budgeted max-magnitude merge: task t contributes exactly pref.budgets[t]
// elements. Runs `config.rounds` selection sweeps from the last task to the
// first, then fills remaining budgets from the seeded residual shuffle.
MergeResult TunableMerge(std::span<const TaskVector> taus,
                         const PreferenceVector& pref, const MergeConfig& config);

TaskVector AverageMerge(std::span<const TaskVector> taus);

// Each element's owner drawn uniformly from the seeded stream.
MergeResult RandomMixMerge(std::span<const TaskVector> taus, std::uint64_t seed);

// counts[t] = number of elements owned by task t.
std::vector<std::uint64_t> AssignmentCensus(const Assignment& assignment,
                                            std::size_t task_count);

// Fraction of elements placed by the residual random step.
double ResidualFraction(const Assignment& assignment);

// File form of an assignment (1-based owners).
OwnerMapFile ToOwnerMap(const Assignment& assignment);
Assignment FromOwnerMap(const OwnerMapFile& map);

// Validates a non-empty, shape-compatible task list; returns d.
std::size_t RequireCompatibleTasks(std::span<const TaskVector> taus);

}  // namespace tvmerge

#endif  // TVMERGE_MERGE_HPP_
