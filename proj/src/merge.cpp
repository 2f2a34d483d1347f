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

#include <cmath>
#include <limits>

#include "tvmerge/error.hpp"
#include "tvmerge/parallel.hpp"
#include "tvmerge/rng.hpp"

namespace tvmerge {
namespace {

constexpr std::size_t kMinChunk = 4096;
constexpr std::uint16_t kUnassigned = std::numeric_limits<std::uint16_t>::max();

// Stream label for per-element draws of the random-mix baseline; keeps its
// keys disjoint from the (round, task) labels of the tunable merge.
constexpr std::uint64_t kRandomMixLabel = 0x52414E444D495846ull;

std::vector<std::span<const float>> FlatViews(std::span<const TaskVector> taus) {
  std::vector<std::span<const float>> views;
  views.reserve(taus.size());
  for (const auto& tau : taus) views.push_back(tau.flat());
  return views;
}

TaskVector Gather(std::span<const TaskVector> taus, const Assignment& assignment) {
  TaskVector merged(taus.front().zeros_like());
  auto out = merged.flat();
  const auto views = FlatViews(taus);
  ParallelChunks(out.size(), kMinChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) out[p] = views[assignment.owner[p]][p];
  });
  return merged;
}

// True when task `t` attains the largest magnitude among tasks 0..t at
// element p, later tasks winning ties.
inline bool WinsPrefix(const std::vector<std::span<const float>>& views, std::size_t t,
                       std::size_t p) {
  const float mag = std::fabs(views[t][p]);
  for (std::size_t u = 0; u < t; ++u) {
    if (std::fabs(views[u][p]) > mag) return false;
  }
  return true;
}

// Candidates of task t among `unselected`, in ascending flat-index order.
std::vector<std::size_t> ScanCandidates(const std::vector<std::span<const float>>& views,
                                        std::size_t t,
                                        const std::vector<std::size_t>& unselected) {
  const std::size_t chunks = ChunkCount(unselected.size(), kMinChunk);
  std::vector<std::vector<std::size_t>> partial(chunks);
  ParallelChunks(unselected.size(), kMinChunk,
                 [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                   auto& local = partial[chunk];
                   for (std::size_t i = begin; i < end; ++i) {
                     const std::size_t p = unselected[i];
                     if (WinsPrefix(views, t, p)) local.push_back(p);
                   }
                 });
  std::vector<std::size_t> out;
  for (auto& local : partial) out.insert(out.end(), local.begin(), local.end());
  return out;
}

}  // namespace

std::optional<MergeMethod> ParseMergeMethod(std::string_view name) {
  if (name == "magmax") return MergeMethod::kMagmax;
  if (name == "tunable") return MergeMethod::kTunable;
  if (name == "average") return MergeMethod::kAverage;
  if (name == "randmix" || name == "random_mix") return MergeMethod::kRandomMix;
  return std::nullopt;
}

std::string_view MergeMethodName(MergeMethod method) {
  switch (method) {
    case MergeMethod::kMagmax:
      return "magmax";
    case MergeMethod::kTunable:
      return "tunable";
    case MergeMethod::kAverage:
      return "average";
    case MergeMethod::kRandomMix:
      return "randmix";
  }
  return "unknown";
}

std::size_t RequireCompatibleTasks(std::span<const TaskVector> taus) {
  if (taus.empty()) Fail(ErrorKind::kValidation, "empty task list");
  if (taus.size() >= kUnassigned) Fail(ErrorKind::kValidation, "too many tasks");
  for (const auto& tau : taus.subspan(1)) RequireShapeCompatible(taus.front(), tau);
  if (taus.front().size() == 0) Fail(ErrorKind::kValidation, "empty task vector");
  return taus.front().size();
}

MergeResult MagmaxMerge(std::span<const TaskVector> taus, TieRule) {
  const std::size_t d = RequireCompatibleTasks(taus);
  const auto views = FlatViews(taus);
  Assignment assignment;
  assignment.owner.resize(d);
  assignment.provenance.assign(d, 1);
  ParallelChunks(d, kMinChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      std::size_t best = 0;
      float best_mag = std::fabs(views[0][p]);
      for (std::size_t t = 1; t < views.size(); ++t) {
        const float mag = std::fabs(views[t][p]);
        if (mag >= best_mag) {
          best = t;
          best_mag = mag;
        }
      }
      assignment.owner[p] = static_cast<std::uint16_t>(best);
    }
  });
  TaskVector merged = Gather(taus, assignment);
  return {std::move(merged), std::move(assignment)};
}

MergeResult TunableMerge(std::span<const TaskVector> taus, const PreferenceVector& pref,
                         const MergeConfig& config) {
  const std::size_t d = RequireCompatibleTasks(taus);
  const std::size_t T = taus.size();
  if (config.rounds < 1) Fail(ErrorKind::kValidation, "rounds must be at least 1");
  if (pref.task_count() != T) {
    Fail(ErrorKind::kValidation, "preference vector has " + std::to_string(pref.task_count()) +
                                     " entries for " + std::to_string(T) + " tasks");
  }
  if (const auto report = ValidatePreference(pref, d); !report.ok()) {
    Fail(ErrorKind::kValidation, report.message());
  }

  const auto views = FlatViews(taus);
  Assignment assignment;
  assignment.owner.assign(d, kUnassigned);
  assignment.provenance.assign(d, kResidualProvenance);
  std::vector<std::size_t> filled(T, 0);
  auto budget = [&](std::size_t t) { return static_cast<std::size_t>(pref.budgets[t]); };

  std::vector<std::size_t> unselected(d);
  for (std::size_t p = 0; p < d; ++p) unselected[p] = p;

  const auto rounds = static_cast<std::size_t>(config.rounds);
  for (std::size_t k = 1; k <= rounds && !unselected.empty(); ++k) {
    for (std::size_t t = T; t-- > 0;) {
      if (filled[t] >= budget(t)) continue;
      std::vector<std::size_t> candidates = ScanCandidates(views, t, unselected);
      if (candidates.empty()) continue;
      const std::size_t room = budget(t) - filled[t];
      std::size_t take = candidates.size();
      if (take > room) {
        KeyedStream stream(config.seed, k, t + 1);
        ShufflePrefix(std::span<std::size_t>(candidates), room, stream);
        take = room;
      }
      for (std::size_t i = 0; i < take; ++i) {
        assignment.owner[candidates[i]] = static_cast<std::uint16_t>(t);
        assignment.provenance[candidates[i]] = static_cast<std::uint16_t>(k);
      }
      filled[t] += take;
      std::erase_if(unselected, [&](std::size_t p) { return assignment.owner[p] != kUnassigned; });
    }
  }

  // Residual: one shuffle of what is left, dealt out to deficit tasks in
  // ascending task order.
  KeyedStream stream(config.seed, rounds + 1, 0);
  Shuffle(std::span<std::size_t>(unselected), stream);
  std::size_t next = 0;
  for (std::size_t t = 0; t < T; ++t) {
    for (; filled[t] < budget(t); ++filled[t]) {
      assignment.owner[unselected[next++]] = static_cast<std::uint16_t>(t);
    }
  }
  if (next != unselected.size()) Fail(ErrorKind::kValidation, "budget accounting failure");

  TaskVector merged = Gather(taus, assignment);
  return {std::move(merged), std::move(assignment)};
}

TaskVector AverageMerge(std::span<const TaskVector> taus) {
  const std::size_t d = RequireCompatibleTasks(taus);
  const auto views = FlatViews(taus);
  TaskVector merged(taus.front().zeros_like());
  auto out = merged.flat();
  const double scale = 1.0 / static_cast<double>(taus.size());
  ParallelChunks(d, kMinChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double acc = 0;
      for (const auto& view : views) acc += view[p];
      out[p] = static_cast<float>(acc * scale);
    }
  });
  return merged;
}

MergeResult RandomMixMerge(std::span<const TaskVector> taus, std::uint64_t seed) {
  const std::size_t d = RequireCompatibleTasks(taus);
  Assignment assignment;
  assignment.owner.resize(d);
  assignment.provenance.assign(d, kResidualProvenance);
  const std::uint64_t T = taus.size();
  ParallelChunks(d, kMinChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      KeyedStream stream(seed, kRandomMixLabel, p);
      assignment.owner[p] = static_cast<std::uint16_t>(stream.Uniform(T));
    }
  });
  TaskVector merged = Gather(taus, assignment);
  return {std::move(merged), std::move(assignment)};
}

std::vector<std::uint64_t> AssignmentCensus(const Assignment& assignment,
                                            std::size_t task_count) {
  std::vector<std::uint64_t> counts(task_count, 0);
  for (std::uint16_t owner : assignment.owner) {
    if (owner >= task_count) {
      Fail(ErrorKind::kValidation, "owner " + std::to_string(owner + 1) + " out of range");
    }
    ++counts[owner];
  }
  return counts;
}

double ResidualFraction(const Assignment& assignment) {
  if (assignment.provenance.empty()) return 0;
  std::size_t residual = 0;
  for (std::uint16_t prov : assignment.provenance) residual += prov == kResidualProvenance;
  return static_cast<double>(residual) / static_cast<double>(assignment.provenance.size());
}

OwnerMapFile ToOwnerMap(const Assignment& assignment) {
  OwnerMapFile map;
  map.owner.reserve(assignment.owner.size());
  for (std::uint16_t owner : assignment.owner) {
    map.owner.push_back(static_cast<std::uint16_t>(owner + 1));
  }
  map.provenance = assignment.provenance;
  return map;
}

Assignment FromOwnerMap(const OwnerMapFile& map) {
  Assignment assignment;
  assignment.owner.reserve(map.owner.size());
  for (std::uint16_t owner : map.owner) {
    if (owner == 0) Fail(ErrorKind::kValidation, "owner 0 out of range");
    assignment.owner.push_back(static_cast<std::uint16_t>(owner - 1));
  }
  assignment.provenance = map.provenance;
  return assignment;
}

}  // namespace tvmerge
