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

#include "tvmerge/preference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tvmerge/error.hpp"

namespace tvmerge {

std::int64_t PreferenceVector::sum() const {
  return std::accumulate(budgets.begin(), budgets.end(), std::int64_t{0});
}

std::string PreferenceReport::message() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out;
}

PreferenceVector AllocateByWeights(std::span<const double> weights, std::uint64_t d) {
  if (weights.empty()) Fail(ErrorKind::kValidation, "no tasks");
  if (d < 1) Fail(ErrorKind::kValidation, "d must be positive");
  long double total = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) {
      Fail(ErrorKind::kValidation, "negative score");
    }
    total += w;
  }
  if (!(total > 0)) Fail(ErrorKind::kNumeric, "all-zero similarities");

  const auto dd = static_cast<long double>(d);
  PreferenceVector pref;
  pref.budgets.reserve(weights.size());
  std::uint64_t assigned = 0;
  for (double w : weights) {
    long double share = std::floor(static_cast<long double>(w) / total * dd);
    share = std::clamp<long double>(share, 0, dd);
    const auto n = static_cast<std::uint64_t>(share);
    pref.budgets.push_back(static_cast<std::int64_t>(n));
    assigned += n;
  }
  if (assigned > d) Fail(ErrorKind::kNumeric, "allocation exceeds d");

  // Exact arithmetic gives R < T; the wrap-around only absorbs rounding.
  std::uint64_t remainder = d - assigned;
  for (std::size_t t = 0; remainder > 0; t = (t + 1) % weights.size(), --remainder) {
    ++pref.budgets[t];
  }
  return pref;
}

PreferenceVector PreferenceFromSimilarities(const SimilarityVector& s, std::uint64_t d) {
  return AllocateByWeights(s.scores, d);
}

PreferenceVector PreferenceFromAlpha(const AlphaSchedule& schedule) {
  if (schedule.tasks < 1) Fail(ErrorKind::kValidation, "T must be at least 1");
  if (schedule.d < 1) Fail(ErrorKind::kValidation, "d must be positive");
  if (!(schedule.alpha >= 0) || std::isnan(schedule.alpha)) {
    Fail(ErrorKind::kValidation, "alpha must be non-negative");
  }
  const auto T = static_cast<std::size_t>(schedule.tasks);
  if (schedule.alpha == 0) {
    PreferenceVector pref;
    pref.budgets.assign(T, 0);
    pref.budgets.back() = static_cast<std::int64_t>(schedule.d);
    return pref;
  }

  const double alpha = std::min(schedule.alpha, kMaxAlpha);
  const long double log_alpha = std::log(static_cast<long double>(alpha));
  // Exponent of the largest weight; weights are rescaled so it becomes 1.
  const std::size_t top = log_alpha > 0 ? T - 1 : 0;
  const bool direct = std::abs(log_alpha) * static_cast<long double>(T - 1) < 10000;
  std::vector<double> weights(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t exponent = T - 1 - t;
    if (direct) {
      // Exact for small integer α, which keeps hand-checked schedules stable.
      const auto a = static_cast<long double>(alpha);
      weights[t] = static_cast<double>(std::pow(a, static_cast<long double>(exponent)) /
                                       std::pow(a, static_cast<long double>(top)));
    } else {
      const long double shift = static_cast<long double>(exponent) - static_cast<long double>(top);
      weights[t] = static_cast<double>(std::exp(log_alpha * shift));
    }
  }
  return AllocateByWeights(weights, schedule.d);
}

PreferenceReport ValidatePreference(const PreferenceVector& pref, std::uint64_t d) {
  PreferenceReport report;
  if (pref.budgets.empty()) report.violations.push_back("empty preference vector");
  for (std::size_t t = 0; t < pref.budgets.size(); ++t) {
    if (pref.budgets[t] < 0) {
      report.violations.push_back("negative budget at task " + std::to_string(t + 1));
    }
  }
  const std::int64_t sum = pref.sum();
  if (sum != static_cast<std::int64_t>(d)) {
    report.violations.push_back("sum " + std::to_string(sum) + " ≠ " + std::to_string(d));
  }
  return report;
}

}  // namespace tvmerge
