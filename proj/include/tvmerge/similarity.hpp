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

// Dataset similarity between a training task and meta data from the target
// environment.

#ifndef TVMERGE_SIMILARITY_HPP_
#define TVMERGE_SIMILARITY_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tvmerge/preference.hpp"
#include "tvmerge/tensor_container.hpp"

namespace tvmerge {

// One row per sample.
struct EmbeddingSet {
  Eigen::MatrixXd vectors;
  std::string source;

  Eigen::Index samples() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
};

// Reads the N×D tensor "emb" out of a parameter container.
EmbeddingSet EmbeddingsFromContainer(const ParameterSet& pset, std::string source = {});
ParameterSet EmbeddingsToContainer(const EmbeddingSet& emb);

class LabelHistogram {
 public:
  LabelHistogram() = default;
  explicit LabelHistogram(std::map<std::string, std::uint64_t> counts);

  static LabelHistogram FromLabels(std::span<const std::string> labels);
  static LabelHistogram FromLabels(std::span<const int> labels);

  const std::map<std::string, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }

  // Empirical frequency r_c; 0 for classes never seen.
  double frequency(const std::string& label) const;

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct OtConfig {
  double epsilon = 1e-2;  // relative to the mean ground cost
  int max_iters = 1000;
  double tol = 1e-9;      // L1 marginal violation
  double gamma = 100;     // similarity = exp(−γ·cost)
};

struct OtResult {
  double cost = 0;  // ⟨P, C⟩ without the entropy term
  bool converged = false;
  int iterations = 0;
  double marginal_error = 0;
};

// Entropic OT between uniform empirical measures under squared Euclidean
// cost, solved by log-domain Sinkhorn iterations.
OtResult SinkhornOt(const EmbeddingSet& x, const EmbeddingSet& y, const OtConfig& cfg = {});

// exp(−γ·cost), clamped below at the smallest positive normal double.
double OtSimilarity(const EmbeddingSet& x, const EmbeddingSet& y, const OtConfig& cfg = {});

// Σ over classes present in `meta` of r_c(task)·r_c(meta).
double LabelSimilarity(const LabelHistogram& task, const LabelHistogram& meta);

// 1 − cos(mean(X), mean(Y)).
double CosineMeanDistance(const EmbeddingSet& x, const EmbeddingSet& y);

// Median pairwise Euclidean distance over X ∪ Y (1 when degenerate).
double MedianHeuristicBandwidth(const EmbeddingSet& x, const EmbeddingSet& y);

// sqrt of the biased MMD² under k(a,b) = exp(−‖a−b‖² / (2σ²)).
double MmdRbf(const EmbeddingSet& x, const EmbeddingSet& y,
              std::optional<double> bandwidth = std::nullopt);

enum class SimilarityMetric { kOt, kLabel, kCos, kMmd };

std::optional<SimilarityMetric> ParseSimilarityMetric(std::string_view name);
std::string_view SimilarityMetricName(SimilarityMetric metric);

struct SimilarityConfig {
  OtConfig ot;
  double gamma_cos = 10;
  double gamma_mmd = 10;
  std::optional<double> mmd_bandwidth;
};

using SimilarityInput = std::variant<EmbeddingSet, LabelHistogram>;

// s_t = sim(task_t, meta_t). `meta` holds either one input shared by every
// task or one input per task (meta data embedded by each task's encoder).
SimilarityVector ComputeSimilarityVector(std::span<const SimilarityInput> tasks,
                                         std::span<const SimilarityInput> meta,
                                         SimilarityMetric metric,
                                         const SimilarityConfig& cfg = {});

}  // namespace tvmerge

#endif  // TVMERGE_SIMILARITY_HPP_
