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

// Synthetic continual-learning suites.
//
// Each task is a noiseless (or noisy) linear least-squares problem whose
// design matrix is non-zero only on the task's support columns, so its loss
// depends only on those coordinates. "Fine-tuning" task t replaces the
// support coordinates of θ_{t−1} by the closed-form least-squares optimum
// and multiplies every other coordinate by `retention` (1 = keep as is).

#ifndef TVMERGE_SYNTH_HPP_
#define TVMERGE_SYNTH_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tvmerge/similarity.hpp"
#include "tvmerge/tensor_container.hpp"

namespace tvmerge {

enum class SupportMode { kDisjoint, kOverlapping };

struct SuiteConfig {
  int tasks = 4;
  std::size_t dim = 32;
  SupportMode support_mode = SupportMode::kDisjoint;
  // Coordinates shared by adjacent tasks in overlapping mode.
  std::size_t overlap = 2;
  std::size_t samples_per_task = 64;
  double noise_std = 0;
  double retention = 1.0;
  std::size_t embedding_dim = 8;
  std::size_t classes_per_task = 4;
  double embedding_noise = 0.05;
  std::uint64_t seed = 0;
};

struct SyntheticTask {
  int id = 0;  // 0-based
  std::vector<std::size_t> support;  // ascending flat indices
  Eigen::MatrixXd design;            // m × d, zero off the support
  Eigen::VectorXd targets;           // m
  Eigen::VectorXd optimum;           // d, f32-representable, 0 off the support
  std::vector<int> labels;           // m class ids
  Eigen::MatrixXd embeddings;        // m × embedding_dim
};

struct TaskSuite {
  SuiteConfig config;
  std::vector<SyntheticTask> tasks;
  ParameterSet theta0;            // one tensor "theta" of dims [d], all zero
  Eigen::MatrixXd class_centers;  // (T · classes_per_task) × embedding_dim
};

// Support layout only. Disjoint: consecutive blocks of width ceil(d/T).
// Overlapping: the same blocks widened by overlap/2 on the left and the rest
// of `overlap` on the right, clipped to [0, d).
std::vector<std::vector<std::size_t>> TaskSupports(int tasks, std::size_t dim, SupportMode mode,
                                                   std::size_t overlap);

TaskSuite GenerateTaskSuite(const SuiteConfig& config);

// θ_1..θ_T, each a ParameterSet shaped like suite.theta0.
std::vector<ParameterSet> SequentialFinetune(const TaskSuite& suite);

std::vector<TaskVector> TaskVectors(std::span<const ParameterSet> thetas,
                                    const ParameterSet& theta0);

// floor(w_j · N) plus one unit to each of the largest fractional parts,
// ties to the lower index.
std::vector<std::size_t> LargestRemainderCounts(std::span<const double> weights,
                                                std::size_t total);

struct EnvironmentConfig {
  std::vector<int> members;  // 0-based task ids
  std::vector<double> mix;
  std::size_t samples = 1000;
  double meta_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct TargetEnvironment {
  std::vector<int> members;
  std::vector<double> mix;
  std::vector<std::size_t> counts;       // per member, meta + eval
  std::vector<std::size_t> meta_counts;  // per member
  std::vector<int> meta_tasks;
  std::vector<int> meta_labels;
  Eigen::MatrixXd meta_embeddings;
  std::vector<int> eval_tasks;
  std::vector<int> eval_labels;
  Eigen::MatrixXd eval_embeddings;

  std::size_t eval_count(std::size_t member) const { return counts[member] - meta_counts[member]; }
  LabelHistogram meta_histogram() const;
  EmbeddingSet meta_embedding_set() const;
};

TargetEnvironment MixTargetEnvironment(const TaskSuite& suite, const EnvironmentConfig& config);

struct Evaluation {
  std::vector<double> task_losses;  // mean squared error per task
  std::optional<double> environment_loss;
};

double TaskLoss(const SyntheticTask& task, const ParameterSet& theta);

Evaluation Evaluate(const ParameterSet& theta, const TaskSuite& suite,
                    const TargetEnvironment* env = nullptr);

// Per-task inputs for similarity computations.
LabelHistogram TaskHistogram(const SyntheticTask& task);
EmbeddingSet TaskEmbeddings(const SyntheticTask& task);

}  // namespace tvmerge

#endif  // TVMERGE_SYNTH_HPP_
