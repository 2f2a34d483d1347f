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

#include "tvmerge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "tvmerge/error.hpp"
#include "tvmerge/parallel.hpp"
#include "tvmerge/rng.hpp"

namespace tvmerge {
namespace {

// Stream labels, one per generated quantity.
enum StreamLabel : std::uint64_t {
  kDesignStream = 1,
  kOptimumStream,
  kNoiseStream,
  kLabelStream,
  kEmbeddingStream,
  kCenterStream,
  kEnvironmentStream,
};

class Gaussian {
 public:
  explicit Gaussian(KeyedStream stream) : stream_(stream) {}

  // Box-Muller on the keyed stream; portable across standard libraries.
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - stream_.UniformReal();
    const double u2 = stream_.UniformReal();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  KeyedStream stream_;
  double spare_ = 0;
  bool has_spare_ = false;
};

int SampleLabel(const TaskSuite& suite, int task, KeyedStream& stream) {
  const auto c = suite.config.classes_per_task;
  return task * static_cast<int>(c) + static_cast<int>(stream.Uniform(c));
}

Eigen::VectorXd SampleEmbedding(const TaskSuite& suite, int label, Gaussian& noise) {
  Eigen::VectorXd e = suite.class_centers.row(label).transpose();
  for (Eigen::Index k = 0; k < e.size(); ++k) e(k) += suite.config.embedding_noise * noise();
  return e;
}

Eigen::VectorXd ToVector(const ParameterSet& theta) {
  const auto flat = theta.flat();
  Eigen::VectorXd v(static_cast<Eigen::Index>(flat.size()));
  for (std::size_t p = 0; p < flat.size(); ++p) v(static_cast<Eigen::Index>(p)) = flat[p];
  return v;
}

}  // namespace

std::vector<std::vector<std::size_t>> TaskSupports(int tasks, std::size_t dim, SupportMode mode,
                                                   std::size_t overlap) {
  if (tasks < 1) Fail(ErrorKind::kValidation, "T must be at least 1");
  if (dim < 1) Fail(ErrorKind::kValidation, "d must be positive");
  const auto T = static_cast<std::size_t>(tasks);
  const std::size_t width = (dim + T - 1) / T;
  if ((T - 1) * width >= dim) Fail(ErrorKind::kValidation, "infeasible support partition");

  const std::size_t left = mode == SupportMode::kOverlapping ? overlap / 2 : 0;
  const std::size_t right = mode == SupportMode::kOverlapping ? overlap - overlap / 2 : 0;
  std::vector<std::vector<std::size_t>> supports(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t begin = t * width;
    const std::size_t end = std::min(dim, begin + width);
    const std::size_t lo = begin >= left ? begin - left : 0;
    const std::size_t hi = std::min(dim, end + right);
    for (std::size_t p = lo; p < hi; ++p) supports[t].push_back(p);
  }
  return supports;
}

TaskSuite GenerateTaskSuite(const SuiteConfig& config) {
  if (config.classes_per_task < 1 || config.embedding_dim < 1) {
    Fail(ErrorKind::kValidation, "classes_per_task and embedding_dim must be positive");
  }
  if (!(config.retention > 0 && config.retention <= 1)) {
    Fail(ErrorKind::kValidation, "retention must lie in (0, 1]");
  }
  if (!(config.noise_std >= 0)) Fail(ErrorKind::kValidation, "noise_std must be non-negative");

  TaskSuite suite;
  suite.config = config;
  const auto supports =
      TaskSupports(config.tasks, config.dim, config.support_mode, config.overlap);
  const auto d = static_cast<Eigen::Index>(config.dim);
  const auto m = static_cast<Eigen::Index>(config.samples_per_task);

  const std::vector<float> zeros(config.dim, 0.0f);
  suite.theta0.add("theta", {config.dim}, zeros);

  const auto classes = static_cast<Eigen::Index>(config.classes_per_task) * config.tasks;
  suite.class_centers.resize(classes, static_cast<Eigen::Index>(config.embedding_dim));
  for (Eigen::Index c = 0; c < classes; ++c) {
    KeyedStream stream(config.seed, kCenterStream, static_cast<std::uint64_t>(c));
    for (Eigen::Index k = 0; k < suite.class_centers.cols(); ++k) {
      suite.class_centers(c, k) = stream.UniformReal() - 0.5;
    }
  }

  for (int t = 0; t < config.tasks; ++t) {
    SyntheticTask task;
    task.id = t;
    task.support = supports[static_cast<std::size_t>(t)];
    const auto s = static_cast<Eigen::Index>(task.support.size());
    if (m < s) Fail(ErrorKind::kValidation, "samples_per_task must cover the support size");
    const auto ut = static_cast<std::uint64_t>(t);

    // Scaled orthonormal columns keep every per-coordinate error visible at
    // the same weight and the normal equations well conditioned.
    Gaussian gauss(KeyedStream(config.seed, kDesignStream, ut));
    Eigen::MatrixXd raw(m, s);
    for (Eigen::Index j = 0; j < s; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) raw(i, j) = gauss();
    }
    const Eigen::MatrixXd q =
        Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() * Eigen::MatrixXd::Identity(m, s);
    task.design = Eigen::MatrixXd::Zero(m, d);
    for (Eigen::Index j = 0; j < s; ++j) {
      task.design.col(static_cast<Eigen::Index>(task.support[static_cast<std::size_t>(j)])) =
          q.col(j) * std::sqrt(static_cast<double>(m));
    }

    KeyedStream opt(config.seed, kOptimumStream, ut);
    task.optimum = Eigen::VectorXd::Zero(d);
    for (std::size_t p : task.support) {
      const double magnitude = 0.5 + opt.UniformReal();
      const double sign = opt.Uniform(2) == 0 ? -1.0 : 1.0;
      task.optimum(static_cast<Eigen::Index>(p)) = static_cast<float>(sign * magnitude);
    }

    task.targets = task.design * task.optimum;
    if (config.noise_std > 0) {
      Gaussian noise(KeyedStream(config.seed, kNoiseStream, ut));
      for (Eigen::Index i = 0; i < m; ++i) task.targets(i) += config.noise_std * noise();
    }

    KeyedStream label_stream(config.seed, kLabelStream, ut);
    Gaussian embed_noise(KeyedStream(config.seed, kEmbeddingStream, ut));
    task.embeddings.resize(m, static_cast<Eigen::Index>(config.embedding_dim));
    for (Eigen::Index i = 0; i < m; ++i) {
      const int label = SampleLabel(suite, t, label_stream);
      task.labels.push_back(label);
      task.embeddings.row(i) = SampleEmbedding(suite, label, embed_noise).transpose();
    }
    suite.tasks.push_back(std::move(task));
  }
  return suite;
}

std::vector<ParameterSet> SequentialFinetune(const TaskSuite& suite) {
  std::vector<ParameterSet> thetas;
  ParameterSet current = suite.theta0;
  const auto retention = static_cast<float>(suite.config.retention);
  for (const auto& task : suite.tasks) {
    const auto s = static_cast<Eigen::Index>(task.support.size());
    Eigen::MatrixXd restricted(task.design.rows(), s);
    for (Eigen::Index j = 0; j < s; ++j) {
      restricted.col(j) =
          task.design.col(static_cast<Eigen::Index>(task.support[static_cast<std::size_t>(j)]));
    }
    const auto qr = restricted.colPivHouseholderQr();
    if (qr.rank() < s) Fail(ErrorKind::kNumeric, "singular restricted normal equations");
    const Eigen::VectorXd solution = qr.solve(task.targets);

    auto flat = current.flat();
    if (retention != 1.0f) {
      for (float& v : flat) v *= retention;
    }
    for (Eigen::Index j = 0; j < s; ++j) {
      flat[task.support[static_cast<std::size_t>(j)]] = static_cast<float>(solution(j));
    }
    thetas.push_back(current);
  }
  return thetas;
}

std::vector<TaskVector> TaskVectors(std::span<const ParameterSet> thetas,
                                    const ParameterSet& theta0) {
  std::vector<TaskVector> taus;
  taus.reserve(thetas.size());
  for (const auto& theta : thetas) taus.push_back(ComputeTaskVector(theta, theta0));
  return taus;
}

std::vector<std::size_t> LargestRemainderCounts(std::span<const double> weights,
                                                std::size_t total) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<double> fractions(weights.size());
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double exact = weights[j] * static_cast<double>(total);
    counts[j] = static_cast<std::size_t>(std::floor(exact));
    fractions[j] = exact - std::floor(exact);
    assigned += counts[j];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fractions[a] > fractions[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size(), ++assigned) {
    ++counts[order[i]];
  }
  return counts;
}

LabelHistogram TargetEnvironment::meta_histogram() const {
  return LabelHistogram::FromLabels(meta_labels);
}

EmbeddingSet TargetEnvironment::meta_embedding_set() const {
  return EmbeddingSet{meta_embeddings, "meta"};
}

TargetEnvironment MixTargetEnvironment(const TaskSuite& suite, const EnvironmentConfig& config) {
  const std::size_t members = config.members.size();
  if (members == 0) Fail(ErrorKind::kValidation, "environment needs at least one member task");
  if (config.mix.size() != members) {
    Fail(ErrorKind::kValidation, "mixing ratio length does not match member count");
  }
  for (int id : config.members) {
    if (id < 0 || id >= static_cast<int>(suite.tasks.size())) {
      Fail(ErrorKind::kValidation, "member task id out of range");
    }
  }
  double sum = 0;
  for (double a : config.mix) {
    if (!(a >= 0)) Fail(ErrorKind::kValidation, "mixing ratio entries must be non-negative");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-9) Fail(ErrorKind::kValidation, "ratio not summing to 1");
  if (config.samples < members) Fail(ErrorKind::kValidation, "N_total must be at least M");
  if (!(config.meta_fraction >= 0 && config.meta_fraction <= 1)) {
    Fail(ErrorKind::kValidation, "meta_fraction must lie in [0, 1]");
  }

  TargetEnvironment env;
  env.members = config.members;
  env.mix = config.mix;
  env.counts = LargestRemainderCounts(config.mix, config.samples);

  // Stratified meta split: the meta total is apportioned like the samples.
  const auto meta_total = static_cast<std::size_t>(
      std::llround(config.meta_fraction * static_cast<double>(config.samples)));
  std::vector<double> shares(members);
  for (std::size_t j = 0; j < members; ++j) {
    shares[j] = static_cast<double>(env.counts[j]) / static_cast<double>(config.samples);
  }
  env.meta_counts = LargestRemainderCounts(shares, meta_total);
  for (std::size_t j = 0; j < members; ++j) {
    env.meta_counts[j] = std::min(env.meta_counts[j], env.counts[j]);
  }

  const auto dim = static_cast<Eigen::Index>(suite.config.embedding_dim);
  std::vector<Eigen::VectorXd> meta_rows;
  std::vector<Eigen::VectorXd> eval_rows;
  for (std::size_t j = 0; j < members; ++j) {
    const int task = config.members[j];
    KeyedStream labels(config.seed, kEnvironmentStream, 2 * j);
    Gaussian noise(KeyedStream(config.seed, kEnvironmentStream, 2 * j + 1));
    for (std::size_t i = 0; i < env.counts[j]; ++i) {
      const int label = SampleLabel(suite, task, labels);
      Eigen::VectorXd e = SampleEmbedding(suite, label, noise);
      if (i < env.meta_counts[j]) {
        env.meta_tasks.push_back(task);
        env.meta_labels.push_back(label);
        meta_rows.push_back(std::move(e));
      } else {
        env.eval_tasks.push_back(task);
        env.eval_labels.push_back(label);
        eval_rows.push_back(std::move(e));
      }
    }
  }
  auto stack = [dim](const std::vector<Eigen::VectorXd>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return out;
  };
  env.meta_embeddings = stack(meta_rows);
  env.eval_embeddings = stack(eval_rows);
  return env;
}

double TaskLoss(const SyntheticTask& task, const ParameterSet& theta) {
  const Eigen::VectorXd v = ToVector(theta);
  if (v.size() != task.design.cols()) Fail(ErrorKind::kValidation, "shape mismatch");
  const Eigen::VectorXd residual = task.design * v - task.targets;
  return residual.squaredNorm() / static_cast<double>(task.design.rows());
}

Evaluation Evaluate(const ParameterSet& theta, const TaskSuite& suite,
                    const TargetEnvironment* env) {
  RequireShapeCompatible(theta, suite.theta0);
  Evaluation out;
  out.task_losses.resize(suite.tasks.size());
  ParallelChunks(suite.tasks.size(), 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) out.task_losses[t] = TaskLoss(suite.tasks[t], theta);
  });
  if (env != nullptr) {
    double weighted = 0;
    std::size_t total = 0;
    for (std::size_t j = 0; j < env->members.size(); ++j) {
      const std::size_t n = env->eval_count(j);
      weighted += static_cast<double>(n) *
                  out.task_losses[static_cast<std::size_t>(env->members[j])];
      total += n;
    }
    out.environment_loss = total > 0 ? weighted / static_cast<double>(total) : 0.0;
  }
  return out;
}

LabelHistogram TaskHistogram(const SyntheticTask& task) {
  return LabelHistogram::FromLabels(task.labels);
}

EmbeddingSet TaskEmbeddings(const SyntheticTask& task) {
  return EmbeddingSet{task.embeddings, "task" + std::to_string(task.id + 1)};
}

}  // namespace tvmerge
