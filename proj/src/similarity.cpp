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

#include "tvmerge/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tvmerge/error.hpp"
#include "tvmerge/parallel.hpp"

namespace tvmerge {
namespace {

void RequireFinite(const EmbeddingSet& e) {
  if (e.samples() < 1 || e.dim() < 1) Fail(ErrorKind::kValidation, "empty embedding set");
  if (!e.vectors.allFinite()) Fail(ErrorKind::kValidation, "non-finite embedding entry");
}

void RequireSameDim(const EmbeddingSet& x, const EmbeddingSet& y) {
  RequireFinite(x);
  RequireFinite(y);
  if (x.dim() != y.dim()) Fail(ErrorKind::kValidation, "dimension mismatch");
}

Eigen::MatrixXd SquaredDistances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd c(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      c(i, j) = (x.row(i) - y.row(j)).squaredNorm();
    }
  }
  return c;
}

double LogSumExp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

// Orders the pair so the computation is identical for (x, y) and (y, x).
bool RowsFirst(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows()) return x.rows() < y.rows();
  return !std::lexicographical_compare(y.data(), y.data() + y.size(), x.data(),
                                       x.data() + x.size());
}

struct SinkhornState {
  Eigen::VectorXd f;
  Eigen::VectorXd g;
};

// One pair of row/column potential updates at regularization eps.
void SinkhornStep(const Eigen::MatrixXd& cost, double eps, double log_a, double log_b,
                  SinkhornState& s) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  Eigen::VectorXd tmp(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    tmp = (s.g - cost.row(i).transpose()) / eps;
    s.f(i) = eps * (log_a - LogSumExp(tmp));
  }
  Eigen::VectorXd col(n);
  for (Eigen::Index j = 0; j < m; ++j) {
    col = (s.f - cost.col(j)) / eps;
    s.g(j) = eps * (log_b - LogSumExp(col));
  }
}

Eigen::MatrixXd Plan(const Eigen::MatrixXd& cost, double eps, const SinkhornState& s) {
  Eigen::MatrixXd plan(cost.rows(), cost.cols());
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      plan(i, j) = std::exp((s.f(i) + s.g(j) - cost(i, j)) / eps);
    }
  }
  return plan;
}

double MarginalError(const Eigen::MatrixXd& plan, double a, double b) {
  const double rows = (plan.rowwise().sum().array() - a).abs().sum();
  const double cols = (plan.colwise().sum().array() - b).abs().sum();
  return std::max(rows, cols);
}

double ExpSimilarity(double gamma, double distance) {
  const double s = std::exp(-gamma * distance);
  return std::max(s, std::numeric_limits<double>::min());
}

}  // namespace

EmbeddingSet EmbeddingsFromContainer(const ParameterSet& pset, std::string source) {
  const auto& specs = pset.specs();
  const auto it = std::find_if(specs.begin(), specs.end(),
                               [](const TensorSpec& s) { return s.name == "emb"; });
  if (it == specs.end()) Fail(ErrorKind::kValidation, "container has no 'emb' tensor");
  if (it->dims.size() != 2) Fail(ErrorKind::kValidation, "'emb' must be an N x D tensor");
  const auto rows = static_cast<Eigen::Index>(it->dims[0]);
  const auto cols = static_cast<Eigen::Index>(it->dims[1]);
  const auto values = pset.tensor("emb");
  EmbeddingSet out;
  out.source = std::move(source);
  out.vectors.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out.vectors(i, j) = values[static_cast<std::size_t>(i * cols + j)];
    }
  }
  RequireFinite(out);
  return out;
}

ParameterSet EmbeddingsToContainer(const EmbeddingSet& emb) {
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(emb.vectors.size()));
  for (Eigen::Index i = 0; i < emb.samples(); ++i) {
    for (Eigen::Index j = 0; j < emb.dim(); ++j) {
      values.push_back(static_cast<float>(emb.vectors(i, j)));
    }
  }
  ParameterSet pset;
  pset.add("emb",
           {static_cast<std::uint64_t>(emb.samples()), static_cast<std::uint64_t>(emb.dim())},
           values);
  return pset;
}

LabelHistogram::LabelHistogram(std::map<std::string, std::uint64_t> counts)
    : counts_(std::move(counts)) {
  for (const auto& [label, n] : counts_) total_ += n;
}

LabelHistogram LabelHistogram::FromLabels(std::span<const std::string> labels) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& label : labels) ++counts[label];
  return LabelHistogram(std::move(counts));
}

LabelHistogram LabelHistogram::FromLabels(std::span<const int> labels) {
  std::map<std::string, std::uint64_t> counts;
  for (int label : labels) ++counts[std::to_string(label)];
  return LabelHistogram(std::move(counts));
}

double LabelHistogram::frequency(const std::string& label) const {
  if (total_ == 0) return 0;
  const auto it = counts_.find(label);
  if (it == counts_.end()) return 0;
  return static_cast<double>(it->second) / static_cast<double>(total_);
}

OtResult SinkhornOt(const EmbeddingSet& x, const EmbeddingSet& y, const OtConfig& cfg) {
  RequireSameDim(x, y);
  if (!(cfg.epsilon > 0) || cfg.max_iters < 1 || !(cfg.tol > 0)) {
    Fail(ErrorKind::kValidation, "OT configuration values must be positive");
  }
  const bool keep = RowsFirst(x.vectors, y.vectors);
  const Eigen::MatrixXd& rows = keep ? x.vectors : y.vectors;
  const Eigen::MatrixXd& cols = keep ? y.vectors : x.vectors;

  const Eigen::MatrixXd cost = SquaredDistances(rows, cols);
  const double scale = cost.mean();
  OtResult result;
  if (scale == 0) {
    result.converged = true;
    return result;
  }
  const Eigen::MatrixXd normalized = cost / scale;
  const double a = 1.0 / static_cast<double>(rows.rows());
  const double b = 1.0 / static_cast<double>(cols.rows());
  const double log_a = std::log(a);
  const double log_b = std::log(b);

  SinkhornState state{Eigen::VectorXd::Zero(rows.rows()), Eigen::VectorXd::Zero(cols.rows())};

  // Anneal the regularization from the cost scale down to the target,
  // warm-starting each stage; the final stage runs to tolerance.
  constexpr int kStageIters = 16;
  double eps = std::max(cfg.epsilon, normalized.maxCoeff());
  while (eps > cfg.epsilon && result.iterations < cfg.max_iters) {
    for (int it = 0; it < kStageIters && result.iterations < cfg.max_iters; ++it) {
      SinkhornStep(normalized, eps, log_a, log_b, state);
      ++result.iterations;
    }
    eps = std::max(cfg.epsilon, eps * 0.5);
  }
  eps = cfg.epsilon;
  Eigen::MatrixXd plan = Plan(normalized, eps, state);
  result.marginal_error = MarginalError(plan, a, b);
  while (result.marginal_error > cfg.tol && result.iterations < cfg.max_iters) {
    SinkhornStep(normalized, eps, log_a, log_b, state);
    ++result.iterations;
    plan = Plan(normalized, eps, state);
    result.marginal_error = MarginalError(plan, a, b);
  }
  result.converged = result.marginal_error <= cfg.tol;
  result.cost = (plan.array() * cost.array()).sum();
  return result;
}

double OtSimilarity(const EmbeddingSet& x, const EmbeddingSet& y, const OtConfig& cfg) {
  return ExpSimilarity(cfg.gamma, SinkhornOt(x, y, cfg).cost);
}

double LabelSimilarity(const LabelHistogram& task, const LabelHistogram& meta) {
  if (meta.total() == 0) Fail(ErrorKind::kValidation, "empty meta histogram");
  if (task.total() == 0) Fail(ErrorKind::kValidation, "empty task histogram");
  double sum = 0;
  for (const auto& [label, n] : meta.counts()) {
    if (n == 0) continue;
    sum += task.frequency(label) * meta.frequency(label);
  }
  return sum;
}

double CosineMeanDistance(const EmbeddingSet& x, const EmbeddingSet& y) {
  RequireSameDim(x, y);
  const Eigen::VectorXd mx = x.vectors.colwise().mean();
  const Eigen::VectorXd my = y.vectors.colwise().mean();
  const double nx = mx.norm();
  const double ny = my.norm();
  if (nx == 0 || ny == 0) Fail(ErrorKind::kNumeric, "zero-norm mean");
  const double cosine = std::clamp(mx.dot(my) / (nx * ny), -1.0, 1.0);
  return 1.0 - cosine;
}

double MedianHeuristicBandwidth(const EmbeddingSet& x, const EmbeddingSet& y) {
  RequireSameDim(x, y);
  Eigen::MatrixXd pool(x.samples() + y.samples(), x.dim());
  pool << x.vectors, y.vectors;
  std::vector<double> dists;
  for (Eigen::Index i = 0; i < pool.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pool.rows(); ++j) {
      dists.push_back((pool.row(i) - pool.row(j)).norm());
    }
  }
  if (dists.empty()) return 1.0;
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(),
                                           dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median > 0 ? median : 1.0;
}

double MmdRbf(const EmbeddingSet& x, const EmbeddingSet& y, std::optional<double> bandwidth) {
  RequireSameDim(x, y);
  const double sigma = bandwidth ? *bandwidth : MedianHeuristicBandwidth(x, y);
  if (!(sigma > 0)) Fail(ErrorKind::kValidation, "bandwidth must be positive");
  const double inv = 1.0 / (2.0 * sigma * sigma);
  auto kernel_mean = [inv](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (-inv * SquaredDistances(a, b).array()).exp().mean();
  };
  const double mmd2 = kernel_mean(x.vectors, x.vectors) + kernel_mean(y.vectors, y.vectors) -
                      2.0 * kernel_mean(x.vectors, y.vectors);
  return std::sqrt(std::max(0.0, mmd2));
}

std::optional<SimilarityMetric> ParseSimilarityMetric(std::string_view name) {
  if (name == "ot") return SimilarityMetric::kOt;
  if (name == "label") return SimilarityMetric::kLabel;
  if (name == "cos") return SimilarityMetric::kCos;
  if (name == "mmd") return SimilarityMetric::kMmd;
  return std::nullopt;
}

std::string_view SimilarityMetricName(SimilarityMetric metric) {
  switch (metric) {
    case SimilarityMetric::kOt:
      return "ot";
    case SimilarityMetric::kLabel:
      return "label";
    case SimilarityMetric::kCos:
      return "cos";
    case SimilarityMetric::kMmd:
      return "mmd";
  }
  return "unknown";
}

SimilarityVector ComputeSimilarityVector(std::span<const SimilarityInput> tasks,
                                         std::span<const SimilarityInput> meta,
                                         SimilarityMetric metric, const SimilarityConfig& cfg) {
  if (tasks.empty()) Fail(ErrorKind::kValidation, "no task inputs");
  if (meta.size() != 1 && meta.size() != tasks.size()) {
    Fail(ErrorKind::kUsage, "expected one meta input or one per task");
  }
  const bool wants_labels = metric == SimilarityMetric::kLabel;
  auto check_kind = [&](const SimilarityInput& in) {
    if (std::holds_alternative<LabelHistogram>(in) != wants_labels) {
      Fail(ErrorKind::kUsage, std::string("metric '") + std::string(SimilarityMetricName(metric)) +
                                  "' does not accept this input kind");
    }
  };
  for (const auto& in : tasks) check_kind(in);
  for (const auto& in : meta) check_kind(in);

  SimilarityVector out;
  out.scores.resize(tasks.size());
  ParallelChunks(tasks.size(), 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto& m = meta.size() == 1 ? meta[0] : meta[t];
      if (wants_labels) {
        out.scores[t] = LabelSimilarity(std::get<LabelHistogram>(tasks[t]),
                                        std::get<LabelHistogram>(m));
        continue;
      }
      const auto& x = std::get<EmbeddingSet>(tasks[t]);
      const auto& y = std::get<EmbeddingSet>(m);
      switch (metric) {
        case SimilarityMetric::kOt:
          out.scores[t] = OtSimilarity(x, y, cfg.ot);
          break;
        case SimilarityMetric::kCos:
          out.scores[t] = ExpSimilarity(cfg.gamma_cos, CosineMeanDistance(x, y));
          break;
        case SimilarityMetric::kMmd:
          out.scores[t] = ExpSimilarity(cfg.gamma_mmd, MmdRbf(x, y, cfg.mmd_bandwidth));
          break;
        case SimilarityMetric::kLabel:
          break;
      }
    }
  });
  return out;
}

}  // namespace tvmerge
