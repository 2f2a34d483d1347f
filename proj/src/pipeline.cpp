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

#include "tvmerge/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "tvmerge/error.hpp"
#include "tvmerge/json_io.hpp"

namespace tvmerge {
namespace {

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

SimilarityVector PipelineSimilarity(const PipelineConfig& config, const TaskSuite& suite,
                                    const TargetEnvironment& env) {
  std::vector<SimilarityInput> tasks;
  std::vector<SimilarityInput> meta;
  if (config.metric == SimilarityMetric::kLabel) {
    for (const auto& task : suite.tasks) tasks.emplace_back(TaskHistogram(task));
    meta.emplace_back(env.meta_histogram());
  } else {
    for (const auto& task : suite.tasks) tasks.emplace_back(TaskEmbeddings(task));
    meta.emplace_back(env.meta_embedding_set());
  }
  return ComputeSimilarityVector(tasks, meta, config.metric, config.similarity);
}

PipelineRun MergeAndEvaluate(const PipelineConfig& config, const TaskSuite& suite,
                             std::span<const TaskVector> taus, const TargetEnvironment* env,
                             std::optional<PreferenceVector> pref) {
  PipelineRun run;
  TaskVector merged;
  switch (config.merge.method) {
    case MergeMethod::kTunable: {
      if (!pref) Fail(ErrorKind::kUsage, "tunable merge needs a preference source");
      auto result = TunableMerge(taus, *pref, config.merge);
      run.census = AssignmentCensus(result.assignment, taus.size());
      run.residual_fraction = ResidualFraction(result.assignment);
      merged = std::move(result.merged);
      break;
    }
    case MergeMethod::kMagmax: {
      auto result = MagmaxMerge(taus, config.merge.tie_rule);
      run.census = AssignmentCensus(result.assignment, taus.size());
      merged = std::move(result.merged);
      break;
    }
    case MergeMethod::kRandomMix: {
      auto result = RandomMixMerge(taus, config.merge.seed);
      run.census = AssignmentCensus(result.assignment, taus.size());
      run.residual_fraction = ResidualFraction(result.assignment);
      merged = std::move(result.merged);
      break;
    }
    case MergeMethod::kAverage:
      merged = AverageMerge(taus);
      break;
  }
  run.preference = std::move(pref);
  const ParameterSet theta = ApplyTaskVector(suite.theta0, merged, config.lambda_merge);
  Evaluation eval = Evaluate(theta, suite, env);
  run.task_losses = std::move(eval.task_losses);
  run.environment_loss = eval.environment_loss;
  return run;
}

}  // namespace

PipelineReport RunPipeline(const PipelineConfig& config) {
  const TaskSuite suite = GenerateTaskSuite(config.suite);
  const auto thetas = SequentialFinetune(suite);
  const auto taus = TaskVectors(thetas, suite.theta0);
  const std::uint64_t d = taus.front().size();
  const auto T = static_cast<int>(taus.size());

  std::optional<TargetEnvironment> env;
  if (config.environment) env = MixTargetEnvironment(suite, *config.environment);
  const TargetEnvironment* env_ptr = env ? &*env : nullptr;

  PipelineReport report;
  report.method = std::string(MergeMethodName(config.merge.method));
  switch (config.source) {
    case PreferenceSource::kAlpha:
      for (double alpha : config.alphas) {
        auto pref = PreferenceFromAlpha({alpha, T, d});
        PipelineRun run = MergeAndEvaluate(config, suite, taus, env_ptr, std::move(pref));
        run.alpha = alpha;
        report.runs.push_back(std::move(run));
      }
      break;
    case PreferenceSource::kFile: {
      if (!config.budgets) Fail(ErrorKind::kConfig, "file preference source without budgets");
      if (config.budgets->task_count() != taus.size()) {
        Fail(ErrorKind::kValidation, "preference vector length does not match task count");
      }
      if (const auto check = ValidatePreference(*config.budgets, d); !check.ok()) {
        Fail(ErrorKind::kValidation, check.message());
      }
      report.runs.push_back(MergeAndEvaluate(config, suite, taus, env_ptr, config.budgets));
      break;
    }
    case PreferenceSource::kSimilarity: {
      if (!env) Fail(ErrorKind::kConfig, "similarity preference needs an environment");
      SimilarityVector s = PipelineSimilarity(config, suite, *env);
      auto pref = PreferenceFromSimilarities(s, d);
      PipelineRun run = MergeAndEvaluate(config, suite, taus, env_ptr, std::move(pref));
      run.similarity = std::move(s);
      report.runs.push_back(std::move(run));
      break;
    }
  }
  return report;
}

std::string ReportCsv(const PipelineReport& report) {
  const bool multi = report.runs.size() > 1;
  std::ostringstream out;
  out << (multi ? "run,task,budget,census,loss\n" : "task,budget,census,loss\n");
  for (std::size_t r = 0; r < report.runs.size(); ++r) {
    const auto& run = report.runs[r];
    for (std::size_t t = 0; t < run.task_losses.size(); ++t) {
      if (multi) out << r + 1 << ',';
      out << t + 1 << ',';
      if (run.preference) out << run.preference->budgets[t];
      out << ',';
      if (!run.census.empty()) out << run.census[t];
      out << ',' << FormatDouble(run.task_losses[t]) << '\n';
    }
  }
  return out.str();
}

std::string ReportJson(const PipelineReport& report) {
  Json runs = Json::array();
  for (const auto& run : report.runs) {
    Json j = Json::object();
    if (run.alpha) j["alpha"] = *run.alpha;
    if (run.similarity) j["similarity"] = run.similarity->scores;
    if (run.preference) j["budgets"] = run.preference->budgets;
    if (!run.census.empty()) j["census"] = run.census;
    j["losses"] = run.task_losses;
    if (run.environment_loss) j["environment_loss"] = *run.environment_loss;
    j["residual_fraction"] = run.residual_fraction;
    runs.push_back(std::move(j));
  }
  return Json{{"method", report.method}, {"runs", std::move(runs)}}.dump(2) + "\n";
}

}  // namespace tvmerge
