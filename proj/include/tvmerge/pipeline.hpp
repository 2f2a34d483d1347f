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

// End-to-end synthetic run: generate → fine-tune analog → task vectors →
// preference → merge → apply → evaluate.

#ifndef TVMERGE_PIPELINE_HPP_
#define TVMERGE_PIPELINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "tvmerge/merge.hpp"
#include "tvmerge/preference.hpp"
#include "tvmerge/similarity.hpp"
#include "tvmerge/synth.hpp"

namespace tvmerge {

enum class PreferenceSource { kFile, kAlpha, kSimilarity };

struct PipelineConfig {
  SuiteConfig suite;
  MergeConfig merge;
  double lambda_merge = 0.5;

  PreferenceSource source = PreferenceSource::kAlpha;
  // kAlpha: one run per entry.
  std::vector<double> alphas{1.0};
  // kFile: budgets as loaded from the preference file.
  std::optional<PreferenceVector> budgets;
  // kSimilarity.
  SimilarityMetric metric = SimilarityMetric::kLabel;
  SimilarityConfig similarity;

  // Required by the similarity source; adds an environment loss otherwise.
  std::optional<EnvironmentConfig> environment;
};

struct PipelineRun {
  std::optional<double> alpha;
  std::optional<SimilarityVector> similarity;
  std::optional<PreferenceVector> preference;
  std::vector<std::uint64_t> census;
  std::vector<double> task_losses;
  std::optional<double> environment_loss;
  double residual_fraction = 0;
};

struct PipelineReport {
  std::string method;
  std::vector<PipelineRun> runs;
};

PipelineReport RunPipeline(const PipelineConfig& config);

// Columns task,budget,census,loss; a leading run column is added when the
// report holds more than one run.
std::string ReportCsv(const PipelineReport& report);
std::string ReportJson(const PipelineReport& report);

}  // namespace tvmerge

#endif  // TVMERGE_PIPELINE_HPP_
