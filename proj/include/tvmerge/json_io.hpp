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

// JSON documents: preference vectors, similarity vectors, census, labels,
// and pipeline configs. Malformed documents raise ErrorKind::kConfig.

#ifndef TVMERGE_JSON_IO_HPP_
#define TVMERGE_JSON_IO_HPP_

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"
#include "tvmerge/pipeline.hpp"
#include "tvmerge/preference.hpp"
#include "tvmerge/similarity.hpp"

namespace tvmerge {

using Json = nlohmann::ordered_json;

Json ReadJsonFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
void WriteJsonFile(const std::filesystem::path& path, const Json& doc);

// {"budgets": [...], "d": N}
Json PreferenceToJson(const PreferenceVector& pref, std::uint64_t d);
struct PreferenceDocument {
  PreferenceVector pref;
  std::optional<std::uint64_t> d;
};
PreferenceDocument PreferenceFromJson(const Json& doc);

// {"scores": [...], "metric": "...", "config": {...}}
Json SimilarityToJson(const SimilarityVector& s, SimilarityMetric metric,
                      const SimilarityConfig& cfg);
SimilarityVector SimilarityFromJson(const Json& doc);

Json SimilarityConfigToJson(const SimilarityConfig& cfg);
// Overlays the keys present in `doc` onto `cfg`.
void ApplySimilarityConfig(const Json& doc, SimilarityConfig& cfg);

// {"counts": [...]}
Json CensusToJson(std::span<const std::uint64_t> counts);

// {"labels": [ids...]} or {"counts": {class: count}}.
LabelHistogram LabelsFromJson(const Json& doc);

SuiteConfig ParseSuiteConfig(const Json& doc);
EnvironmentConfig ParseEnvironmentConfig(const Json& doc);

// Relative preference-file paths resolve against `base_dir`. A missing
// merge seed is left to the caller (`seed_present` reports it).
struct ParsedPipelineConfig {
  PipelineConfig config;
  bool seed_present = false;
};
ParsedPipelineConfig ParsePipelineConfig(const Json& doc, const std::filesystem::path& base_dir);

}  // namespace tvmerge

#endif  // TVMERGE_JSON_IO_HPP_
