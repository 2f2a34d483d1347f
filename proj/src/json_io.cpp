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

#include "tvmerge/json_io.hpp"

#include <fstream>
#include <sstream>

#include "tvmerge/error.hpp"

namespace tvmerge {
namespace {

// Wraps nlohmann type/range errors as config errors.
template <typename Fn>
auto Guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    Fail(ErrorKind::kConfig, std::string(what) + ": " + e.what());
  }
}

template <typename T>
T Value(const Json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  return Guard(key, [&] { return doc.at(key).get<T>(); });
}

void RequireObject(const Json& doc, const char* what) {
  if (!doc.is_object()) Fail(ErrorKind::kConfig, std::string(what) + " must be a JSON object");
}

SupportMode ParseSupportMode(const std::string& name) {
  if (name == "disjoint") return SupportMode::kDisjoint;
  if (name == "overlapping") return SupportMode::kOverlapping;
  Fail(ErrorKind::kConfig, "unknown support_mode '" + name + "'");
}

}  // namespace

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    Fail(ErrorKind::kConfig, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open for writing: " + path.string());
  out << text;
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

void WriteJsonFile(const std::filesystem::path& path, const Json& doc) {
  WriteTextFile(path, doc.dump(2) + "\n");
}

Json PreferenceToJson(const PreferenceVector& pref, std::uint64_t d) {
  return Json{{"budgets", pref.budgets}, {"d", d}};
}

PreferenceDocument PreferenceFromJson(const Json& doc) {
  RequireObject(doc, "preference document");
  if (!doc.contains("budgets")) Fail(ErrorKind::kConfig, "preference document lacks 'budgets'");
  PreferenceDocument out;
  out.pref.budgets =
      Guard("budgets", [&] { return doc.at("budgets").get<std::vector<std::int64_t>>(); });
  if (doc.contains("d")) {
    out.d = Guard("d", [&] { return doc.at("d").get<std::uint64_t>(); });
  }
  return out;
}

Json SimilarityConfigToJson(const SimilarityConfig& cfg) {
  Json j{{"gamma", cfg.ot.gamma},         {"epsilon", cfg.ot.epsilon},
         {"max_iters", cfg.ot.max_iters}, {"tol", cfg.ot.tol},
         {"gamma_cos", cfg.gamma_cos},    {"gamma_mmd", cfg.gamma_mmd}};
  if (cfg.mmd_bandwidth) j["mmd_bandwidth"] = *cfg.mmd_bandwidth;
  return j;
}

void ApplySimilarityConfig(const Json& doc, SimilarityConfig& cfg) {
  RequireObject(doc, "similarity config");
  cfg.ot.gamma = Value(doc, "gamma", cfg.ot.gamma);
  cfg.ot.epsilon = Value(doc, "epsilon", cfg.ot.epsilon);
  cfg.ot.max_iters = Value(doc, "max_iters", cfg.ot.max_iters);
  cfg.ot.tol = Value(doc, "tol", cfg.ot.tol);
  cfg.gamma_cos = Value(doc, "gamma_cos", cfg.gamma_cos);
  cfg.gamma_mmd = Value(doc, "gamma_mmd", cfg.gamma_mmd);
  if (doc.contains("mmd_bandwidth")) cfg.mmd_bandwidth = Value(doc, "mmd_bandwidth", 1.0);
}

Json SimilarityToJson(const SimilarityVector& s, SimilarityMetric metric,
                      const SimilarityConfig& cfg) {
  return Json{{"scores", s.scores},
              {"metric", std::string(SimilarityMetricName(metric))},
              {"config", SimilarityConfigToJson(cfg)}};
}

SimilarityVector SimilarityFromJson(const Json& doc) {
  RequireObject(doc, "similarity document");
  if (!doc.contains("scores")) Fail(ErrorKind::kConfig, "similarity document lacks 'scores'");
  SimilarityVector s;
  s.scores = Guard("scores", [&] { return doc.at("scores").get<std::vector<double>>(); });
  return s;
}

Json CensusToJson(std::span<const std::uint64_t> counts) {
  return Json{{"counts", std::vector<std::uint64_t>(counts.begin(), counts.end())}};
}

LabelHistogram LabelsFromJson(const Json& doc) {
  RequireObject(doc, "label document");
  std::map<std::string, std::uint64_t> counts;
  if (doc.contains("labels")) {
    const auto& labels = doc.at("labels");
    if (!labels.is_array()) Fail(ErrorKind::kConfig, "'labels' must be an array");
    for (const auto& label : labels) {
      if (label.is_number_integer()) {
        ++counts[std::to_string(label.get<std::int64_t>())];
      } else if (label.is_string()) {
        ++counts[label.get<std::string>()];
      } else {
        Fail(ErrorKind::kConfig, "labels must be integers or strings");
      }
    }
  } else if (doc.contains("counts")) {
    const auto& hist = doc.at("counts");
    if (!hist.is_object()) Fail(ErrorKind::kConfig, "'counts' must be an object");
    for (const auto& [label, n] : hist.items()) {
      counts[label] = Guard("counts", [&] { return n.get<std::uint64_t>(); });
    }
  } else {
    Fail(ErrorKind::kConfig, "label document needs 'labels' or 'counts'");
  }
  return LabelHistogram(std::move(counts));
}

SuiteConfig ParseSuiteConfig(const Json& doc) {
  RequireObject(doc, "suite");
  SuiteConfig cfg;
  cfg.tasks = Value(doc, "tasks", cfg.tasks);
  cfg.dim = Value(doc, "dim", cfg.dim);
  cfg.support_mode = ParseSupportMode(Value<std::string>(doc, "support_mode", "disjoint"));
  cfg.overlap = Value(doc, "overlap", cfg.overlap);
  cfg.samples_per_task = Value(doc, "samples_per_task", cfg.samples_per_task);
  cfg.noise_std = Value(doc, "noise_std", cfg.noise_std);
  cfg.retention = Value(doc, "retention", cfg.retention);
  cfg.embedding_dim = Value(doc, "embedding_dim", cfg.embedding_dim);
  cfg.classes_per_task = Value(doc, "classes_per_task", cfg.classes_per_task);
  cfg.embedding_noise = Value(doc, "embedding_noise", cfg.embedding_noise);
  cfg.seed = Value(doc, "seed", cfg.seed);
  return cfg;
}

EnvironmentConfig ParseEnvironmentConfig(const Json& doc) {
  RequireObject(doc, "environment");
  EnvironmentConfig cfg;
  const auto members = Value<std::vector<int>>(doc, "members", {});
  for (int id : members) {
    if (id < 1) Fail(ErrorKind::kConfig, "environment members are 1-based task ids");
    cfg.members.push_back(id - 1);
  }
  cfg.mix = Value<std::vector<double>>(doc, "mix", {});
  cfg.samples = Value(doc, "samples", cfg.samples);
  cfg.meta_fraction = Value(doc, "meta_fraction", cfg.meta_fraction);
  cfg.seed = Value(doc, "seed", cfg.seed);
  return cfg;
}

ParsedPipelineConfig ParsePipelineConfig(const Json& doc, const std::filesystem::path& base_dir) {
  RequireObject(doc, "pipeline config");
  ParsedPipelineConfig out;
  PipelineConfig& cfg = out.config;
  if (doc.contains("suite")) cfg.suite = ParseSuiteConfig(doc.at("suite"));

  if (doc.contains("merge")) {
    const auto& merge = doc.at("merge");
    RequireObject(merge, "merge");
    const auto method = Value<std::string>(merge, "method", "tunable");
    const auto parsed = ParseMergeMethod(method);
    if (!parsed) Fail(ErrorKind::kConfig, "unknown merge method '" + method + "'");
    cfg.merge.method = *parsed;
    cfg.merge.rounds = Value(merge, "rounds", cfg.merge.rounds);
    if (merge.contains("seed")) {
      cfg.merge.seed = Value<std::uint64_t>(merge, "seed", 0);
      out.seed_present = true;
    }
    cfg.lambda_merge = Value(merge, "lambda", cfg.lambda_merge);
  }

  if (doc.contains("preference")) {
    const auto& pref = doc.at("preference");
    RequireObject(pref, "preference");
    const auto source = Value<std::string>(pref, "source", "alpha");
    if (source == "alpha") {
      cfg.source = PreferenceSource::kAlpha;
      if (pref.contains("alpha")) {
        const auto& alpha = pref.at("alpha");
        cfg.alphas = alpha.is_array()
                         ? Guard("alpha", [&] { return alpha.get<std::vector<double>>(); })
                         : std::vector<double>{Guard("alpha", [&] { return alpha.get<double>(); })};
      }
      if (cfg.alphas.empty()) Fail(ErrorKind::kConfig, "alpha sweep is empty");
    } else if (source == "file") {
      cfg.source = PreferenceSource::kFile;
      if (pref.contains("budgets")) {
        cfg.budgets = PreferenceFromJson(pref).pref;
      } else if (pref.contains("path")) {
        std::filesystem::path path = Value<std::string>(pref, "path", "");
        if (path.is_relative()) path = base_dir / path;
        cfg.budgets = PreferenceFromJson(ReadJsonFile(path)).pref;
      } else {
        Fail(ErrorKind::kConfig, "file preference needs 'path' or 'budgets'");
      }
    } else if (source == "similarity") {
      cfg.source = PreferenceSource::kSimilarity;
      const auto metric = Value<std::string>(pref, "metric", "label");
      const auto parsed = ParseSimilarityMetric(metric);
      if (!parsed) Fail(ErrorKind::kConfig, "unknown similarity metric '" + metric + "'");
      cfg.metric = *parsed;
      ApplySimilarityConfig(pref, cfg.similarity);
    } else {
      Fail(ErrorKind::kConfig, "unknown preference source '" + source + "'");
    }
  }

  if (doc.contains("environment")) cfg.environment = ParseEnvironmentConfig(doc.at("environment"));
  return out;
}

}  // namespace tvmerge
