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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "tvmerge/json_io.hpp"
#include "tvmerge/merge.hpp"
#include "tvmerge/pipeline.hpp"
#include "tvmerge/preference.hpp"
#include "tvmerge/similarity.hpp"
#include "tvmerge/tensor_container.hpp"

namespace tvmerge::cli {
namespace {

namespace fs = std::filesystem;

enum class LogLevel { kQuiet, kInfo, kDebug };

class Log {
 public:
  Log(std::ostream& err, LogLevel level) : err_(err), level_(level) {}

  void info(const std::string& msg) const {
    if (level_ >= LogLevel::kInfo) err_ << "info: " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ >= LogLevel::kDebug) err_ << "debug: " << msg << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_;
};

// Settings shared by several subcommands. A --config JSON file supplies
// defaults; explicit flags win.
struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<int> rounds;
  std::optional<double> gamma;
  std::string log_level = "quiet";

  Json config = Json::object();

  void load() {
    if (!config_path.empty()) {
      config = ReadJsonFile(config_path);
      if (!config.is_object()) Fail(ErrorKind::kConfig, "config file must hold a JSON object");
    }
  }

  template <typename T>
  std::optional<T> resolve(const std::optional<T>& flag, const char* key) const {
    if (flag) return flag;
    if (!config.contains(key)) return std::nullopt;
    try {
      return config.at(key).get<T>();
    } catch (const Json::exception& e) {
      Fail(ErrorKind::kConfig, std::string("config key '") + key + "': " + e.what());
    }
  }

  std::uint64_t require_seed(const char* command) const {
    const auto s = resolve(seed, "seed");
    if (!s) Fail(ErrorKind::kUsage, std::string(command) + " requires --seed");
    return *s;
  }

  LogLevel level() const {
    if (log_level == "info") return LogLevel::kInfo;
    if (log_level == "debug") return LogLevel::kDebug;
    return LogLevel::kQuiet;
  }
};

void AddCommon(CLI::App* sub, CommonOptions& common, bool with_seed) {
  sub->add_option("--config", common.config_path, "JSON file with default settings");
  sub->add_option("--log-level", common.log_level, "quiet | info | debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
  if (with_seed) sub->add_option("--seed", common.seed, "Seed for every seeded stream");
}

void WriteOrPrint(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    WriteTextFile(path, text);
  }
}

std::vector<TaskVector> LoadTaskVectors(const std::vector<std::string>& paths) {
  std::vector<TaskVector> taus;
  taus.reserve(paths.size());
  for (const auto& path : paths) taus.emplace_back(ReadContainer(path));
  return taus;
}

PreferenceVector CheckedPreference(PreferenceVector pref, std::size_t tasks, std::uint64_t d) {
  if (pref.task_count() != tasks) {
    Fail(ErrorKind::kValidation, "preference vector has " + std::to_string(pref.task_count()) +
                                     " entries for " + std::to_string(tasks) + " tasks");
  }
  if (const auto report = ValidatePreference(pref, d); !report.ok()) {
    Fail(ErrorKind::kValidation, "invalid preference: " + report.message());
  }
  return pref;
}

PreferenceVector LoadPreferenceFile(const std::string& path, std::size_t tasks, std::uint64_t d) {
  const auto doc = PreferenceFromJson(ReadJsonFile(path));
  if (doc.d && *doc.d != d) {
    Fail(ErrorKind::kValidation, "preference file declares d=" + std::to_string(*doc.d) +
                                     " but the task vectors have d=" + std::to_string(d));
  }
  return CheckedPreference(doc.pref, tasks, d);
}

SimilarityInput LoadSimilarityInput(const std::string& path, SimilarityMetric metric) {
  if (metric == SimilarityMetric::kLabel) return LabelsFromJson(ReadJsonFile(path));
  return EmbeddingsFromContainer(ReadContainer(path), path);
}

// ---------------------------------------------------------------------------

struct TaskvecArgs {
  std::string theta, theta0, out;
};

int CmdTaskvec(const TaskvecArgs& a, const Log& log) {
  const ParameterSet theta = ReadContainer(a.theta);
  const ParameterSet theta0 = ReadContainer(a.theta0);
  WriteContainer(ComputeTaskVector(theta, theta0), a.out);
  log.info("wrote task vector to " + a.out);
  return kOk;
}

struct MergeArgs {
  std::string method;
  std::vector<std::string> taus;
  std::string pref_file, sim_file;
  std::optional<double> alpha;
  std::string out, census, assignment;
};

int CmdMerge(const MergeArgs& a, const CommonOptions& common, const Log& log, std::ostream& out) {
  const auto method = ParseMergeMethod(a.method);
  if (!method) Fail(ErrorKind::kUsage, "unknown method '" + a.method + "'");
  const int sources = !a.pref_file.empty() + !a.sim_file.empty() + a.alpha.has_value();
  if (*method == MergeMethod::kTunable && sources != 1) {
    Fail(ErrorKind::kUsage, "tunable needs exactly one of --pref-file, --alpha, --sim-file");
  }
  if (*method != MergeMethod::kTunable && sources != 0) {
    Fail(ErrorKind::kUsage, "preference sources only apply to the tunable method");
  }
  if (*method == MergeMethod::kAverage && (!a.census.empty() || !a.assignment.empty())) {
    Fail(ErrorKind::kUsage, "average merge has no assignment");
  }

  MergeConfig config;
  config.method = *method;
  config.rounds = common.resolve(common.rounds, "rounds").value_or(2);
  if (config.rounds < 1) Fail(ErrorKind::kValidation, "rounds must be at least 1");
  if (*method == MergeMethod::kTunable || *method == MergeMethod::kRandomMix) {
    config.seed = common.require_seed("merge");
  }

  const auto taus = LoadTaskVectors(a.taus);
  const std::uint64_t d = RequireCompatibleTasks(taus);
  const auto T = taus.size();

  std::optional<MergeResult> result;
  TaskVector merged;
  switch (*method) {
    case MergeMethod::kTunable: {
      PreferenceVector pref;
      if (!a.pref_file.empty()) {
        pref = LoadPreferenceFile(a.pref_file, T, d);
      } else if (a.alpha) {
        pref = PreferenceFromAlpha({*a.alpha, static_cast<int>(T), d});
      } else {
        const auto s = SimilarityFromJson(ReadJsonFile(a.sim_file));
        if (s.scores.size() != T) {
          Fail(ErrorKind::kValidation, "similarity file has " + std::to_string(s.scores.size()) +
                                           " scores for " + std::to_string(T) + " tasks");
        }
        pref = PreferenceFromSimilarities(s, d);
      }
      log.debug("budgets " + PreferenceToJson(pref, d).dump());
      result = TunableMerge(taus, pref, config);
      break;
    }
    case MergeMethod::kMagmax:
      result = MagmaxMerge(taus, config.tie_rule);
      break;
    case MergeMethod::kRandomMix:
      result = RandomMixMerge(taus, config.seed);
      break;
    case MergeMethod::kAverage:
      merged = AverageMerge(taus);
      break;
  }
  if (result) merged = result->merged;

  WriteContainer(merged, a.out);
  log.info("wrote merged task vector to " + a.out);
  if (result) {
    const auto counts = AssignmentCensus(result->assignment, T);
    const std::string census = CensusToJson(counts).dump(2) + "\n";
    if (!a.census.empty()) {
      WriteOrPrint(a.census, census, out);
    }
    if (!a.assignment.empty()) WriteOwnerMap(ToOwnerMap(result->assignment), a.assignment);
  }
  return kOk;
}

struct ApplyArgs {
  std::string theta0, tau, out;
};

int CmdApply(const ApplyArgs& a, const CommonOptions& common, const Log& log) {
  const double lambda = common.resolve(common.lambda, "lambda").value_or(0.5);
  const ParameterSet theta0 = ReadContainer(a.theta0);
  const TaskVector tau(ReadContainer(a.tau));
  WriteContainer(ApplyTaskVector(theta0, tau, lambda), a.out);
  log.info("wrote merged parameters to " + a.out);
  return kOk;
}

struct SimArgs {
  std::string metric;
  std::vector<std::string> tasks;
  std::vector<std::string> meta;
  std::optional<double> epsilon, tol, gamma_cos, gamma_mmd, bandwidth;
  std::optional<int> max_iters;
  std::string out;
};

int CmdSim(const SimArgs& a, const CommonOptions& common, const Log& log, std::ostream& out) {
  const auto metric = ParseSimilarityMetric(a.metric);
  if (!metric) Fail(ErrorKind::kUsage, "unknown metric '" + a.metric + "'");
  SimilarityConfig cfg;
  ApplySimilarityConfig(common.config, cfg);
  if (const auto g = common.resolve(common.gamma, "gamma")) cfg.ot.gamma = *g;
  if (a.epsilon) cfg.ot.epsilon = *a.epsilon;
  if (a.tol) cfg.ot.tol = *a.tol;
  if (a.max_iters) cfg.ot.max_iters = *a.max_iters;
  if (a.gamma_cos) cfg.gamma_cos = *a.gamma_cos;
  if (a.gamma_mmd) cfg.gamma_mmd = *a.gamma_mmd;
  if (a.bandwidth) cfg.mmd_bandwidth = *a.bandwidth;
  if (!(cfg.ot.gamma > 0)) Fail(ErrorKind::kValidation, "gamma must be positive");

  std::vector<SimilarityInput> tasks;
  std::vector<SimilarityInput> meta;
  for (const auto& path : a.tasks) tasks.push_back(LoadSimilarityInput(path, *metric));
  for (const auto& path : a.meta) meta.push_back(LoadSimilarityInput(path, *metric));
  const auto s = ComputeSimilarityVector(tasks, meta, *metric, cfg);
  WriteOrPrint(a.out, SimilarityToJson(s, *metric, cfg).dump(2) + "\n", out);
  log.info("computed " + std::to_string(s.scores.size()) + " similarity scores");
  return kOk;
}

struct PrefvecArgs {
  std::optional<double> alpha;
  std::optional<int> tasks;
  std::string sim_file, like, validate, out;
  std::optional<std::uint64_t> d;
};

int CmdPrefvec(const PrefvecArgs& a, std::ostream& out) {
  std::optional<std::uint64_t> d = a.d;
  if (!a.like.empty()) {
    const auto size = ReadContainer(a.like).size();
    if (d && *d != size) Fail(ErrorKind::kUsage, "--d disagrees with --like");
    d = size;
  }
  if (!a.validate.empty()) {
    const auto doc = PreferenceFromJson(ReadJsonFile(a.validate));
    if (!d) d = doc.d;
    if (!d) Fail(ErrorKind::kUsage, "validation needs --d, --like or a 'd' field");
    const auto report = ValidatePreference(doc.pref, *d);
    if (!report.ok()) Fail(ErrorKind::kValidation, "invalid preference: " + report.message());
    out << "ok\n";
    return kOk;
  }
  if (!d) Fail(ErrorKind::kUsage, "prefvec needs --d or --like");
  const int sources = a.alpha.has_value() + !a.sim_file.empty();
  if (sources != 1) Fail(ErrorKind::kUsage, "prefvec needs exactly one of --alpha, --sim-file");

  PreferenceVector pref;
  if (a.alpha) {
    if (!a.tasks) Fail(ErrorKind::kUsage, "--alpha needs --tasks");
    pref = PreferenceFromAlpha({*a.alpha, *a.tasks, *d});
  } else {
    pref = PreferenceFromSimilarities(SimilarityFromJson(ReadJsonFile(a.sim_file)), *d);
  }
  WriteOrPrint(a.out, PreferenceToJson(pref, *d).dump(2) + "\n", out);
  return kOk;
}

struct CensusArgs {
  std::string assignment, out;
  std::optional<std::size_t> tasks;
};

int CmdCensus(const CensusArgs& a, std::ostream& out) {
  const Assignment assignment = FromOwnerMap(ReadOwnerMap(a.assignment));
  std::size_t tasks = a.tasks.value_or(0);
  if (!a.tasks) {
    for (std::uint16_t owner : assignment.owner) tasks = std::max<std::size_t>(tasks, owner + 1u);
  }
  const auto counts = AssignmentCensus(assignment, tasks);
  WriteOrPrint(a.out, CensusToJson(counts).dump(2) + "\n", out);
  return kOk;
}

struct PipelineArgs {
  std::string config, out_prefix, csv, json;
};

int CmdPipeline(const PipelineArgs& a, const CommonOptions& common, const Log& log,
                std::ostream& out) {
  const Json doc = ReadJsonFile(a.config);
  auto parsed = ParsePipelineConfig(doc, fs::path(a.config).parent_path());
  PipelineConfig& cfg = parsed.config;
  const bool seeded = cfg.merge.method == MergeMethod::kTunable ||
                      cfg.merge.method == MergeMethod::kRandomMix;
  if (common.seed) {
    cfg.merge.seed = *common.seed;
  } else if (seeded && !parsed.seed_present) {
    Fail(ErrorKind::kUsage, "pipeline requires a seed (--seed or merge.seed)");
  }
  if (common.lambda) cfg.lambda_merge = *common.lambda;
  if (common.rounds) cfg.merge.rounds = *common.rounds;

  const PipelineReport report = RunPipeline(cfg);
  std::string csv_path = a.csv;
  std::string json_path = a.json;
  if (!a.out_prefix.empty()) {
    if (csv_path.empty()) csv_path = a.out_prefix + ".csv";
    if (json_path.empty()) json_path = a.out_prefix + ".json";
  }
  if (!csv_path.empty()) WriteTextFile(csv_path, ReportCsv(report));
  if (!json_path.empty()) {
    WriteTextFile(json_path, ReportJson(report));
  } else {
    out << ReportJson(report);
  }
  log.info("pipeline finished with " + std::to_string(report.runs.size()) + " run(s)");
  return kOk;
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
      return kValidationError;
    case ErrorKind::kIo:
    case ErrorKind::kFormat:
      return kIoError;
    case ErrorKind::kUsage:
      return kUsageError;
    case ErrorKind::kNumeric:
      return kNumericError;
    case ErrorKind::kConfig:
      return kConfigError;
  }
  return kUsageError;
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-vector merging with per-task element budgets", "tvmerge"};
  app.require_subcommand(1);
  CommonOptions common;

  TaskvecArgs taskvec;
  auto* taskvec_cmd = app.add_subcommand("taskvec", "Compute tau = theta - theta0");
  taskvec_cmd->add_option("--theta", taskvec.theta, "Fine-tuned parameters (TVC1)")->required();
  taskvec_cmd->add_option("--theta0", taskvec.theta0, "Base parameters (TVC1)")->required();
  taskvec_cmd->add_option("-o,--out", taskvec.out, "Output task vector")->required();
  AddCommon(taskvec_cmd, common, false);

  MergeArgs merge;
  auto* merge_cmd = app.add_subcommand("merge", "Merge task vectors");
  merge_cmd->add_option("--method", merge.method, "magmax | tunable | average | randmix")
      ->required();
  merge_cmd->add_option("--tau", merge.taus, "Task vector files in training order")->required();
  merge_cmd->add_option("--pref-file", merge.pref_file, "Preference JSON");
  merge_cmd->add_option("--alpha", merge.alpha, "Alpha schedule coefficient");
  merge_cmd->add_option("--sim-file", merge.sim_file, "Similarity JSON");
  merge_cmd->add_option("--rounds", common.rounds, "Assignment rounds K (default 2)");
  merge_cmd->add_option("-o,--out", merge.out, "Merged task vector")->required();
  merge_cmd->add_option("--census", merge.census, "Census JSON output ('-' for stdout)");
  merge_cmd->add_option("--assignment", merge.assignment, "Owner-map side file");
  AddCommon(merge_cmd, common, true);

  ApplyArgs apply;
  auto* apply_cmd = app.add_subcommand("apply", "theta0 + lambda * tau");
  apply_cmd->add_option("--theta0", apply.theta0, "Base parameters")->required();
  apply_cmd->add_option("--tau", apply.tau, "Merged task vector")->required();
  apply_cmd->add_option("--lambda", common.lambda, "Scaling in [0, 1] (default 0.5)");
  apply_cmd->add_option("-o,--out", apply.out, "Output parameters")->required();
  AddCommon(apply_cmd, common, false);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "Dataset similarity scores");
  sim_cmd->add_option("--metric", sim.metric, "ot | label | cos | mmd")->required();
  sim_cmd->add_option("--task", sim.tasks, "Per-task inputs in training order")->required();
  sim_cmd->add_option("--meta", sim.meta, "Meta input, shared or one per task")->required();
  sim_cmd->add_option("--gamma", common.gamma, "OT similarity scale (default 100)");
  sim_cmd->add_option("--epsilon", sim.epsilon, "Sinkhorn regularization");
  sim_cmd->add_option("--max-iters", sim.max_iters, "Sinkhorn iteration cap");
  sim_cmd->add_option("--tol", sim.tol, "Sinkhorn marginal tolerance");
  sim_cmd->add_option("--gamma-cos", sim.gamma_cos, "Cosine distance scale");
  sim_cmd->add_option("--gamma-mmd", sim.gamma_mmd, "MMD scale");
  sim_cmd->add_option("--bandwidth", sim.bandwidth, "RBF bandwidth (median heuristic if unset)");
  sim_cmd->add_option("-o,--out", sim.out, "Output JSON (stdout if unset)");
  AddCommon(sim_cmd, common, false);

  PrefvecArgs prefvec;
  auto* prefvec_cmd = app.add_subcommand("prefvec", "Build or validate a preference vector");
  prefvec_cmd->add_option("--alpha", prefvec.alpha, "Alpha schedule coefficient");
  prefvec_cmd->add_option("--tasks", prefvec.tasks, "Number of tasks for --alpha");
  prefvec_cmd->add_option("--sim-file", prefvec.sim_file, "Similarity JSON");
  prefvec_cmd->add_option("--d", prefvec.d, "Total element count");
  prefvec_cmd->add_option("--like", prefvec.like, "Take d from this TVC1 file");
  prefvec_cmd->add_option("--validate", prefvec.validate, "Validate a preference JSON");
  prefvec_cmd->add_option("-o,--out", prefvec.out, "Output JSON (stdout if unset)");
  AddCommon(prefvec_cmd, common, false);

  CensusArgs census;
  auto* census_cmd = app.add_subcommand("census", "Per-task element counts of an assignment");
  census_cmd->add_option("--assignment", census.assignment, "Owner-map side file")->required();
  census_cmd->add_option("--tasks", census.tasks, "Number of tasks (default: max owner)");
  census_cmd->add_option("-o,--out", census.out, "Output JSON (stdout if unset)");
  AddCommon(census_cmd, common, false);

  PipelineArgs pipeline;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run the synthetic merging pipeline");
  pipeline_cmd->add_option("--config", pipeline.config, "Pipeline JSON")->required();
  pipeline_cmd->add_option("-o,--out", pipeline.out_prefix, "Write <prefix>.csv and <prefix>.json");
  pipeline_cmd->add_option("--csv", pipeline.csv, "CSV report path");
  pipeline_cmd->add_option("--json", pipeline.json, "JSON report path");
  pipeline_cmd->add_option("--seed", common.seed, "Merge seed (overrides merge.seed)");
  pipeline_cmd->add_option("--lambda", common.lambda, "Overrides merge.lambda");
  pipeline_cmd->add_option("--log-level", common.log_level, "quiet | info | debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  std::vector<const char*> argv{"tvmerge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    // The pipeline's --config is its own document, not shared defaults.
    if (!pipeline_cmd->parsed()) common.load();
    const Log log(err, common.level());
    if (taskvec_cmd->parsed()) return CmdTaskvec(taskvec, log);
    if (merge_cmd->parsed()) return CmdMerge(merge, common, log, out);
    if (apply_cmd->parsed()) return CmdApply(apply, common, log);
    if (sim_cmd->parsed()) return CmdSim(sim, common, log, out);
    if (prefvec_cmd->parsed()) return CmdPrefvec(prefvec, out);
    if (census_cmd->parsed()) return CmdCensus(census, out);
    if (pipeline_cmd->parsed()) return CmdPipeline(pipeline, common, log, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace tvmerge::cli
