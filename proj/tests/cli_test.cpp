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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "tvmerge/json_io.hpp"
#include "tvmerge/merge.hpp"
#include "tvmerge/similarity.hpp"

namespace tvmerge {
namespace {

namespace fs = std::filesystem;
using testing::Tau;
using testing::Values;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tvmerge_cli_" + std::string(::testing::UnitTest::GetInstance()
                                             ->current_test_info()
                                             ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  std::string WriteTau(const std::string& name, std::vector<float> values) {
    WriteContainer(Tau(std::move(values)), Path(name));
    return Path(name);
  }

  std::string WriteText(const std::string& name, const std::string& text) {
    std::ofstream(Path(name)) << text;
    return Path(name);
  }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static Outcome Run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::Run(args, out, err);
    return {code, out.str(), err.str()};
  }

  fs::path dir_;
};

TEST_F(CliTest, TaskvecWritesDifference) {
  const auto theta = WriteTau("theta.tvc", {3, 5});
  const auto theta0 = WriteTau("theta0.tvc", {1, 2});
  const auto r = Run({"taskvec", "--theta", theta, "--theta0", theta0, "-o", Path("tau.tvc")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Values(ReadContainer(Path("tau.tvc"))), (std::vector<float>{2, 3}));
}

TEST_F(CliTest, TaskvecShapeMismatchIsValidation) {
  const auto theta = WriteTau("theta.tvc", {3, 5});
  const auto theta0 = WriteTau("theta0.tvc", {1, 2, 3});
  const auto r = Run({"taskvec", "--theta", theta, "--theta0", theta0, "-o", Path("tau.tvc")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("shape mismatch"), std::string::npos);
}

TEST_F(CliTest, MissingFileIsIo) {
  const auto theta0 = WriteTau("theta0.tvc", {1, 2});
  const auto r =
      Run({"taskvec", "--theta", Path("nope.tvc"), "--theta0", theta0, "-o", Path("tau.tvc")});
  EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, CorruptContainerIsIo) {
  const auto bad = WriteText("bad.tvc", "XXXX garbage");
  const auto theta0 = WriteTau("theta0.tvc", {1, 2});
  EXPECT_EQ(Run({"taskvec", "--theta", bad, "--theta0", theta0, "-o", Path("t.tvc")}).code, 3);
}

TEST_F(CliTest, MagmaxToyVectors) {
  const auto t1 = WriteTau("t1.tvc", {1, -3, 2});
  const auto t2 = WriteTau("t2.tvc", {-2, 1, 2});
  const auto r = Run({"merge", "--method", "magmax", "--tau", t1, t2, "-o", Path("m.tvc"),
                      "--census", "-", "--assignment", Path("owners.tvc")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Values(ReadContainer(Path("m.tvc"))), (std::vector<float>{-2, -3, 2}));
  EXPECT_EQ(Json::parse(r.out).at("counts"), Json::parse("[1, 2]"));

  const auto census = Run({"census", "--assignment", Path("owners.tvc")});
  ASSERT_EQ(census.code, 0) << census.err;
  EXPECT_EQ(Json::parse(census.out).at("counts"), Json::parse("[1, 2]"));
}

TEST_F(CliTest, TunableAlphaZeroGivesLastVector) {
  const auto t1 = WriteTau("t1.tvc", {1, -3, 2, 7});
  const auto t2 = WriteTau("t2.tvc", {-2, 1, 0.5f, 0});
  const auto r = Run({"merge", "--method", "tunable", "--tau", t1, t2, "--alpha", "0", "--seed",
                      "9", "-o", Path("m.tvc")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(EncodeContainer(ReadContainer(Path("m.tvc"))), EncodeContainer(ReadContainer(t2)));
}

TEST_F(CliTest, TunablePreferenceFile) {
  const auto t1 = WriteTau("t1.tvc", {5, 4, 1, 0});
  const auto t2 = WriteTau("t2.tvc", {1, 2, 3, 4});
  const auto good = WriteText("good.json", R"({"budgets": [2, 2], "d": 4})");
  const auto r = Run({"merge", "--method", "tunable", "--tau", t1, t2, "--pref-file", good,
                      "--seed", "1", "-o", Path("m.tvc")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Values(ReadContainer(Path("m.tvc"))), (std::vector<float>{5, 4, 3, 4}));

  const auto short_sum = WriteText("short.json", R"({"budgets": [2, 1]})");
  const auto bad = Run({"merge", "--method", "tunable", "--tau", t1, t2, "--pref-file",
                        short_sum, "--seed", "1", "-o", Path("m.tvc")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("sum 3 ≠ 4"), std::string::npos);
}

TEST_F(CliTest, MergeUsageErrors) {
  const auto t1 = WriteTau("t1.tvc", {1, 2});
  const auto t2 = WriteTau("t2.tvc", {2, 1});
  const auto pref = WriteText("p.json", R"({"budgets": [1, 1]})");
  // Tunable without a source, with two sources, without a seed.
  EXPECT_EQ(Run({"merge", "--method", "tunable", "--tau", t1, t2, "--seed", "1", "-o",
                 Path("m.tvc")}).code, 4);
  EXPECT_EQ(Run({"merge", "--method", "tunable", "--tau", t1, t2, "--alpha", "1", "--pref-file",
                 pref, "--seed", "1", "-o", Path("m.tvc")}).code, 4);
  EXPECT_EQ(Run({"merge", "--method", "tunable", "--tau", t1, t2, "--alpha", "1", "-o",
                 Path("m.tvc")}).code, 4);
  // Source on a non-tunable method.
  EXPECT_EQ(Run({"merge", "--method", "magmax", "--tau", t1, t2, "--alpha", "1", "-o",
                 Path("m.tvc")}).code, 4);
  EXPECT_EQ(Run({"merge", "--method", "randmix", "--tau", t1, t2, "-o", Path("m.tvc")}).code, 4);
  EXPECT_EQ(Run({"merge", "--method", "ties", "--tau", t1, t2, "-o", Path("m.tvc")}).code, 4);
  EXPECT_EQ(Run({"merge", "--tau", t1}).code, 4);
  EXPECT_EQ(Run({"frobnicate"}).code, 4);
  EXPECT_EQ(Run({}).code, 4);
}

TEST_F(CliTest, SeedFromConfigFile) {
  const auto t1 = WriteTau("t1.tvc", {1, 2, 3});
  const auto t2 = WriteTau("t2.tvc", {3, 2, 1});
  const auto cfg = WriteText("cfg.json", R"({"seed": 5, "rounds": 1})");
  const auto r = Run({"merge", "--method", "randmix", "--tau", t1, t2, "--config", cfg, "-o",
                      Path("m.tvc")});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto malformed = WriteText("bad.json", "{seed: ");
  EXPECT_EQ(Run({"merge", "--method", "randmix", "--tau", t1, t2, "--config", malformed, "-o",
                 Path("m.tvc")}).code, 6);
}

TEST_F(CliTest, ApplyLambda) {
  const auto theta0 = WriteTau("theta0.tvc", {1, 1});
  const auto tau = WriteTau("tau.tvc", {2, 4});
  ASSERT_EQ(Run({"apply", "--theta0", theta0, "--tau", tau, "-o", Path("o.tvc")}).code, 0);
  EXPECT_EQ(Values(ReadContainer(Path("o.tvc"))), (std::vector<float>{2, 3}));
  EXPECT_EQ(Run({"apply", "--theta0", theta0, "--tau", tau, "--lambda", "1.5", "-o",
                 Path("o.tvc")}).code, 2);
}

TEST_F(CliTest, SimLabelAndErrors) {
  const auto task1 = WriteText("l1.json", R"({"labels": [0, 0, 1, 1]})");
  const auto task2 = WriteText("l2.json", R"({"labels": [5, 6]})");
  const auto r = Run({"sim", "--metric", "label", "--task", task1, task2, "--meta", task1});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json doc = Json::parse(r.out);
  EXPECT_EQ(doc.at("metric"), "label");
  EXPECT_DOUBLE_EQ(doc.at("scores")[0].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(doc.at("scores")[1].get<double>(), 0.0);

  WriteContainer(EmbeddingsToContainer(EmbeddingSet{Eigen::MatrixXd::Ones(3, 2), ""}),
                 Path("e.tvc"));
  EXPECT_EQ(Run({"sim", "--metric", "ot", "--task", Path("e.tvc"), "--meta", Path("none.tvc")})
                .code,
            3);
  Eigen::MatrixXd centred(2, 2);
  centred << 1, -1, -1, 1;
  WriteContainer(EmbeddingsToContainer(EmbeddingSet{centred, ""}), Path("z.tvc"));
  const auto zero = Run({"sim", "--metric", "cos", "--task", Path("e.tvc"), "--meta",
                         Path("z.tvc")});
  EXPECT_EQ(zero.code, 5);
  EXPECT_NE(zero.err.find("zero-norm mean"), std::string::npos);
  EXPECT_EQ(Run({"sim", "--metric", "ot", "--task", task1, "--meta", task1}).code, 3);
}

TEST_F(CliTest, PrefvecBuildsAndValidates) {
  const auto r = Run({"prefvec", "--alpha", "2", "--tasks", "5", "--d", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out).at("budgets"), Json::parse("[52, 26, 13, 6, 3]"));

  const auto ok = WriteText("ok.json", R"({"budgets": [4, 3], "d": 7})");
  EXPECT_EQ(Run({"prefvec", "--validate", ok}).code, 0);
  const auto bad = WriteText("bad.json", R"({"budgets": [4, 4], "d": 7})");
  const auto v = Run({"prefvec", "--validate", bad});
  EXPECT_EQ(v.code, 2);
  EXPECT_NE(v.err.find("sum 8 ≠ 7"), std::string::npos);
  EXPECT_EQ(Run({"prefvec", "--alpha", "2", "--tasks", "5"}).code, 4);

  const auto sim = WriteText("sim.json", R"({"scores": [0, 0]})");
  EXPECT_EQ(Run({"prefvec", "--sim-file", sim, "--d", "4"}).code, 5);
}

TEST_F(CliTest, PipelineRunsAndReportsCensus) {
  const auto cfg = WriteText("p.json", R"({
    "suite": {"tasks": 3, "dim": 12, "retention": 0.8, "seed": 2},
    "merge": {"method": "tunable", "seed": 4, "lambda": 1.0},
    "preference": {"source": "file", "budgets": [4, 4, 4]}
  })");
  const auto r = Run({"pipeline", "--config", cfg, "-o", Path("report")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json report = Json::parse(Slurp(Path("report.json")));
  EXPECT_EQ(report.at("runs")[0].at("census"), report.at("runs")[0].at("budgets"));
  const std::string csv = Slurp(Path("report.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "task,budget,census,loss");
}

TEST_F(CliTest, PipelineConfigErrors) {
  const auto malformed = WriteText("bad.json", "{\"suite\": ");
  EXPECT_EQ(Run({"pipeline", "--config", malformed}).code, 6);
  const auto unseeded = WriteText("u.json", R"({"merge": {"method": "tunable"}})");
  EXPECT_EQ(Run({"pipeline", "--config", unseeded}).code, 4);
  EXPECT_EQ(Run({"pipeline", "--config", unseeded, "--seed", "3"}).code, 0);
  EXPECT_EQ(Run({"pipeline", "--config", Path("missing.json")}).code, 3);
}

TEST_F(CliTest, OutputsIdenticalAcrossThreadCounts) {
  std::vector<float> a(50000), b(50000), c(50000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<float>((i * 7919) % 101) - 50;
    b[i] = static_cast<float>((i * 104729) % 97) - 48;
    c[i] = static_cast<float>((i * 15485863) % 89) - 44;
  }
  const auto t1 = WriteTau("t1.tvc", a);
  const auto t2 = WriteTau("t2.tvc", b);
  const auto t3 = WriteTau("t3.tvc", c);
  std::string merged[2], owners[2];
  const char* threads[] = {"1", "4"};
  for (int i = 0; i < 2; ++i) {
    testing::ScopedEnv env("TVM_THREADS", threads[i]);
    const std::string m = Path("m" + std::to_string(i) + ".tvc");
    const std::string o = Path("o" + std::to_string(i) + ".tvc");
    ASSERT_EQ(Run({"merge", "--method", "tunable", "--tau", t1, t2, t3, "--alpha", "0.7",
                   "--seed", "21", "-o", m, "--assignment", o}).code, 0);
    merged[i] = Slurp(m);
    owners[i] = Slurp(o);
  }
  EXPECT_EQ(merged[0], merged[1]);
  EXPECT_EQ(owners[0], owners[1]);
}

TEST(ExitCodeTest, Mapping) {
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kValidation), 2);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kIo), 3);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kFormat), 3);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kUsage), 4);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kNumeric), 5);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kConfig), 6);
}

}  // namespace
}  // namespace tvmerge
