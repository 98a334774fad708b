// Copyright 2026 The xtalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "xtalk/io.hpp"
#include "xtalk/pipeline.hpp"

namespace xtalk {
namespace {

namespace fs = std::filesystem;

const std::string kCli = XTALK_CLI_PATH;

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("xtalk_pipeline_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI and returns its exit status.
  int cli(const std::string& args) const {
    const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + (dir_ / "log.txt").string() +
                            "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out(const std::string& name) const { return "--output-dir \"" + (dir_ / name).string() + "\""; }

  void write_config(const std::string& name, const std::string& text) const {
    write_text_file(dir_ / name, text);
  }

  std::map<std::string, std::string> snapshot(const fs::path& root) const {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_text_file(e.path());
    }
    return files;
  }

  fs::path dir_;
};

TEST_F(PipelineTest, GenerateChipIsDeterministic) {
  ASSERT_EQ(cli("generate-chip --seed 4 " + out("a")), 0);
  ASSERT_EQ(cli("generate-chip --seed 4 " + out("b")), 0);
  EXPECT_EQ(read_text_file(dir_ / "a/chip.json"), read_text_file(dir_ / "b/chip.json"));
  ASSERT_EQ(cli("generate-chip --seed 5 " + out("c")), 0);
  EXPECT_NE(read_text_file(dir_ / "a/chip.json"), read_text_file(dir_ / "c/chip.json"));

  ASSERT_EQ(cli("generate-chip --beta-max 0 --qubits 3 " + out("ideal")), 0);
  const auto chip = load_chip(dir_ / "ideal/chip.json");
  EXPECT_EQ(chip.qubit_count(), 3);
  EXPECT_EQ(chip.crosstalk.beta(0, 1), 0.0);
}

TEST_F(PipelineTest, CharacterizeWritesFortyNineFits) {
  write_config("cfg.json", R"({"generate": {"disabled_readout": [5]}, "master_seed": 3})");
  ASSERT_EQ(cli("characterize --config \"" + (dir_ / "cfg.json").string() + "\" " + out("run")), 0);
  const auto report = load_report(dir_ / "run/fit_report.json");
  EXPECT_EQ(report.results.size(), 49u);
  int json = 0, csv = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "run/datasets")) {
    json += e.path().extension() == ".json";
    csv += e.path().extension() == ".csv";
  }
  EXPECT_EQ(json, 49);
  EXPECT_EQ(csv, 49);
  EXPECT_TRUE(fs::exists(dir_ / "run/fitted_chip.json"));

  // Same seed, same bytes; the refit reproduces the report.
  const auto first = snapshot(dir_ / "run");
  ASSERT_EQ(cli("characterize --config \"" + (dir_ / "cfg.json").string() + "\" " + out("run")), 0);
  EXPECT_EQ(snapshot(dir_ / "run"), first);
  ASSERT_EQ(cli("fit " + out("run")), 0);
  EXPECT_EQ(read_text_file(dir_ / "run/fit_report.json"), first.at("fit_report.json"));
}

TEST_F(PipelineTest, PairsFilter) {
  ASSERT_EQ(cli("characterize --pairs 1:0,1:2 " + out("run")), 0);
  const auto report = load_report(dir_ / "run/fit_report.json");
  ASSERT_EQ(report.results.size(), 2u);
  EXPECT_EQ(report.results[0].primary, 1);
  EXPECT_EQ(report.results[0].secondary, 0);
  EXPECT_EQ(report.results[1].secondary, 2);
  EXPECT_TRUE(fs::exists(dir_ / "run/datasets/pair_1_2.json"));
  EXPECT_EQ(cli("characterize --pairs 1:1 " + out("bad")), 2);
  EXPECT_EQ(cli("characterize --pairs 1-0 " + out("bad")), 2);
}

TEST_F(PipelineTest, PredictAndVerify) {
  ASSERT_EQ(cli("characterize --seed 8 " + out("run")), 0);
  ASSERT_EQ(cli("predict --multiplet 0:1,2,3 --multiplet 4:5,6 " + out("run")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "run/predictions/pred_0_1_2_3.json"));
  EXPECT_TRUE(fs::exists(dir_ / "run/predictions/pred_4_5_6.csv"));
  const auto decomp = nlohmann::json::parse(read_text_file(dir_ / "run/predictions/decomp_0_1_2_3.json"));
  EXPECT_EQ(decomp.size(), 7u);

  // A single-secondary multiplet reuses the pair data, so its score is the
  // pair fit's chi^2 rescaled to zero fitted parameters.
  ASSERT_EQ(cli("verify --seed 8 --multiplet 2:6 " + out("run")), 0);
  const auto summary = nlohmann::json::parse(read_text_file(dir_ / "run/verify/summary.json"));
  const double chi2 = summary["multiplets"][0]["chi2_per_dof"].get<double>();
  const auto report = load_report(dir_ / "run/fit_report.json");
  EXPECT_NEAR(chi2, report.find(2, 6)->chi2_per_dof * 31.0 / 33.0, 1e-9);
  EXPECT_GT(chi2, 0.3);
  EXPECT_LT(chi2, 2.5);

  ASSERT_EQ(cli("verify --seed 8 --random 5 " + out("run")), 0);
  const auto random = nlohmann::json::parse(read_text_file(dir_ / "run/verify/summary.json"));
  EXPECT_EQ(random["multiplets"].size(), 10u);
  EXPECT_EQ(random["groups"][0]["secondaries"], 2);
  EXPECT_EQ(random["groups"][1]["secondaries"], 3);
  const auto tag = multiplet_tag(random["multiplets"][0]["primary"].get<int>(),
                                 random["multiplets"][0]["secondaries"].get<std::vector<int>>());
  EXPECT_TRUE(fs::exists(dir_ / "run/verify" / ("overlay_" + tag + ".csv")));
}

TEST_F(PipelineTest, VerifyRejectsDisabledReadoutPrimary) {
  write_config("cfg.json", R"({"generate": {"disabled_readout": [5]}})");
  const std::string cfg = "--config \"" + (dir_ / "cfg.json").string() + "\" ";
  ASSERT_EQ(cli("characterize " + cfg + out("run")), 0);
  EXPECT_EQ(cli("verify " + cfg + "--multiplet 5:1,2 " + out("run")), 2);
  // Disabled primaries are never drawn at random.
  RunConfig c = load_run_config(dir_ / "cfg.json");
  const auto chip = generate_chip(c.generate);
  for (const auto& m : select_multiplets(chip.topology, 3, 40, 1)) EXPECT_NE(m.primary, 5);
}

TEST_F(PipelineTest, MultipletSelectionIsSeeded) {
  const auto topo = ChipTopology::ring(8);
  const auto a = select_multiplets(topo, 2, 40, 11);
  EXPECT_EQ(a, select_multiplets(topo, 2, 40, 11));
  EXPECT_NE(a, select_multiplets(topo, 2, 40, 12));
  ASSERT_EQ(a.size(), 40u);
  for (const auto& m : a) {
    ASSERT_EQ(m.secondaries.size(), 2u);
    EXPECT_TRUE(std::is_sorted(m.secondaries.begin(), m.secondaries.end()));
    EXPECT_EQ(std::count(m.secondaries.begin(), m.secondaries.end(), m.primary), 0);
  }
  std::vector<Multiplet> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

TEST_F(PipelineTest, ReportOutputs) {
  ASSERT_EQ(cli("characterize --seed 2 " + out("run")), 0);
  ASSERT_EQ(cli("report " + out("run")), 0);
  for (const char* f : {"graph.dot", "graph.json", "chi2_hist.csv", "beta_hist.csv",
                        "beta_theta.csv", "summary.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run/report" / f)) << f;
  }
  const auto scatter = read_text_file(dir_ / "run/report/beta_theta.csv");
  EXPECT_EQ(std::count(scatter.begin(), scatter.end(), '\n'), 1 + 56);
  const auto summary = read_text_file(dir_ / "run/report/summary.csv");
  EXPECT_NE(summary.find("pair,56,"), std::string::npos);
}

TEST_F(PipelineTest, ReportFromZeroFits) {
  std::vector<PairFitResult> fits;
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      if (a == b) continue;
      PairFitResult r;
      r.primary = a;
      r.secondary = b;
      r.chi2_per_dof = 1.0 + 0.01 * a;
      fits.push_back(r);
    }
  }
  save_report(dir_ / "zero.json", summarize_fits(8, fits));
  ASSERT_EQ(cli("report --report \"" + (dir_ / "zero.json").string() + "\" " + out("run")), 0);
  const auto dot = read_text_file(dir_ / "run/report/graph.dot");
  EXPECT_EQ(dot.find("->"), std::string::npos);
  const auto summary = read_text_file(dir_ / "run/report/summary.csv");
  EXPECT_NE(summary.find("pair,56,1.03"), std::string::npos);
}

TEST_F(PipelineTest, ExitCodes) {
  write_config("bad.json", R"({"protocol": {"shots": -3}})");
  EXPECT_EQ(cli("characterize --config \"" + (dir_ / "bad.json").string() + "\" " + out("x")), 2);
  write_config("typo.json", "{\"master_seed\": 1,}");
  EXPECT_EQ(cli("characterize --config \"" + (dir_ / "typo.json").string() + "\" " + out("x")), 2);
  EXPECT_EQ(cli("characterize --config \"" + (dir_ / "missing.json").string() + "\""), 3);
  EXPECT_EQ(cli("report " + out("empty")), 3);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("characterize --no-such-flag"), 2);
  ASSERT_EQ(cli("characterize --pairs 0:1 " + out("partial")), 0);
  EXPECT_EQ(cli("predict --multiplet 0:1,2 " + out("partial")), 2);
  write_config("lab.json", R"({"oracle": {"frame": "lab", "time_step": 1e-17}})");
  EXPECT_EQ(cli("characterize --pairs 0:1 --config \"" + (dir_ / "lab.json").string() + "\" " +
                out("num")),
            4);
}

TEST_F(PipelineTest, ThreadCountDoesNotChangeBytes) {
  for (const char* threads : {"1", "3"}) {
    const std::string o = out(std::string("t") + threads);
    ASSERT_EQ(cli(std::string("characterize --seed 21 --threads ") + threads + " " + o), 0);
    ASSERT_EQ(cli(std::string("verify --seed 21 --random 4 --threads ") + threads + " " + o), 0);
  }
  EXPECT_EQ(snapshot(dir_ / "t1"), snapshot(dir_ / "t3"));
}

}  // namespace
}  // namespace xtalk
