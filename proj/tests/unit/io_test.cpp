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

#include <algorithm>
#include <cmath>
#include <functional>
#include <filesystem>
#include <limits>
#include <string>

#include "support.hpp"
#include "xtalk/config.hpp"
#include "xtalk/io.hpp"
#include "xtalk/synthetic.hpp"

namespace xtalk {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("xtalk_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ChipIo, RoundTripIsExact) {
  GenerateSpec g;
  g.seed = 3;
  g.max_delay_offset = 1.5e-9;
  g.disabled_readout = {2, 5};
  g.readout = ReadoutErrorModel(0.96, 0.91);
  auto chip = generate_chip(g);
  chip.drives[1].software_phase = -0.3;
  chip.drives[2].envelope.shape = EnvelopeShape::flat;
  const auto back = chip_from_json(nlohmann::json::parse(dump(chip_to_json(chip))));
  EXPECT_EQ(back, chip);
}

TEST(ChipIo, SaveAndLoad) {
  TempDir dir;
  const auto chip = generate_chip({});
  save_chip(dir.path() / "nested" / "chip.json", chip);
  EXPECT_EQ(load_chip(dir.path() / "nested" / "chip.json"), chip);
  EXPECT_FALSE(fs::exists(dir.path() / "nested" / "chip.json.tmp"));
}

TEST(ChipIo, OptionalSectionsDefault) {
  const auto j = nlohmann::json::parse(R"({
    "format": "xtalk-chip", "version": 1,
    "qubits": [{"frequency_hz": 5e9, "anharmonicity_hz": -3e8},
               {"frequency_hz": 5.2e9, "anharmonicity_hz": -3e8}],
    "crosstalk": {"beta": [[1, 0.1], [0.05, 1]], "theta": [[0, 0.5], [-0.5, 0]]}
  })");
  const auto chip = chip_from_json(j);
  EXPECT_EQ(chip.qubit_count(), 2);
  EXPECT_EQ(chip.drives[1].carrier_frequency.hz(), 5.2e9);
  EXPECT_EQ(chip.drives[1].envelope, PulseEnvelope{});
  EXPECT_EQ(chip.crosstalk.tau(0, 1), 0.0);
  EXPECT_TRUE(chip.readout[0].is_ideal());
  EXPECT_TRUE(validate_chip(chip).empty());
}

TEST(ChipIo, DiagnosticsNameTheField) {
  auto j = chip_to_json(generate_chip({}));
  j["qubits"][3].erase("frequency_hz");
  EXPECT_NE(error_of([&] { chip_from_json(j); }).find("chip.qubits[3].frequency_hz"),
            std::string::npos);

  j = chip_to_json(generate_chip({}));
  j["crosstalk"]["beta"][2][1] = "big";
  EXPECT_NE(error_of([&] { chip_from_json(j); }).find("chip.crosstalk.beta[2][1]"),
            std::string::npos);

  j = chip_to_json(generate_chip({}));
  j["version"] = 7;
  EXPECT_NE(error_of([&] { chip_from_json(j); }).find("unsupported version"), std::string::npos);

  j = chip_to_json(generate_chip({}));
  j["format"] = "xtalk-dataset";
  EXPECT_THROW(chip_from_json(j), ConfigError);

  j = chip_to_json(generate_chip({}));
  j["readout"][0]["p0_given_0"] = 0.4;
  EXPECT_THROW(chip_from_json(j), ConfigError);
}

TEST(Files, Errors) {
  EXPECT_THROW(read_text_file("/nonexistent/xtalk/file.json"), IoError);
  EXPECT_THROW(write_text_file("/proc/xtalk_cannot_write/x.json", "{}"), IoError);
  const auto bad = error_of([] { parse_json_document("{\n  \"a\": ,\n}", "cfg.json"); });
  EXPECT_NE(bad.find("cfg.json"), std::string::npos);
  EXPECT_NE(bad.find("line 2"), std::string::npos);
}

PhaseSweepDataset sample_dataset() {
  PhaseSweepDataset ds;
  ds.primary = 3;
  ds.secondaries = {1, 6};
  ds.shots = 1000;
  ds.seed = 0xfeedbeefcafeULL;
  ds.phases = Protocol{}.phases();
  for (std::size_t i = 0; i < ds.phases.size(); ++i) {
    ds.observed_z.push_back(std::sin(0.1 * static_cast<double>(i)) / 3.0);
    ds.sigma.push_back(0.03 + 1e-3 * static_cast<double>(i));
  }
  ds.clipped.assign(ds.phases.size(), false);
  ds.clipped[4] = true;
  return ds;
}

TEST(DatasetIo, RoundTripAndCsv) {
  const auto ds = sample_dataset();
  EXPECT_EQ(dataset_from_json(nlohmann::json::parse(dump(dataset_to_json(ds)))), ds);
  const auto csv = dataset_to_csv(ds);
  EXPECT_EQ(csv.rfind("delta_phi,z,sigma\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 34);
}

TEST(DatasetIo, LengthMismatchRejected) {
  auto j = dataset_to_json(sample_dataset());
  j["sigma"].erase(0);
  EXPECT_THROW(dataset_from_json(j), ConfigError);
}

TEST(ReportIo, RoundTripWithInfiniteErrors) {
  PairFitResult a;
  a.primary = 0;
  a.secondary = 1;
  a.beta_hat = 0.0;
  a.flags.theta_unidentifiable = true;
  a.beta_stderr = 0.004;
  PairFitResult b;
  b.primary = 1;
  b.secondary = 0;
  b.beta_hat = 0.1234567890123;
  b.theta_hat = -2.2;
  b.chi2_per_dof = 0.97;
  b.beta_stderr = 0.0011;
  b.theta_stderr = 0.013;
  const auto report = summarize_fits(2, {b, a});
  const auto text = dump(report_to_json(report));
  EXPECT_NE(text.find("\"theta_stderr\": null"), std::string::npos);
  const auto back = report_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.results, report.results);
  EXPECT_TRUE(std::isinf(back.results[0].theta_stderr));
  EXPECT_EQ(back.median_chi2, report.median_chi2);
  EXPECT_TRUE(std::isnan(back.beta_theta_correlation));
}

TEST(ReportIo, FittedChipCarriesEstimates) {
  const auto chip = generate_chip({});
  PairFitResult r;
  r.primary = 2;
  r.secondary = 4;
  r.beta_hat = 0.077;
  r.theta_hat = 0.9;
  const auto fitted = fitted_chip(chip, summarize_fits(8, {r}));
  EXPECT_EQ(fitted.crosstalk.beta(2, 4), 0.077);
  EXPECT_EQ(fitted.crosstalk.theta(2, 4), 0.9);
  EXPECT_EQ(fitted.crosstalk.beta(4, 2), 0.0);
  EXPECT_EQ(fitted.crosstalk.beta(3, 3), 1.0);
}

TEST(PredictionIo, RoundTripAndCsv) {
  MultipletPrediction p;
  p.primary = 1;
  p.secondaries = {0, 2};
  p.phases = {0.0, 1.0, 2.0};
  p.predicted_z = {0.1, -0.2, 0.3};
  p.contributions = {{0, 0.05, 1.0}, {2, 0.1, -1.0}};
  EXPECT_EQ(prediction_from_json(nlohmann::json::parse(dump(prediction_to_json(p)))), p);
  p.chi2_per_dof_vs_data = 1.25;
  EXPECT_EQ(prediction_from_json(nlohmann::json::parse(dump(prediction_to_json(p)))), p);
  EXPECT_EQ(prediction_to_csv(p), "delta_phi,z_pred\n0,0.10000000000000001\n1,-0.20000000000000001\n"
                                  "2,0.29999999999999999\n");
}

TEST(RunConfig, EmptyConfigUsesProtocolDefaults) {
  const auto c = parse_run_config(nlohmann::json::object());
  EXPECT_EQ(c.protocol, Protocol{});
  EXPECT_EQ(c.protocol.phase_count, 33);
  EXPECT_EQ(c.protocol.shots, 1000);
  EXPECT_DOUBLE_EQ(c.protocol.rotation_angle, 2.5 * kPi);
  EXPECT_DOUBLE_EQ(c.protocol.duration, 160e-9);
  EXPECT_EQ(c.oracle, SimulationConfig{});
  EXPECT_EQ(c.generate.seed, c.master_seed);
}

TEST(RunConfig, FieldsAndPaths) {
  const auto c = parse_run_config(nlohmann::json::parse(R"({
    "chip_file": "chips/a.json",
    "output_dir": "out",
    "master_seed": 17,
    "threads": 2,
    "generate": {"qubits": 5, "beta_max": 0.1, "readout": [0.9, 0.85]},
    "protocol": {"phases": 21, "shots": 500},
    "oracle": {"levels": 3, "frame": "lab"},
    "fit": {"bootstrap_samples": 10},
    "verify": {"multiplets": [[0, 1, 2]], "secondaries": [2]},
    "pairs": [[1, 0], [1, 2]]
  })"), "/base");
  EXPECT_EQ(*c.chip_file, fs::path("/base/chips/a.json"));
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
  EXPECT_EQ(c.master_seed, 17u);
  EXPECT_EQ(c.generate.seed, 17u);
  EXPECT_EQ(c.generate.qubit_count, 5);
  EXPECT_EQ(c.generate.readout, ReadoutErrorModel(0.9, 0.85));
  EXPECT_EQ(c.protocol.phase_count, 21);
  EXPECT_EQ(c.oracle.levels, 3);
  EXPECT_EQ(c.oracle.frame, Frame::lab);
  EXPECT_EQ(c.fit.bootstrap_samples, 10);
  ASSERT_EQ(c.verify.multiplets.size(), 1u);
  EXPECT_EQ(c.verify.multiplets[0], (Multiplet{0, {1, 2}}));
  EXPECT_EQ(c.pairs.size(), 2u);
}

TEST(RunConfig, Rejections) {
  EXPECT_NE(error_of([] { parse_run_config(nlohmann::json::parse(R"({"protocl": {}})")); })
                .find("config.protocl: unknown field"),
            std::string::npos);
  EXPECT_NE(error_of([] {
              parse_run_config(nlohmann::json::parse(R"({"protocol": {"shots": "many"}})"));
            }).find("config.protocol.shots"),
            std::string::npos);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"oracle": {"levels": 5}})")),
               ConfigError);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"generate": {"beta_min": -1}})")),
               ConfigError);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"protocol": {"phases": 0}})")),
               ConfigError);
}

TEST(RunConfig, PairAndMultipletSyntax) {
  EXPECT_EQ(parse_pair("1:0"), (std::pair{1, 0}));
  EXPECT_THROW(parse_pair("1-0"), ConfigError);
  EXPECT_THROW(parse_pair("1:x"), ConfigError);
  EXPECT_EQ(parse_multiplet("4:1,7"), (Multiplet{4, {1, 7}}));
  EXPECT_THROW(parse_multiplet("4"), ConfigError);
  EXPECT_THROW(parse_multiplet("4:1,,2"), ConfigError);
}

}  // namespace
}  // namespace xtalk
