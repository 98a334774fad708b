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

// Command-line front end: generate-chip, characterize, fit, predict, verify,
// report. Flags override the matching config-file fields.
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xtalk/config.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/pipeline.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::optional<unsigned> threads;
};

xtalk::RunConfig resolve_config(const GlobalFlags& g) {
  xtalk::RunConfig c = g.config.empty() ? xtalk::parse_run_config(nlohmann::json::object())
                                        : xtalk::load_run_config(g.config);
  if (g.seed) {
    c.master_seed = *g.seed;
    if (!c.generate_seed_set) c.generate.seed = *g.seed;
  }
  if (!g.output_dir.empty()) c.output_dir = g.output_dir;
  if (g.threads) c.threads = *g.threads;
  return c;
}

std::optional<std::filesystem::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

int run(int argc, char** argv) {
  CLI::App app{"Drive crosstalk simulation, characterization and reporting"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "Master seed (overrides config)");
  app.add_option("--output-dir", g.output_dir, "Output directory (overrides config)");
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores");

  auto* gen = app.add_subcommand("generate-chip", "Write a random synthetic chip");
  std::optional<int> qubits;
  std::optional<double> beta_min, beta_max;
  gen->add_option("--qubits", qubits, "Number of qubits");
  gen->add_option("--beta-min", beta_min, "Lower bound of off-diagonal beta");
  gen->add_option("--beta-max", beta_max, "Upper bound of off-diagonal beta");

  auto* characterize = app.add_subcommand("characterize", "Run and fit all pair experiments");
  std::string chip_file, pairs;
  characterize->add_option("--chip", chip_file, "Ground-truth chip file");
  characterize->add_option("--pairs", pairs, "Directed pairs, e.g. 1:0,1:2");

  auto* fit = app.add_subcommand("fit", "Refit existing pair datasets");
  std::string dataset_dir;
  fit->add_option("--datasets", dataset_dir, "Dataset directory (default <output>/datasets)");

  std::string report_file;
  std::vector<std::string> multiplets;

  auto* predict = app.add_subcommand("predict", "Predict multiplet curves from pair fits");
  predict->add_option("--report", report_file, "Fit report (default <output>/fit_report.json)");
  predict->add_option("--multiplet", multiplets, "Primary and secondaries, e.g. 0:1,2")
      ->required();

  auto* verify = app.add_subcommand("verify", "Simulate multiplets and score predictions");
  std::optional<int> random_count;
  std::vector<int> sizes;
  verify->add_option("--report", report_file, "Fit report (default <output>/fit_report.json)");
  verify->add_option("--chip", chip_file, "Ground-truth chip file");
  verify->add_option("--multiplet", multiplets, "Explicit multiplet, e.g. 0:1,2");
  verify->add_option("--random", random_count, "Random multiplets per size");
  verify->add_option("--secondaries", sizes, "Secondary counts to draw (default 2 3)");

  auto* report = app.add_subcommand("report", "Write the crosstalk graph and statistics");
  report->add_option("--report", report_file, "Fit report (default <output>/fit_report.json)");
  report->add_option("--chip", chip_file, "Chip file for topology");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto config = resolve_config(g);
  if (!chip_file.empty()) config.chip_file = std::filesystem::path(chip_file);

  if (*gen) {
    if (qubits) config.generate.qubit_count = *qubits;
    if (beta_min) config.generate.beta_min = *beta_min;
    if (beta_max) config.generate.beta_max = *beta_max;
    const auto chip = xtalk::cmd_generate_chip(config);
    std::printf("wrote %s (%d qubits)\n", (config.output_dir / "chip.json").string().c_str(),
                chip.qubit_count());
  } else if (*characterize) {
    if (!pairs.empty()) {
      config.pairs.clear();
      std::size_t start = 0;
      while (start <= pairs.size()) {
        const auto comma = pairs.find(',', start);
        config.pairs.push_back(xtalk::parse_pair(pairs.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    const auto result = xtalk::cmd_characterize(config);
    std::printf("fitted %zu pairs, median chi2/dof %.4f\n", result.report.results.size(),
                result.report.median_chi2);
  } else if (*fit) {
    const auto dir = dataset_dir.empty() ? config.output_dir / "datasets"
                                         : std::filesystem::path(dataset_dir);
    const auto result = xtalk::cmd_fit(config, dir);
    std::printf("fitted %zu pairs, median chi2/dof %.4f\n", result.results.size(),
                result.median_chi2);
  } else if (*predict) {
    std::vector<xtalk::Multiplet> ms;
    for (const auto& m : multiplets) ms.push_back(xtalk::parse_multiplet(m));
    const auto result = xtalk::cmd_predict(config, ms, optional_path(report_file));
    std::printf("wrote %zu predictions\n", result.size());
  } else if (*verify) {
    if (!multiplets.empty()) {
      config.verify.multiplets.clear();
      for (const auto& m : multiplets) config.verify.multiplets.push_back(xtalk::parse_multiplet(m));
    }
    if (random_count) {
      if (*random_count < 0) throw xtalk::ConfigError("--random must be >= 0");
      config.verify.random = *random_count;
    }
    if (!sizes.empty()) config.verify.secondary_counts = sizes;
    const auto summary = xtalk::cmd_verify(config, optional_path(report_file));
    for (std::size_t i = 0; i < summary.sizes.size(); ++i) {
      std::printf("%d secondaries: median chi2/dof %.4f, median |residual| %.4f\n",
                  summary.sizes[i], summary.median_chi2[i], summary.median_abs_residual[i]);
    }
  } else if (*report) {
    const auto out = xtalk::cmd_report(config, optional_path(report_file));
    std::printf("graph with %zu visible edges\n",
                xtalk::visible_subgraph(out.graph).edges.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const xtalk::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const xtalk::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  } catch (const xtalk::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
