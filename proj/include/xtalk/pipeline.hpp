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

#pragma once

// The command pipeline behind the CLI. Each command reads and writes files
// under RunConfig::output_dir:
//
//   chip.json                  ground truth used for simulation
//   datasets/pair_A_B.{json,csv}
//   fit_report.json, fitted_chip.json
//   predictions/pred_A_S1_S2.{json,csv}, predictions/decomp_A_S1_S2.json
//   verify/multiplet_A_S1_S2.json, verify/pred_..., verify/overlay_....csv,
//   verify/summary.json
//   report/graph.dot, graph.json, chi2_hist.csv, beta_hist.csv,
//   beta_theta.csv, summary.csv
//
// Work is spread over threads but results land in indexed slots and files
// are written in a fixed order, so outputs do not depend on thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xtalk/config.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/experiment.hpp"
#include "xtalk/fitting.hpp"
#include "xtalk/graph.hpp"
#include "xtalk/io.hpp"
#include "xtalk/model.hpp"
#include "xtalk/parallel.hpp"
#include "xtalk/prediction.hpp"
#include "xtalk/random.hpp"
#include "xtalk/synthetic.hpp"

namespace xtalk {

namespace fs = std::filesystem;

inline std::string multiplet_tag(int a, const std::vector<int>& secondaries) {
  std::string s = std::to_string(a);
  for (int k : secondaries) s += "_" + std::to_string(k);
  return s;
}

namespace detail {

inline void require_valid_chip(const ChipGroundTruth& chip, int levels) {
  ValidationOptions options;
  options.levels = levels;
  const auto problems = validate_chip(chip, options);
  if (problems.empty()) return;
  std::string msg = "invalid chip:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

inline void check_pairs(const ChipGroundTruth& chip,
                        const std::vector<std::pair<int, int>>& pairs) {
  const int n = chip.qubit_count();
  for (const auto& [a, b] : pairs) {
    const std::string tag = std::to_string(a) + ":" + std::to_string(b);
    if (a < 0 || a >= n || b < 0 || b >= n || a == b) {
      throw ConfigError("pair " + tag + " is not a valid directed pair");
    }
    if (!chip.topology.readout_enabled(a)) {
      throw ConfigError("pair " + tag + ": qubit " + std::to_string(a) +
                        " has disabled readout and cannot be primary");
    }
  }
}

inline Json number_json(double v) { return number_or_null(v); }

}  // namespace detail

// Ground truth: the configured chip file, else a chip.json already in the
// output directory, else a freshly generated chip.
inline ChipGroundTruth obtain_chip(const RunConfig& config, bool prefer_output = true) {
  if (config.chip_file) return load_chip(*config.chip_file);
  const auto existing = config.output_dir / "chip.json";
  if (prefer_output && fs::exists(existing)) return load_chip(existing);
  try {
    return generate_chip(config.generate);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline ChipGroundTruth cmd_generate_chip(const RunConfig& config) {
  ChipGroundTruth chip;
  try {
    chip = generate_chip(config.generate);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  detail::require_valid_chip(chip, config.oracle.levels);
  save_chip(config.output_dir / "chip.json", chip);
  return chip;
}

inline Characterization cmd_characterize(const RunConfig& config) {
  const auto chip = obtain_chip(config);
  detail::require_valid_chip(chip, config.oracle.levels);
  std::optional<std::vector<std::pair<int, int>>> pairs;
  if (!config.pairs.empty()) {
    detail::check_pairs(chip, config.pairs);
    pairs = config.pairs;
  }
  ExperimentOptions experiment;
  experiment.oracle = config.oracle;
  experiment.threads = resolve_threads(config.threads);
  FitOptions fit = config.fit;
  if (fit.bootstrap_samples > 0 && fit.bootstrap_seed == 0) {
    fit.bootstrap_seed = derive_seed(config.master_seed, {0x626f6f74ULL});
  }
  auto result = characterize_chip(chip, config.protocol, config.master_seed, experiment, fit,
                                  pairs);

  const auto& out = config.output_dir;
  save_chip(out / "chip.json", chip);
  for (const auto& ds : result.datasets) {
    const auto stem = "pair_" + multiplet_tag(ds.primary, ds.secondaries);
    save_dataset(out / "datasets" / (stem + ".json"), ds);
    write_text_file(out / "datasets" / (stem + ".csv"), dataset_to_csv(ds));
  }
  save_report(out / "fit_report.json", result.report);
  save_chip(out / "fitted_chip.json", fitted_chip(chip, result.report));
  return result;
}

// Refits every pair dataset in a directory.
inline ChipFitReport cmd_fit(const RunConfig& config, const fs::path& dataset_dir) {
  if (!fs::is_directory(dataset_dir)) {
    throw IoError("dataset directory '" + dataset_dir.string() + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dataset_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("pair_") &&
        entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no pair datasets in '" + dataset_dir.string() + "'");

  std::vector<PhaseSweepDataset> datasets;
  int qubit_count = 0;
  for (const auto& f : files) {
    datasets.push_back(load_dataset(f));
    const auto& ds = datasets.back();
    if (ds.secondaries.size() != 1) {
      throw ConfigError(f.string() + ": pair dataset must have exactly one secondary");
    }
    qubit_count = std::max({qubit_count, ds.primary + 1, ds.secondaries.front() + 1});
  }
  if (config.chip_file) qubit_count = load_chip(*config.chip_file).qubit_count();
  FitOptions fit = config.fit;
  if (fit.bootstrap_samples > 0 && fit.bootstrap_seed == 0) {
    fit.bootstrap_seed = derive_seed(config.master_seed, {0x626f6f74ULL});
  }
  ChipFitReport report;
  try {
    report = fit_datasets(qubit_count, datasets, fit, resolve_threads(config.threads));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  save_report(config.output_dir / "fit_report.json", report);
  return report;
}

inline ChipFitReport load_output_report(const RunConfig& config,
                                        const std::optional<fs::path>& report_file) {
  const auto path = report_file ? *report_file : config.output_dir / "fit_report.json";
  return load_report(path);
}

// Writes the prediction for each multiplet and its accumulation
// decomposition (every nonempty subset of the secondaries).
inline std::vector<MultipletPrediction> cmd_predict(const RunConfig& config,
                                                    const std::vector<Multiplet>& multiplets,
                                                    const std::optional<fs::path>& report_file) {
  if (multiplets.empty()) throw ConfigError("predict needs at least one multiplet");
  const auto report = load_output_report(config, report_file);
  std::vector<MultipletPrediction> out;
  for (const auto& m : multiplets) {
    const auto tag = multiplet_tag(m.primary, m.secondaries);
    const auto parts = decompose_accumulation(report, m.primary, m.secondaries, config.protocol);
    auto p = predict_multiplet(report, m.primary, m.secondaries, config.protocol);
    const auto dir = config.output_dir / "predictions";
    write_text_file(dir / ("pred_" + tag + ".json"), dump(prediction_to_json(p)));
    write_text_file(dir / ("pred_" + tag + ".csv"), prediction_to_csv(p));
    Json decomposition = Json::array();
    for (const auto& part : parts) decomposition.push_back(prediction_to_json(part));
    write_text_file(dir / ("decomp_" + tag + ".json"), dump(decomposition));
    out.push_back(std::move(p));
  }
  return out;
}

// Draws count distinct multiplets with the given number of secondaries.
// Primaries are drawn among readout-enabled qubits, secondaries by a partial
// Fisher-Yates shuffle of the remaining qubits.
inline std::vector<Multiplet> select_multiplets(const ChipTopology& topology, int secondaries,
                                                int count, std::uint64_t seed) {
  std::vector<int> primaries;
  for (int q = 0; q < topology.qubit_count; ++q) {
    if (topology.readout_enabled(q)) primaries.push_back(q);
  }
  if (primaries.empty()) throw ConfigError("no qubit has readout enabled");
  if (secondaries > topology.qubit_count - 1) {
    throw ConfigError("multiplet with " + std::to_string(secondaries) +
                      " secondaries does not fit on a " +
                      std::to_string(topology.qubit_count) + "-qubit chip");
  }
  RandomStream stream(derive_seed(seed, {0x766572696679ULL, static_cast<std::uint64_t>(secondaries)}));
  std::set<Multiplet> seen;
  std::vector<Multiplet> out;
  const int max_attempts = 1000 * std::max(count, 1);
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count;
       ++attempt) {
    Multiplet m;
    m.primary = primaries[stream.below(primaries.size())];
    std::vector<int> others;
    for (int q = 0; q < topology.qubit_count; ++q) {
      if (q != m.primary) others.push_back(q);
    }
    for (int i = 0; i < secondaries; ++i) {
      const auto j = i + static_cast<int>(stream.below(others.size() - i));
      std::swap(others[i], others[j]);
    }
    m.secondaries.assign(others.begin(), others.begin() + secondaries);
    std::sort(m.secondaries.begin(), m.secondaries.end());
    if (seen.insert(m).second) out.push_back(std::move(m));
  }
  return out;
}

struct VerifyEntry {
  Multiplet multiplet;
  double chi2_per_dof = 0.0;
  double median_abs_residual = 0.0;
};

struct VerifySummary {
  std::vector<VerifyEntry> entries;
  // Keyed by number of secondaries.
  std::vector<int> sizes;
  std::vector<double> median_chi2;
  std::vector<double> median_abs_residual;
};

inline Json verify_summary_to_json(const VerifySummary& s) {
  Json j;
  j["format"] = "xtalk-verify-summary";
  j["version"] = kFormatVersion;
  Json groups = Json::array();
  for (std::size_t i = 0; i < s.sizes.size(); ++i) {
    const auto count = std::count_if(s.entries.begin(), s.entries.end(), [&](const auto& e) {
      return static_cast<int>(e.multiplet.secondaries.size()) == s.sizes[i];
    });
    groups.push_back({{"secondaries", s.sizes[i]},
                      {"count", count},
                      {"median_chi2_per_dof", detail::number_json(s.median_chi2[i])},
                      {"median_abs_residual", detail::number_json(s.median_abs_residual[i])}});
  }
  j["groups"] = std::move(groups);
  Json entries = Json::array();
  for (const auto& e : s.entries) {
    entries.push_back({{"primary", e.multiplet.primary},
                       {"secondaries", e.multiplet.secondaries},
                       {"chi2_per_dof", detail::number_json(e.chi2_per_dof)},
                       {"median_abs_residual", detail::number_json(e.median_abs_residual)}});
  }
  j["multiplets"] = std::move(entries);
  return j;
}

// Simulates multiplet experiments on the ground-truth chip and scores the
// zero-parameter predictions built from the pair fits.
inline VerifySummary cmd_verify(const RunConfig& config,
                                const std::optional<fs::path>& report_file) {
  const auto chip = obtain_chip(config);
  detail::require_valid_chip(chip, config.oracle.levels);
  const auto report = load_output_report(config, report_file);

  std::vector<Multiplet> multiplets = config.verify.multiplets;
  if (multiplets.empty()) {
    for (int s : config.verify.secondary_counts) {
      auto drawn = select_multiplets(chip.topology, s, config.verify.random, config.master_seed);
      multiplets.insert(multiplets.end(), drawn.begin(), drawn.end());
    }
  }
  if (multiplets.empty()) throw ConfigError("verify has no multiplets to run");
  for (const auto& m : multiplets) {
    try {
      check_experiment_qubits(chip, m.primary, m.secondaries);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("multiplet " + multiplet_tag(m.primary, m.secondaries) + ": " +
                        e.what());
    }
    for (int k : m.secondaries) {
      if (report.find(m.primary, k) == nullptr) throw MissingPairError(m.primary, k);
    }
  }

  ExperimentOptions serial;
  serial.oracle = config.oracle;
  const std::size_t n = multiplets.size();
  std::vector<PhaseSweepDataset> datasets(n);
  std::vector<MultipletPrediction> predictions(n);
  parallel_for(n, resolve_threads(config.threads), [&](std::size_t i) {
    const auto& m = multiplets[i];
    datasets[i] = run_multiplet_experiment(chip, m.primary, m.secondaries, config.protocol,
                                           config.master_seed, serial);
    predictions[i] = predict_multiplet(report, m.primary, m.secondaries, config.protocol);
    predictions[i].chi2_per_dof_vs_data = score_prediction(predictions[i], datasets[i]);
  });

  VerifySummary summary;
  const auto dir = config.output_dir / "verify";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = multiplets[i];
    const auto tag = multiplet_tag(m.primary, m.secondaries);
    save_dataset(dir / ("multiplet_" + tag + ".json"), datasets[i]);
    write_text_file(dir / ("pred_" + tag + ".json"), dump(prediction_to_json(predictions[i])));
    write_text_file(dir / ("overlay_" + tag + ".csv"), overlay_to_csv(predictions[i], datasets[i]));
    std::vector<double> abs_res;
    for (const auto& r : residual_report(predictions[i], datasets[i])) {
      abs_res.push_back(std::abs(r.residual));
    }
    summary.entries.push_back({m, *predictions[i].chi2_per_dof_vs_data, median(abs_res)});
  }
  std::set<int> sizes;
  for (const auto& m : multiplets) sizes.insert(static_cast<int>(m.secondaries.size()));
  for (int s : sizes) {
    std::vector<double> chi2, res;
    for (const auto& e : summary.entries) {
      if (static_cast<int>(e.multiplet.secondaries.size()) != s) continue;
      chi2.push_back(e.chi2_per_dof);
      res.push_back(e.median_abs_residual);
    }
    summary.sizes.push_back(s);
    summary.median_chi2.push_back(median(chi2));
    summary.median_abs_residual.push_back(median(res));
  }
  write_text_file(dir / "summary.json", dump(verify_summary_to_json(summary)));
  return summary;
}

namespace detail {

// Fixed-width bins from 0; the last bin collects everything above.
inline std::string histogram_rows(const std::string& kind, const std::vector<double>& values,
                                  double width, int bins) {
  std::vector<int> counts(static_cast<std::size_t>(bins) + 1, 0);
  for (double v : values) {
    const double b = std::floor(v / width);
    const int idx = !(b >= 0.0) ? 0 : (b >= bins ? bins : static_cast<int>(b));
    ++counts[static_cast<std::size_t>(idx)];
  }
  std::string out;
  for (int i = 0; i <= bins; ++i) {
    const std::string hi = i == bins ? "inf" : csv_number(width * (i + 1));
    out += kind + "," + csv_number(width * i) + "," + hi + "," +
           std::to_string(counts[static_cast<std::size_t>(i)]) + "\n";
  }
  return out;
}

}  // namespace detail

struct ReportOutputs {
  CrosstalkGraph graph;
  double mean_beta_coupler = std::numeric_limits<double>::quiet_NaN();
  double mean_beta_other = std::numeric_limits<double>::quiet_NaN();
};

// Graph exports and the summary tables. Multiplet chi^2 values are included
// when verify/summary.json exists in the output directory.
inline ReportOutputs cmd_report(const RunConfig& config,
                                const std::optional<fs::path>& report_file) {
  const auto report = load_output_report(config, report_file);
  ChipTopology topology;
  const auto chip_path = config.chip_file ? *config.chip_file : config.output_dir / "chip.json";
  if (fs::exists(chip_path)) {
    topology = load_chip(chip_path).topology;
  } else {
    topology.qubit_count = report.qubit_count;
  }
  if (topology.qubit_count != report.qubit_count) {
    throw ConfigError("chip has " + std::to_string(topology.qubit_count) +
                      " qubits but the fit report has " + std::to_string(report.qubit_count));
  }

  ReportOutputs out;
  out.graph = build_graph(report, topology);
  const auto dir = config.output_dir / "report";
  write_text_file(dir / "graph.dot", export_graph(out.graph, GraphFormat::dot));
  write_text_file(dir / "graph.json", export_graph(out.graph, GraphFormat::structured));

  std::vector<double> pair_chi2, betas, coupler_betas, other_betas;
  std::string beta_theta = "primary,secondary,beta,theta,beta_stderr,theta_stderr,coupler,flags\n";
  for (const auto& r : report.results) {
    pair_chi2.push_back(r.chi2_per_dof);
    betas.push_back(r.beta_hat);
    const bool coupler = topology.has_coupler(r.primary, r.secondary);
    (coupler ? coupler_betas : other_betas).push_back(r.beta_hat);
    std::string flags;
    for (const auto& f : r.flags.names()) flags += (flags.empty() ? "" : ";") + f;
    beta_theta += std::to_string(r.primary) + "," + std::to_string(r.secondary) + "," +
                  detail::csv_number(r.beta_hat) + "," + detail::csv_number(r.theta_hat) + "," +
                  detail::csv_number(r.beta_stderr) + "," +
                  detail::csv_number(r.theta_stderr) + "," + (coupler ? "1" : "0") + "," +
                  flags + "\n";
  }
  write_text_file(dir / "beta_theta.csv", beta_theta);
  write_text_file(dir / "beta_hist.csv",
                  "kind,bin_low,bin_high,count\n" + detail::histogram_rows("pair", betas, 0.01, 30));

  std::string chi2_hist = "kind,bin_low,bin_high,count\n" +
                          detail::histogram_rows("pair", pair_chi2, 0.25, 20);
  std::string summary = "kind,count,median_chi2_per_dof\n";
  summary += "pair," + std::to_string(pair_chi2.size()) + "," +
             detail::csv_number(median(pair_chi2)) + "\n";
  const auto verify_path = config.output_dir / "verify" / "summary.json";
  if (fs::exists(verify_path)) {
    const auto v = parse_json_document(read_text_file(verify_path), verify_path.string());
    detail::check_header(v, "xtalk-verify-summary", verify_path.string());
    std::vector<std::pair<int, std::vector<double>>> groups;
    for (const auto& e : detail::field(v, "multiplets", verify_path.string())) {
      const int s = static_cast<int>(
          detail::get_field<std::vector<int>>(e, "secondaries", verify_path.string()).size());
      const auto& c = detail::field(e, "chi2_per_dof", verify_path.string());
      const double chi2 = detail::number_or_inf(c, verify_path.string());
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const auto& g) { return g.first == s; });
      if (it == groups.end()) {
        groups.push_back({s, {}});
        it = groups.end() - 1;
      }
      it->second.push_back(chi2);
    }
    std::sort(groups.begin(), groups.end());
    for (const auto& [s, values] : groups) {
      const auto kind = "multiplet_" + std::to_string(s + 1);
      chi2_hist += detail::histogram_rows(kind, values, 0.25, 20);
      summary += kind + "," + std::to_string(values.size()) + "," +
                 detail::csv_number(median(values)) + "\n";
    }
  }
  write_text_file(dir / "chi2_hist.csv", chi2_hist);

  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  out.mean_beta_coupler = mean(coupler_betas);
  out.mean_beta_other = mean(other_betas);
  summary += "\nmetric,value\n";
  summary += "beta_theta_correlation," + detail::csv_number(report.beta_theta_correlation) + "\n";
  summary += "mean_beta_coupler," + detail::csv_number(out.mean_beta_coupler) + "\n";
  summary += "mean_beta_non_coupler," + detail::csv_number(out.mean_beta_other) + "\n";
  write_text_file(dir / "summary.csv", summary);
  return out;
}

}  // namespace xtalk
