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

// File formats: chip ground truth, phase-sweep datasets, fit reports and
// predictions as JSON documents, plus flat CSV exports for plotting.
//
// Every JSON document carries "format" and "version" keys. Doubles are
// written with the shortest representation that round-trips exactly;
// non-finite values (e.g. an unidentifiable phase's uncertainty) are null.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "xtalk/errors.hpp"
#include "xtalk/experiment.hpp"
#include "xtalk/fitting.hpp"
#include "xtalk/model.hpp"
#include "xtalk/prediction.hpp"

namespace xtalk {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return ss.str();
}

// Writes to a sibling temporary file and renames it into place.
inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" + path.parent_path().string() +
                    "': " + ec.message());
    }
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("error while writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

inline nlohmann::json parse_json_document(const std::string& text,
                                          const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Field access with path diagnostics
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key,
                                   const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing field");
  return *it;
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <class T>
T get_field(const nlohmann::json& j, const char* key, const std::string& path) {
  return get_as<T>(field(j, key, path), path + "." + key);
}

inline Json number_or_null(double v) {
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

inline double number_or_inf(const nlohmann::json& j, const std::string& path) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return get_as<double>(j, path);
}

inline void check_header(const nlohmann::json& j, const char* format,
                         const std::string& path) {
  const auto f = get_field<std::string>(j, "format", path);
  if (f != format) {
    throw ConfigError(path + ".format: expected '" + format + "', got '" + f + "'");
  }
  const auto v = get_field<int>(j, "version", path);
  if (v != kFormatVersion) {
    throw ConfigError(path + ".version: unsupported version " + std::to_string(v));
  }
}

inline Json matrix_to_json(const SquareMatrix& m) {
  Json rows = Json::array();
  for (std::size_t j = 0; j < m.size(); ++j) {
    Json row = Json::array();
    for (std::size_t k = 0; k < m.size(); ++k) row.push_back(m(j, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline SquareMatrix matrix_from_json(const nlohmann::json& j, std::size_t n,
                                     const std::string& path) {
  if (!j.is_array() || j.size() != n) {
    throw ConfigError(path + ": expected " + std::to_string(n) + " rows");
  }
  SquareMatrix m(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != n) {
      throw ConfigError(rp + ": expected " + std::to_string(n) + " columns");
    }
    for (std::size_t c = 0; c < n; ++c) {
      m(r, c) = get_as<double>(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chip
// ---------------------------------------------------------------------------

inline Json chip_to_json(const ChipGroundTruth& chip) {
  Json j;
  j["format"] = "xtalk-chip";
  j["version"] = kFormatVersion;
  Json qubits = Json::array();
  for (const auto& t : chip.transmons) {
    qubits.push_back({{"frequency_hz", t.frequency.hz()},
                      {"anharmonicity_hz", t.anharmonicity.hz()}});
  }
  j["qubits"] = std::move(qubits);
  Json drives = Json::array();
  for (const auto& d : chip.drives) {
    drives.push_back({{"carrier_frequency_hz", d.carrier_frequency.hz()},
                      {"software_phase", d.software_phase},
                      {"envelope",
                       {{"shape", to_string(d.envelope.shape)},
                        {"duration", d.envelope.duration},
                        {"rotation_angle", d.envelope.rotation_angle}}}});
  }
  j["drives"] = std::move(drives);
  j["crosstalk"] = {{"beta", detail::matrix_to_json(chip.crosstalk.beta)},
                    {"theta", detail::matrix_to_json(chip.crosstalk.theta)},
                    {"tau", detail::matrix_to_json(chip.crosstalk.tau)}};
  Json couplers = Json::array();
  for (const auto& [a, b] : chip.topology.coupler_edges) couplers.push_back({a, b});
  j["topology"] = {{"qubit_count", chip.topology.qubit_count},
                   {"couplers", std::move(couplers)},
                   {"disabled_readout", chip.topology.disabled_readout_qubits}};
  Json readout = Json::array();
  for (const auto& r : chip.readout) {
    readout.push_back({{"p0_given_0", r.p0_given_0()}, {"p1_given_1", r.p1_given_1()}});
  }
  j["readout"] = std::move(readout);
  return j;
}

// Parses a chip document. "drives" may be omitted: each drive then sits at
// its qubit's frequency with zero phase and the default envelope. "tau" may
// be omitted (all zero); "readout" may be omitted (ideal).
inline ChipGroundTruth chip_from_json(const nlohmann::json& j,
                                      const std::string& path = "chip") {
  using detail::get_field;
  detail::check_header(j, "xtalk-chip", path);
  ChipGroundTruth chip;
  const auto& qubits = detail::field(j, "qubits", path);
  if (!qubits.is_array() || qubits.empty()) {
    throw ConfigError(path + ".qubits: expected a nonempty array");
  }
  const std::size_t n = qubits.size();
  for (std::size_t q = 0; q < n; ++q) {
    const std::string qp = path + ".qubits[" + std::to_string(q) + "]";
    chip.transmons.push_back(
        {Frequency::from_hz(get_field<double>(qubits[q], "frequency_hz", qp)),
         Frequency::from_hz(get_field<double>(qubits[q], "anharmonicity_hz", qp))});
  }
  if (j.contains("drives")) {
    const auto& drives = j["drives"];
    if (!drives.is_array() || drives.size() != n) {
      throw ConfigError(path + ".drives: expected " + std::to_string(n) + " entries");
    }
    for (std::size_t q = 0; q < n; ++q) {
      const std::string dp = path + ".drives[" + std::to_string(q) + "]";
      DriveChannel d;
      d.carrier_frequency =
          Frequency::from_hz(get_field<double>(drives[q], "carrier_frequency_hz", dp));
      d.software_phase = get_field<double>(drives[q], "software_phase", dp);
      if (drives[q].contains("envelope")) {
        const auto& e = drives[q]["envelope"];
        const std::string ep = dp + ".envelope";
        try {
          d.envelope.shape =
              envelope_shape_from_string(get_field<std::string>(e, "shape", ep));
        } catch (const std::invalid_argument& err) {
          throw ConfigError(ep + ".shape: " + err.what());
        }
        d.envelope.duration = get_field<double>(e, "duration", ep);
        d.envelope.rotation_angle = get_field<double>(e, "rotation_angle", ep);
      }
      chip.drives.push_back(d);
    }
  } else {
    for (const auto& t : chip.transmons) chip.drives.push_back({t.frequency, 0.0, {}});
  }

  const auto& xt = detail::field(j, "crosstalk", path);
  const std::string xp = path + ".crosstalk";
  chip.crosstalk.beta = detail::matrix_from_json(detail::field(xt, "beta", xp), n, xp + ".beta");
  chip.crosstalk.theta =
      detail::matrix_from_json(detail::field(xt, "theta", xp), n, xp + ".theta");
  chip.crosstalk.tau = xt.contains("tau")
                           ? detail::matrix_from_json(xt["tau"], n, xp + ".tau")
                           : SquareMatrix(n);

  chip.topology.qubit_count = static_cast<int>(n);
  if (j.contains("topology")) {
    const auto& t = j["topology"];
    const std::string tp = path + ".topology";
    if (t.contains("qubit_count") &&
        detail::get_as<int>(t["qubit_count"], tp + ".qubit_count") != static_cast<int>(n)) {
      throw ConfigError(tp + ".qubit_count: does not match the number of qubits");
    }
    if (t.contains("couplers")) {
      for (const auto& e : t["couplers"]) {
        const auto pair = detail::get_as<std::vector<int>>(e, tp + ".couplers[]");
        if (pair.size() != 2) throw ConfigError(tp + ".couplers[]: expected [a, b]");
        chip.topology.add_coupler(pair[0], pair[1]);
      }
    }
    if (t.contains("disabled_readout")) {
      chip.topology.disabled_readout_qubits =
          detail::get_as<std::vector<int>>(t["disabled_readout"], tp + ".disabled_readout");
    }
  }
  if (j.contains("readout")) {
    const auto& r = j["readout"];
    if (!r.is_array() || r.size() != n) {
      throw ConfigError(path + ".readout: expected " + std::to_string(n) + " entries");
    }
    for (std::size_t q = 0; q < n; ++q) {
      const std::string rp = path + ".readout[" + std::to_string(q) + "]";
      try {
        chip.readout.emplace_back(get_field<double>(r[q], "p0_given_0", rp),
                                  get_field<double>(r[q], "p1_given_1", rp));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(rp + ": " + e.what());
      }
    }
  } else {
    chip.readout.assign(n, ReadoutErrorModel::ideal());
  }
  return chip;
}

inline void save_chip(const std::filesystem::path& path, const ChipGroundTruth& chip) {
  write_text_file(path, dump(chip_to_json(chip)));
}

inline ChipGroundTruth load_chip(const std::filesystem::path& path) {
  return chip_from_json(parse_json_document(read_text_file(path), path.string()),
                        path.string());
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

inline Json dataset_to_json(const PhaseSweepDataset& ds) {
  Json j;
  j["format"] = "xtalk-dataset";
  j["version"] = kFormatVersion;
  j["qubits"] = {{"primary", ds.primary}, {"secondaries", ds.secondaries}};
  j["protocol"] = {{"phases", ds.phases.size()},
                   {"shots", ds.shots},
                   {"rotation_angle", ds.rotation_angle},
                   {"duration", ds.duration}};
  j["shots"] = ds.shots;
  j["seed"] = ds.seed;
  j["phases"] = ds.phases;
  j["observed_z"] = ds.observed_z;
  j["sigma"] = ds.sigma;
  Json clipped = Json::array();
  for (std::size_t i = 0; i < ds.clipped.size(); ++i) {
    if (ds.clipped[i]) clipped.push_back(i);
  }
  j["clipped_points"] = std::move(clipped);
  return j;
}

inline PhaseSweepDataset dataset_from_json(const nlohmann::json& j,
                                           const std::string& path = "dataset") {
  using detail::get_field;
  detail::check_header(j, "xtalk-dataset", path);
  PhaseSweepDataset ds;
  const auto& q = detail::field(j, "qubits", path);
  ds.primary = get_field<int>(q, "primary", path + ".qubits");
  ds.secondaries = get_field<std::vector<int>>(q, "secondaries", path + ".qubits");
  const auto& p = detail::field(j, "protocol", path);
  ds.rotation_angle = get_field<double>(p, "rotation_angle", path + ".protocol");
  ds.duration = get_field<double>(p, "duration", path + ".protocol");
  ds.shots = get_field<std::int64_t>(j, "shots", path);
  ds.seed = get_field<std::uint64_t>(j, "seed", path);
  ds.phases = get_field<std::vector<double>>(j, "phases", path);
  ds.observed_z = get_field<std::vector<double>>(j, "observed_z", path);
  ds.sigma = get_field<std::vector<double>>(j, "sigma", path);
  if (ds.observed_z.size() != ds.phases.size() || ds.sigma.size() != ds.phases.size()) {
    throw ConfigError(path + ": phases, observed_z and sigma must have equal length");
  }
  ds.clipped.assign(ds.phases.size(), false);
  if (j.contains("clipped_points")) {
    for (auto i : detail::get_as<std::vector<std::size_t>>(j["clipped_points"],
                                                           path + ".clipped_points")) {
      if (i >= ds.clipped.size()) throw ConfigError(path + ".clipped_points: index out of range");
      ds.clipped[i] = true;
    }
  }
  return ds;
}

inline std::string dataset_to_csv(const PhaseSweepDataset& ds) {
  std::string out = "delta_phi,z,sigma\n";
  for (std::size_t i = 0; i < ds.phases.size(); ++i) {
    out += detail::csv_number(ds.phases[i]) + "," + detail::csv_number(ds.observed_z[i]) +
           "," + detail::csv_number(ds.sigma[i]) + "\n";
  }
  return out;
}

inline void save_dataset(const std::filesystem::path& path, const PhaseSweepDataset& ds) {
  write_text_file(path, dump(dataset_to_json(ds)));
}

inline PhaseSweepDataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(parse_json_document(read_text_file(path), path.string()),
                           path.string());
}

// ---------------------------------------------------------------------------
// Fit report
// ---------------------------------------------------------------------------

inline Json fit_result_to_json(const PairFitResult& r) {
  Json j;
  j["primary"] = r.primary;
  j["secondary"] = r.secondary;
  j["beta_hat"] = r.beta_hat;
  j["theta_hat"] = r.theta_hat;
  j["chi2_per_dof"] = detail::number_or_null(r.chi2_per_dof);
  j["beta_stderr"] = detail::number_or_null(r.beta_stderr);
  j["theta_stderr"] = detail::number_or_null(r.theta_stderr);
  j["flags"] = r.flags.names();
  return j;
}

inline PairFitResult fit_result_from_json(const nlohmann::json& j, const std::string& path) {
  using detail::get_field;
  PairFitResult r;
  r.primary = get_field<int>(j, "primary", path);
  r.secondary = get_field<int>(j, "secondary", path);
  r.beta_hat = get_field<double>(j, "beta_hat", path);
  r.theta_hat = get_field<double>(j, "theta_hat", path);
  r.chi2_per_dof = detail::number_or_inf(detail::field(j, "chi2_per_dof", path),
                                         path + ".chi2_per_dof");
  r.beta_stderr = detail::number_or_inf(detail::field(j, "beta_stderr", path),
                                        path + ".beta_stderr");
  r.theta_stderr = detail::number_or_inf(detail::field(j, "theta_stderr", path),
                                         path + ".theta_stderr");
  for (const auto& name : get_field<std::vector<std::string>>(j, "flags", path)) {
    try {
      r.flags.set(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ".flags: " + e.what());
    }
  }
  return r;
}

inline Json report_to_json(const ChipFitReport& report) {
  Json j;
  j["format"] = "xtalk-fit-report";
  j["version"] = kFormatVersion;
  j["qubit_count"] = report.qubit_count;
  j["median_chi2"] = detail::number_or_null(report.median_chi2);
  j["beta_theta_correlation"] = detail::number_or_null(report.beta_theta_correlation);
  Json results = Json::array();
  for (const auto& r : report.results) results.push_back(fit_result_to_json(r));
  j["results"] = std::move(results);
  return j;
}

inline ChipFitReport report_from_json(const nlohmann::json& j,
                                      const std::string& path = "report") {
  detail::check_header(j, "xtalk-fit-report", path);
  ChipFitReport report;
  report.qubit_count = detail::get_field<int>(j, "qubit_count", path);
  const auto& results = detail::field(j, "results", path);
  for (std::size_t i = 0; i < results.size(); ++i) {
    report.results.push_back(
        fit_result_from_json(results[i], path + ".results[" + std::to_string(i) + "]"));
  }
  const auto med = detail::field(j, "median_chi2", path);
  report.median_chi2 = med.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                     : detail::get_as<double>(med, path + ".median_chi2");
  const auto corr = detail::field(j, "beta_theta_correlation", path);
  report.beta_theta_correlation =
      corr.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : detail::get_as<double>(corr, path + ".beta_theta_correlation");
  return report;
}

inline void save_report(const std::filesystem::path& path, const ChipFitReport& report) {
  write_text_file(path, dump(report_to_json(report)));
}

inline ChipFitReport load_report(const std::filesystem::path& path) {
  return report_from_json(parse_json_document(read_text_file(path), path.string()),
                          path.string());
}

// Copy of the chip with beta/theta replaced by the fitted values, so a fit
// can be fed back into simulation. Rows without fits (disabled readout) keep
// only the diagonal.
inline ChipGroundTruth fitted_chip(const ChipGroundTruth& chip, const ChipFitReport& report) {
  ChipGroundTruth out = chip;
  const std::size_t n = chip.crosstalk.size();
  out.crosstalk.beta = SquareMatrix(n);
  out.crosstalk.theta = SquareMatrix(n);
  for (std::size_t j = 0; j < n; ++j) out.crosstalk.beta(j, j) = chip.crosstalk.beta(j, j);
  for (const auto& r : report.results) {
    const auto a = static_cast<std::size_t>(r.primary);
    const auto b = static_cast<std::size_t>(r.secondary);
    if (a < n && b < n) {
      out.crosstalk.beta(a, b) = r.beta_hat;
      out.crosstalk.theta(a, b) = r.theta_hat;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

inline Json prediction_to_json(const MultipletPrediction& p) {
  Json j;
  j["format"] = "xtalk-prediction";
  j["version"] = kFormatVersion;
  j["primary"] = p.primary;
  j["secondaries"] = p.secondaries;
  j["rotation_angle"] = p.rotation_angle;
  Json contributions = Json::array();
  for (const auto& c : p.contributions) {
    contributions.push_back({{"secondary", c.secondary}, {"beta", c.beta}, {"theta", c.theta}});
  }
  j["contributions"] = std::move(contributions);
  j["phases"] = p.phases;
  j["predicted_z"] = p.predicted_z;
  j["chi2_per_dof"] =
      p.chi2_per_dof_vs_data ? detail::number_or_null(*p.chi2_per_dof_vs_data) : Json(nullptr);
  return j;
}

inline MultipletPrediction prediction_from_json(const nlohmann::json& j,
                                                const std::string& path = "prediction") {
  using detail::get_field;
  detail::check_header(j, "xtalk-prediction", path);
  MultipletPrediction p;
  p.primary = get_field<int>(j, "primary", path);
  p.secondaries = get_field<std::vector<int>>(j, "secondaries", path);
  p.rotation_angle = get_field<double>(j, "rotation_angle", path);
  for (const auto& c : detail::field(j, "contributions", path)) {
    p.contributions.push_back({get_field<int>(c, "secondary", path + ".contributions[]"),
                               get_field<double>(c, "beta", path + ".contributions[]"),
                               get_field<double>(c, "theta", path + ".contributions[]")});
  }
  p.phases = get_field<std::vector<double>>(j, "phases", path);
  p.predicted_z = get_field<std::vector<double>>(j, "predicted_z", path);
  const auto& chi2 = detail::field(j, "chi2_per_dof", path);
  if (!chi2.is_null()) p.chi2_per_dof_vs_data = detail::get_as<double>(chi2, path + ".chi2_per_dof");
  return p;
}

inline std::string prediction_to_csv(const MultipletPrediction& p) {
  std::string out = "delta_phi,z_pred\n";
  for (std::size_t i = 0; i < p.phases.size(); ++i) {
    out += detail::csv_number(p.phases[i]) + "," + detail::csv_number(p.predicted_z[i]) + "\n";
  }
  return out;
}

// Data and prediction side by side for overlay plots.
inline std::string overlay_to_csv(const MultipletPrediction& p, const PhaseSweepDataset& ds) {
  std::string out = "delta_phi,z_data,sigma,z_pred,residual,near_pole\n";
  for (const auto& r : residual_report(p, ds)) {
    out += detail::csv_number(r.delta_phi) + "," + detail::csv_number(r.observed) + "," +
           detail::csv_number(r.sigma) + "," + detail::csv_number(r.predicted) + "," +
           detail::csv_number(r.residual) + "," + (r.near_pole ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace xtalk
