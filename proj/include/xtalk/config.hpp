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

// Run configuration for the command-line pipeline. A single JSON document;
// command-line flags override the fields they name.
//
// {
//   "chip_file": "chip.json",            // or a "generate" block
//   "generate": {"qubits": 8, "beta_min": 0, "beta_max": 0.15, ...},
//   "protocol": {"phases": 33, "shots": 1000,
//                "rotation_angle": 7.853981633974483, "duration": 1.6e-7},
//   "oracle": {"levels": 2, "frame": "rotating_rwa", "time_step": 0,
//              "steps_per_period": 200, "include_delays": false},
//   "fit": {"beta_max": 0.5, "poor_fit_chi2": 3, "bootstrap_samples": 0},
//   "verify": {"random": 40, "secondaries": [2, 3]}   // or "multiplets"
//   "output_dir": "out",
//   "master_seed": 1,
//   "threads": 0
// }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xtalk/errors.hpp"
#include "xtalk/experiment.hpp"
#include "xtalk/fitting.hpp"
#include "xtalk/io.hpp"
#include "xtalk/oracle.hpp"
#include "xtalk/synthetic.hpp"

namespace xtalk {

struct Multiplet {
  int primary = 0;
  std::vector<int> secondaries;

  friend bool operator==(const Multiplet&, const Multiplet&) = default;
  friend auto operator<=>(const Multiplet&, const Multiplet&) = default;
};

struct VerifySpec {
  // Explicit multiplets take precedence over random selection.
  std::vector<Multiplet> multiplets;
  int random = 40;
  // Secondary counts to draw: 2 for triplets, 3 for quadruplets.
  std::vector<int> secondary_counts{2, 3};
};

struct RunConfig {
  std::optional<std::filesystem::path> chip_file;
  GenerateSpec generate;
  bool generate_seed_set = false;
  Protocol protocol;
  SimulationConfig oracle;
  FitOptions fit;
  VerifySpec verify;
  std::vector<std::pair<int, int>> pairs;
  std::filesystem::path output_dir = "xtalk_out";
  std::uint64_t master_seed = 1;
  unsigned threads = 0;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ConfigError(path + "." + it.key() + ": unknown field");
    }
  }
}

template <class T>
void read_optional(const nlohmann::json& j, const char* key, const std::string& path, T& out) {
  if (j.contains(key)) out = get_as<T>(j[key], path + "." + key);
}

}  // namespace detail

// Parses "a:b" into a directed pair.
inline std::pair<int, int> parse_pair(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
    std::size_t used = 0;
    const int a = std::stoi(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("bad primary");
    const std::string rest = text.substr(colon + 1);
    const int b = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("bad secondary");
    return {a, b};
  } catch (const std::exception&) {
    throw ConfigError("invalid pair '" + text + "', expected primary:secondary");
  }
}

// Parses "a:b,c[,d]" into a multiplet.
inline Multiplet parse_multiplet(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("invalid multiplet '" + text + "', expected primary:s1,s2");
  }
  Multiplet m;
  try {
    std::size_t used = 0;
    m.primary = std::stoi(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("bad primary");
    std::string rest = text.substr(colon + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto comma = rest.find(',', start);
      const std::string item = rest.substr(start, comma - start);
      m.secondaries.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument("bad secondary");
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } catch (const std::exception&) {
    throw ConfigError("invalid multiplet '" + text + "', expected primary:s1,s2");
  }
  return m;
}

inline RunConfig parse_run_config(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {},
                                  const std::string& path = "config") {
  using detail::get_as;
  using detail::read_optional;
  detail::reject_unknown_keys(j,
                              {"chip_file", "generate", "protocol", "oracle", "fit", "verify",
                               "pairs", "output_dir", "master_seed", "threads"},
                              path);
  RunConfig c;
  if (j.contains("chip_file")) {
    std::filesystem::path p = get_as<std::string>(j["chip_file"], path + ".chip_file");
    c.chip_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  read_optional(j, "master_seed", path, c.master_seed);
  read_optional(j, "threads", path, c.threads);
  if (j.contains("output_dir")) {
    std::filesystem::path p = get_as<std::string>(j["output_dir"], path + ".output_dir");
    c.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }

  if (j.contains("generate")) {
    const auto& g = j["generate"];
    const std::string gp = path + ".generate";
    detail::reject_unknown_keys(g,
                                {"qubits", "beta_min", "beta_max", "base_frequency_hz",
                                 "frequency_spacing_hz", "anharmonicity_hz",
                                 "max_delay_offset", "readout", "disabled_readout", "ring",
                                 "seed"},
                                gp);
    read_optional(g, "qubits", gp, c.generate.qubit_count);
    read_optional(g, "beta_min", gp, c.generate.beta_min);
    read_optional(g, "beta_max", gp, c.generate.beta_max);
    read_optional(g, "base_frequency_hz", gp, c.generate.base_frequency_hz);
    read_optional(g, "frequency_spacing_hz", gp, c.generate.frequency_spacing_hz);
    read_optional(g, "anharmonicity_hz", gp, c.generate.anharmonicity_hz);
    read_optional(g, "max_delay_offset", gp, c.generate.max_delay_offset);
    read_optional(g, "disabled_readout", gp, c.generate.disabled_readout);
    read_optional(g, "ring", gp, c.generate.ring_topology);
    if (g.contains("seed")) {
      c.generate.seed = get_as<std::uint64_t>(g["seed"], gp + ".seed");
      c.generate_seed_set = true;
    }
    if (g.contains("readout")) {
      const auto r = get_as<std::vector<double>>(g["readout"], gp + ".readout");
      if (r.size() != 2) throw ConfigError(gp + ".readout: expected [p0_given_0, p1_given_1]");
      try {
        c.generate.readout = ReadoutErrorModel(r[0], r[1]);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(gp + ".readout: " + e.what());
      }
    }
    try {
      validate_generate_spec(c.generate);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  if (j.contains("protocol")) {
    const auto& p = j["protocol"];
    const std::string pp = path + ".protocol";
    detail::reject_unknown_keys(p, {"phases", "shots", "rotation_angle", "duration", "shape"}, pp);
    read_optional(p, "phases", pp, c.protocol.phase_count);
    read_optional(p, "shots", pp, c.protocol.shots);
    read_optional(p, "rotation_angle", pp, c.protocol.rotation_angle);
    read_optional(p, "duration", pp, c.protocol.duration);
    if (p.contains("shape")) {
      try {
        c.protocol.shape = envelope_shape_from_string(get_as<std::string>(p["shape"], pp + ".shape"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(pp + ".shape: " + e.what());
      }
    }
  }
  try {
    validate_protocol(c.protocol);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }

  if (j.contains("oracle")) {
    const auto& o = j["oracle"];
    const std::string op = path + ".oracle";
    detail::reject_unknown_keys(
        o, {"levels", "frame", "time_step", "steps_per_period", "include_delays"}, op);
    read_optional(o, "levels", op, c.oracle.levels);
    read_optional(o, "time_step", op, c.oracle.time_step);
    read_optional(o, "steps_per_period", op, c.oracle.steps_per_period);
    read_optional(o, "include_delays", op, c.oracle.include_delays);
    if (o.contains("frame")) {
      try {
        c.oracle.frame = frame_from_string(get_as<std::string>(o["frame"], op + ".frame"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(op + ".frame: " + e.what());
      }
    }
  }
  try {
    validate_simulation_config(c.oracle);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ".oracle: " + e.what());
  }

  if (j.contains("fit")) {
    const auto& f = j["fit"];
    const std::string fp = path + ".fit";
    detail::reject_unknown_keys(f,
                                {"beta_max", "beta_step", "theta_steps", "tolerance",
                                 "beta_floor", "poor_fit_chi2", "max_iterations",
                                 "bootstrap_samples"},
                                fp);
    read_optional(f, "beta_max", fp, c.fit.beta_max);
    read_optional(f, "beta_step", fp, c.fit.beta_step);
    read_optional(f, "theta_steps", fp, c.fit.theta_steps);
    read_optional(f, "tolerance", fp, c.fit.tolerance);
    read_optional(f, "beta_floor", fp, c.fit.beta_floor);
    read_optional(f, "poor_fit_chi2", fp, c.fit.poor_fit_chi2);
    read_optional(f, "max_iterations", fp, c.fit.max_iterations);
    read_optional(f, "bootstrap_samples", fp, c.fit.bootstrap_samples);
    if (!(c.fit.beta_max > 0.0) || !(c.fit.beta_step > 0.0) || c.fit.theta_steps < 1 ||
        !(c.fit.tolerance > 0.0) || c.fit.max_iterations < 1 || c.fit.bootstrap_samples < 0) {
      throw ConfigError(fp + ": grid sizes, steps and tolerances must be positive");
    }
  }

  if (j.contains("verify")) {
    const auto& v = j["verify"];
    const std::string vp = path + ".verify";
    detail::reject_unknown_keys(v, {"random", "secondaries", "multiplets"}, vp);
    read_optional(v, "random", vp, c.verify.random);
    read_optional(v, "secondaries", vp, c.verify.secondary_counts);
    if (v.contains("multiplets")) {
      for (const auto& m : v["multiplets"]) {
        const auto ids = get_as<std::vector<int>>(m, vp + ".multiplets[]");
        if (ids.size() < 2) {
          throw ConfigError(vp + ".multiplets[]: expected [primary, secondary, ...]");
        }
        c.verify.multiplets.push_back({ids[0], {ids.begin() + 1, ids.end()}});
      }
    }
    if (c.verify.random < 0) throw ConfigError(vp + ".random: must be >= 0");
    for (int s : c.verify.secondary_counts) {
      if (s < 1) throw ConfigError(vp + ".secondaries: counts must be >= 1");
    }
  }

  if (j.contains("pairs")) {
    for (const auto& p : j["pairs"]) {
      const auto ids = get_as<std::vector<int>>(p, path + ".pairs[]");
      if (ids.size() != 2) throw ConfigError(path + ".pairs[]: expected [primary, secondary]");
      c.pairs.emplace_back(ids[0], ids[1]);
    }
  }
  if (!c.generate_seed_set) c.generate.seed = c.master_seed;
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const auto j = parse_json_document(read_text_file(path), path.string());
  return parse_run_config(j, path.parent_path(), path.string());
}

}  // namespace xtalk
