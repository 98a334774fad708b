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

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <numbers>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xtalk/readout.hpp"

namespace xtalk {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Maps any finite angle onto [-pi, pi).
inline double canonicalize_phase(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("canonicalize_phase: non-finite angle");
  }
  double r = x - kTwoPi * std::floor((x + kPi) / kTwoPi);
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

// Frequency value in cycles per second. Physics code reads angular() (rad/s);
// files carry hz() so that a file round trip is exact.
class Frequency {
 public:
  constexpr Frequency() = default;

  static constexpr Frequency from_hz(double hz) { return Frequency(hz); }
  static constexpr Frequency from_angular(double rad_per_s) {
    return Frequency(rad_per_s / kTwoPi);
  }

  constexpr double hz() const { return hz_; }
  constexpr double angular() const { return kTwoPi * hz_; }

  friend constexpr auto operator<=>(const Frequency&,
                                    const Frequency&) = default;

 private:
  explicit constexpr Frequency(double hz) : hz_(hz) {}
  double hz_ = 0.0;
};

struct TransmonParams {
  Frequency frequency;
  // Negative by convention. Only used by the 3-level simulator.
  Frequency anharmonicity;

  friend bool operator==(const TransmonParams&,
                         const TransmonParams&) = default;
};

enum class EnvelopeShape { cosine, flat };

inline constexpr double kDefaultDuration = 160e-9;
inline constexpr double kDefaultRotationAngle = 2.5 * kPi;

struct PulseEnvelope {
  EnvelopeShape shape = EnvelopeShape::cosine;
  double duration = kDefaultDuration;
  // Pulse area: the integral of the Rabi rate over the pulse.
  double rotation_angle = kDefaultRotationAngle;

  // Rabi rate (rad/s) at time s after the pulse start; zero outside the pulse.
  double amplitude(double s) const {
    if (s < 0.0 || s > duration) return 0.0;
    switch (shape) {
      case EnvelopeShape::cosine: {
        const double peak = 2.0 * rotation_angle / duration;
        return 0.5 * peak * (1.0 - std::cos(kTwoPi * s / duration));
      }
      case EnvelopeShape::flat:
        return rotation_angle / duration;
    }
    return 0.0;
  }

  double peak_amplitude() const {
    return shape == EnvelopeShape::cosine ? 2.0 * rotation_angle / duration
                                          : rotation_angle / duration;
  }

  friend bool operator==(const PulseEnvelope&, const PulseEnvelope&) = default;
};

inline const char* to_string(EnvelopeShape shape) {
  return shape == EnvelopeShape::cosine ? "cosine" : "flat";
}

inline EnvelopeShape envelope_shape_from_string(const std::string& name) {
  if (name == "cosine") return EnvelopeShape::cosine;
  if (name == "flat") return EnvelopeShape::flat;
  throw std::invalid_argument("unknown envelope shape '" + name + "'");
}

struct DriveChannel {
  Frequency carrier_frequency;
  double software_phase = 0.0;
  PulseEnvelope envelope;

  friend bool operator==(const DriveChannel&, const DriveChannel&) = default;
};

// Dense row-major N x N matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0)
      : n_(n), data_(n * n, fill) {}

  static SquareMatrix from_row_major(std::size_t n, std::vector<double> values) {
    if (values.size() != n * n) {
      throw std::invalid_argument("matrix data has " +
                                  std::to_string(values.size()) +
                                  " entries, expected " +
                                  std::to_string(n * n));
    }
    SquareMatrix m;
    m.n_ = n;
    m.data_ = std::move(values);
    return m;
  }

  std::size_t size() const { return n_; }
  double& operator()(std::size_t j, std::size_t k) { return data_[j * n_ + k]; }
  double operator()(std::size_t j, std::size_t k) const {
    return data_[j * n_ + k];
  }
  std::span<const double> row_major() const { return data_; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// Directional drive crosstalk. Row j describes how every drive k acts on
// transmon j: relative strength beta(j,k), phase theta(j,k) and path delay
// tau(j,k).
struct CrosstalkMatrix {
  SquareMatrix beta;
  SquareMatrix theta;
  SquareMatrix tau;

  std::size_t size() const { return beta.size(); }

  static CrosstalkMatrix identity(std::size_t n) {
    CrosstalkMatrix m{SquareMatrix(n), SquareMatrix(n), SquareMatrix(n)};
    for (std::size_t j = 0; j < n; ++j) m.beta(j, j) = 1.0;
    return m;
  }

  // tau(j,k) = offsets[j] - offsets[k]; skew-symmetric by construction.
  static SquareMatrix delays_from_offsets(std::span<const double> offsets) {
    SquareMatrix tau(offsets.size());
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        tau(j, k) = offsets[j] - offsets[k];
      }
    }
    return tau;
  }

  friend bool operator==(const CrosstalkMatrix&,
                         const CrosstalkMatrix&) = default;
};

struct ChipTopology {
  int qubit_count = 0;
  // Unordered pairs stored as (min, max), sorted.
  std::vector<std::pair<int, int>> coupler_edges;
  std::vector<int> disabled_readout_qubits;

  static ChipTopology ring(int n) {
    ChipTopology t;
    t.qubit_count = n;
    for (int q = 0; q < n && n > 1; ++q) t.add_coupler(q, (q + 1) % n);
    return t;
  }

  void add_coupler(int a, int b) {
    std::pair<int, int> e{std::min(a, b), std::max(a, b)};
    auto it = std::lower_bound(coupler_edges.begin(), coupler_edges.end(), e);
    if (it == coupler_edges.end() || *it != e) coupler_edges.insert(it, e);
  }

  bool has_coupler(int a, int b) const {
    std::pair<int, int> e{std::min(a, b), std::max(a, b)};
    return std::binary_search(coupler_edges.begin(), coupler_edges.end(), e);
  }

  bool readout_enabled(int q) const {
    return std::find(disabled_readout_qubits.begin(),
                     disabled_readout_qubits.end(),
                     q) == disabled_readout_qubits.end();
  }

  friend bool operator==(const ChipTopology&, const ChipTopology&) = default;
};

struct ChipGroundTruth {
  std::vector<TransmonParams> transmons;
  std::vector<DriveChannel> drives;
  CrosstalkMatrix crosstalk;
  ChipTopology topology;
  std::vector<ReadoutErrorModel> readout;

  int qubit_count() const { return topology.qubit_count; }

  friend bool operator==(const ChipGroundTruth&,
                         const ChipGroundTruth&) = default;
};

struct ValidationOptions {
  double beta_diagonal_tolerance = 0.05;
  // Anharmonicity must be nonzero when the chip will be simulated with 3
  // levels.
  int levels = 2;
};

namespace detail {

inline std::string matrix_entry(const char* name, std::size_t j,
                                std::size_t k) {
  return std::string(name) + "[" + std::to_string(j) + "][" +
         std::to_string(k) + "]";
}

}  // namespace detail

// Reports every broken invariant; an empty result means the chip is valid.
inline std::vector<std::string> validate_chip(
    const ChipGroundTruth& chip, const ValidationOptions& options = {}) {
  std::vector<std::string> out;
  const int n = chip.topology.qubit_count;
  if (n <= 0) {
    out.emplace_back("topology.qubit_count must be positive");
    return out;
  }
  const auto un = static_cast<std::size_t>(n);
  auto check_len = [&](const char* field, std::size_t len) {
    if (len != un) {
      out.push_back(std::string(field) + " has length " + std::to_string(len) +
                    ", expected qubit_count " + std::to_string(n));
    }
  };
  check_len("transmons", chip.transmons.size());
  check_len("drives", chip.drives.size());
  check_len("readout", chip.readout.size());
  check_len("crosstalk.beta", chip.crosstalk.beta.size());
  check_len("crosstalk.theta", chip.crosstalk.theta.size());
  check_len("crosstalk.tau", chip.crosstalk.tau.size());
  if (!out.empty()) return out;

  for (std::size_t j = 0; j < un; ++j) {
    const auto& t = chip.transmons[j];
    const std::string tag = "transmons[" + std::to_string(j) + "]";
    if (!(t.frequency.hz() > 0.0) || !std::isfinite(t.frequency.hz())) {
      out.push_back(tag + ".frequency must be positive and finite");
    }
    if (!std::isfinite(t.anharmonicity.hz())) {
      out.push_back(tag + ".anharmonicity must be finite");
    } else if (options.levels >= 3 && t.anharmonicity.hz() == 0.0) {
      out.push_back(tag + ".anharmonicity must be nonzero for " +
                    std::to_string(options.levels) + "-level simulation");
    }
    const auto& d = chip.drives[j];
    const std::string dtag = "drives[" + std::to_string(j) + "]";
    if (!(d.carrier_frequency.hz() > 0.0) ||
        !std::isfinite(d.carrier_frequency.hz())) {
      out.push_back(dtag + ".carrier_frequency must be positive and finite");
    }
    if (!(d.software_phase >= -kPi && d.software_phase < kPi)) {
      out.push_back(dtag + ".software_phase must lie in [-pi, pi)");
    }
    if (!(d.envelope.duration > 0.0)) {
      out.push_back(dtag + ".envelope.duration must be positive");
    }
    if (!(d.envelope.rotation_angle >= 0.0)) {
      out.push_back(dtag + ".envelope.rotation_angle must be nonnegative");
    }
  }

  const auto& xt = chip.crosstalk;
  double tau_scale = 0.0;
  for (double v : xt.tau.row_major()) tau_scale = std::max(tau_scale, std::abs(v));
  const double tau_tol = 1e-12 * tau_scale;

  for (std::size_t j = 0; j < un; ++j) {
    for (std::size_t k = 0; k < un; ++k) {
      const double b = xt.beta(j, k);
      const double th = xt.theta(j, k);
      const double ta = xt.tau(j, k);
      if (!std::isfinite(b) || !std::isfinite(th) || !std::isfinite(ta)) {
        out.push_back("crosstalk entry (" + std::to_string(j) + ", " +
                      std::to_string(k) + ") must be finite");
        continue;
      }
      if (b < 0.0) {
        out.push_back(detail::matrix_entry("beta", j, k) +
                      ": beta must be nonnegative");
      }
      if (!(th >= -kPi && th < kPi)) {
        out.push_back(detail::matrix_entry("theta", j, k) +
                      ": theta must lie in [-pi, pi)");
      }
      if (j == k) {
        if (std::abs(b - 1.0) > options.beta_diagonal_tolerance) {
          out.push_back(detail::matrix_entry("beta", j, k) +
                        ": beta diagonal must be within " +
                        std::to_string(options.beta_diagonal_tolerance) +
                        " of 1");
        }
        if (th != 0.0) {
          out.push_back(detail::matrix_entry("theta", j, k) +
                        ": theta diagonal must be 0");
        }
        if (ta != 0.0) {
          out.push_back(detail::matrix_entry("tau", j, k) +
                        ": tau diagonal must be 0");
        }
      }
      if (ta + xt.tau(k, j) != 0.0) {
        out.push_back(detail::matrix_entry("tau", j, k) +
                      ": tau must be skew-symmetric");
      }
      if (std::abs(ta - (xt.tau(j, 0) - xt.tau(k, 0))) > tau_tol) {
        out.push_back(detail::matrix_entry("tau", j, k) +
                      ": tau must equal tau[j][0] - tau[k][0]");
      }
    }
  }

  const auto& topo = chip.topology;
  for (const auto& [a, b] : topo.coupler_edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      out.push_back("topology edge (" + std::to_string(a) + ", " +
                    std::to_string(b) + ") references an invalid qubit");
    } else if (a == b) {
      out.push_back("topology edge (" + std::to_string(a) + ", " +
                    std::to_string(b) + ") is a self-edge");
    }
  }
  for (int q : topo.disabled_readout_qubits) {
    if (q < 0 || q >= n) {
      out.push_back("topology.disabled_readout_qubits entry " +
                    std::to_string(q) + " is not a valid qubit");
    }
  }
  return out;
}

}  // namespace xtalk
