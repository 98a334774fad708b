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

// Random synthetic chips for closed-loop studies.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "xtalk/model.hpp"
#include "xtalk/random.hpp"
#include "xtalk/readout.hpp"

namespace xtalk {

struct GenerateSpec {
  int qubit_count = 8;
  // Off-diagonal beta is uniform on [beta_min, beta_max]; theta uniform on
  // [-pi, pi).
  double beta_min = 0.0;
  double beta_max = 0.15;
  // Placeholder frequencies: base + q * spacing. Real device values are not
  // known; change them per chip.
  double base_frequency_hz = 5.0e9;
  double frequency_spacing_hz = 0.1e9;
  double anharmonicity_hz = -600e6;
  // Per-qubit delay offsets drawn uniform on [-max, max]; tau(j,k) is the
  // difference of offsets.
  double max_delay_offset = 0.0;
  ReadoutErrorModel readout{0.97, 0.95};
  std::vector<int> disabled_readout;
  // Ring couplers when true, otherwise none.
  bool ring_topology = true;
  std::uint64_t seed = 1;
};

inline void validate_generate_spec(const GenerateSpec& g) {
  if (g.qubit_count < 2) throw std::invalid_argument("generate.qubits must be >= 2");
  if (!(g.beta_min >= 0.0) || !(g.beta_max >= g.beta_min)) {
    throw std::invalid_argument("generate.beta range must satisfy 0 <= min <= max");
  }
  if (!(g.base_frequency_hz > 0.0)) {
    throw std::invalid_argument("generate.base_frequency_hz must be > 0");
  }
  if (!(g.max_delay_offset >= 0.0)) {
    throw std::invalid_argument("generate.max_delay_offset must be >= 0");
  }
  for (int q : g.disabled_readout) {
    if (q < 0 || q >= g.qubit_count) {
      throw std::invalid_argument("generate.disabled_readout entry " + std::to_string(q) +
                                  " is not a valid qubit");
    }
  }
}

inline ChipGroundTruth generate_chip(const GenerateSpec& g) {
  validate_generate_spec(g);
  const auto n = static_cast<std::size_t>(g.qubit_count);
  RandomStream stream(derive_seed(g.seed, {0x6368697000ULL}));
  ChipGroundTruth chip;
  for (std::size_t q = 0; q < n; ++q) {
    const auto f = Frequency::from_hz(g.base_frequency_hz + g.frequency_spacing_hz * q);
    chip.transmons.push_back({f, Frequency::from_hz(g.anharmonicity_hz)});
    chip.drives.push_back({f, 0.0, {}});
  }
  chip.crosstalk = CrosstalkMatrix::identity(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (j == k) continue;
      chip.crosstalk.beta(j, k) = g.beta_min + (g.beta_max - g.beta_min) * stream.uniform();
      chip.crosstalk.theta(j, k) = -kPi + kTwoPi * stream.uniform();
      // Guard the half-open range against rounding up to pi.
      if (chip.crosstalk.theta(j, k) >= kPi) chip.crosstalk.theta(j, k) = -kPi;
    }
  }
  std::vector<double> offsets(n, 0.0);
  if (g.max_delay_offset > 0.0) {
    for (auto& o : offsets) o = g.max_delay_offset * (2.0 * stream.uniform() - 1.0);
  }
  chip.crosstalk.tau = CrosstalkMatrix::delays_from_offsets(offsets);
  chip.topology = g.ring_topology ? ChipTopology::ring(g.qubit_count) : ChipTopology{};
  chip.topology.qubit_count = g.qubit_count;
  chip.topology.disabled_readout_qubits = g.disabled_readout;
  std::sort(chip.topology.disabled_readout_qubits.begin(),
            chip.topology.disabled_readout_qubits.end());
  chip.readout.assign(n, g.readout);
  return chip;
}

}  // namespace xtalk
