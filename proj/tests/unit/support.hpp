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

#include <cmath>
#include <vector>

#include "xtalk/model.hpp"
#include "xtalk/oracle.hpp"

namespace xtalk::testing {

inline TransmonParams test_transmon() {
  return {Frequency::from_hz(5.0e9), Frequency::from_hz(-600e6)};
}

inline PulseEnvelope test_envelope(double rotation_angle) {
  return {EnvelopeShape::cosine, kDefaultDuration, rotation_angle};
}

// Own drive plus one secondary per (beta, theta), all at the target carrier.
inline std::vector<DriveTermInstance> drives_with(
    double rotation_angle, const std::vector<std::pair<double, double>>& secondaries) {
  const auto carrier = test_transmon().frequency;
  std::vector<DriveTermInstance> d;
  d.push_back({1.0, 0.0, 0.0, carrier, test_envelope(rotation_angle), 0.0});
  for (const auto& [beta, theta] : secondaries) {
    d.push_back({beta, theta, 0.0, carrier, test_envelope(rotation_angle), 0.0});
  }
  return d;
}

// Chip whose crosstalk matrices are given row-major; diagonal beta 1.
inline ChipGroundTruth small_chip(std::size_t n, const std::vector<double>& beta,
                                  const std::vector<double>& theta) {
  ChipGroundTruth chip;
  for (std::size_t q = 0; q < n; ++q) {
    const auto f = Frequency::from_hz(5.0e9 + 0.1e9 * static_cast<double>(q));
    chip.transmons.push_back({f, Frequency::from_hz(-600e6)});
    chip.drives.push_back({f, 0.0, {}});
  }
  chip.crosstalk.beta = SquareMatrix::from_row_major(n, beta);
  chip.crosstalk.theta = SquareMatrix::from_row_major(n, theta);
  chip.crosstalk.tau = SquareMatrix(n);
  chip.topology = ChipTopology::ring(static_cast<int>(n));
  chip.readout.assign(n, ReadoutErrorModel::ideal());
  return chip;
}

}  // namespace xtalk::testing
