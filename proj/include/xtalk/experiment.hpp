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

// Synthetic simultaneous-Rabi experiments: noiseless oracle curves are turned
// into finite-shot, readout-corrupted and then mitigated <Z> records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "xtalk/model.hpp"
#include "xtalk/oracle.hpp"
#include "xtalk/parallel.hpp"
#include "xtalk/random.hpp"
#include "xtalk/readout.hpp"

namespace xtalk {

inline constexpr double kSigmaFloor = 1e-3;

struct ShotCounts {
  std::int64_t n0 = 0;
  std::int64_t n1 = 0;

  std::int64_t total() const { return n0 + n1; }
  friend bool operator==(const ShotCounts&, const ShotCounts&) = default;
};

inline ShotCounts sample_counts(double p_excited, std::int64_t shots,
                                RandomStream& stream) {
  if (!(p_excited >= 0.0 && p_excited <= 1.0)) {
    throw std::invalid_argument("sample_counts: probability outside [0, 1]");
  }
  if (shots < 1) throw std::invalid_argument("sample_counts: shots must be >= 1");
  ShotCounts c;
  for (std::int64_t s = 0; s < shots; ++s) {
    if (stream.bernoulli(p_excited)) {
      ++c.n1;
    } else {
      ++c.n0;
    }
  }
  return c;
}

// Flips each shot independently according to the confusion model.
inline ShotCounts apply_readout_error(const ShotCounts& counts,
                                      const ReadoutErrorModel& model,
                                      RandomStream& stream) {
  if (model.is_ideal()) return counts;
  ShotCounts out;
  const double flip0 = 1.0 - model.p0_given_0();
  const double flip1 = 1.0 - model.p1_given_1();
  for (std::int64_t s = 0; s < counts.n0; ++s) {
    if (stream.bernoulli(flip0)) {
      ++out.n1;
    } else {
      ++out.n0;
    }
  }
  for (std::int64_t s = 0; s < counts.n1; ++s) {
    if (stream.bernoulli(flip1)) {
      ++out.n0;
    } else {
      ++out.n1;
    }
  }
  return out;
}

struct MitigatedFrequencies {
  double f0 = 1.0;
  double f1 = 0.0;
  // The raw inverse left [0, 1] and was clipped.
  bool clipped = false;
};

// Applies the inverse confusion matrix to observed frequencies.
inline MitigatedFrequencies mitigate_readout(double f0, double f1,
                                             const ReadoutErrorModel& model) {
  const double total = f0 + f1;
  if (!(total > 0.0)) {
    throw std::invalid_argument("mitigate_readout: frequencies sum to zero");
  }
  const double observed1 = f1 / total;
  const double corrected1 =
      (observed1 - (1.0 - model.p0_given_0())) / model.contrast();
  MitigatedFrequencies out;
  out.clipped = corrected1 < 0.0 || corrected1 > 1.0;
  out.f1 = std::clamp(corrected1, 0.0, 1.0);
  out.f0 = 1.0 - out.f1;
  return out;
}

// Standard deviation of a mitigated <Z> estimate: binomial noise on the raw
// excited fraction, scaled by the inverse's gain 1 / (p0|0 + p1|1 - 1).
inline double sigma_from_counts(double corrected_z, std::int64_t shots,
                                const ReadoutErrorModel& model) {
  if (shots < 2) throw std::invalid_argument("sigma_from_counts: shots must be >= 2");
  const double p = std::clamp(0.5 * (1.0 - corrected_z), 0.0, 1.0);
  const double raw = model.forward_excited(p);
  const double sigma = 2.0 * std::sqrt(raw * (1.0 - raw) / static_cast<double>(shots)) /
                       model.contrast();
  return std::max(sigma, kSigmaFloor);
}

struct Protocol {
  int phase_count = 33;
  std::int64_t shots = 1000;
  double rotation_angle = kDefaultRotationAngle;
  double duration = kDefaultDuration;
  EnvelopeShape shape = EnvelopeShape::cosine;

  // phase_count points, uniform on [0, 2 pi).
  std::vector<double> phases() const {
    std::vector<double> out(static_cast<std::size_t>(phase_count));
    for (int i = 0; i < phase_count; ++i) out[i] = kTwoPi * i / phase_count;
    return out;
  }

  PulseEnvelope envelope() const { return {shape, duration, rotation_angle}; }

  friend bool operator==(const Protocol&, const Protocol&) = default;
};

inline void validate_protocol(const Protocol& p) {
  if (p.phase_count < 1) throw std::invalid_argument("protocol.phases must be >= 1");
  if (p.shots < 2) throw std::invalid_argument("protocol.shots must be >= 2");
  if (!(p.rotation_angle >= 0.0)) {
    throw std::invalid_argument("protocol.rotation_angle must be >= 0");
  }
  if (!(p.duration > 0.0)) throw std::invalid_argument("protocol.duration must be > 0");
}

struct PhaseSweepDataset {
  int primary = 0;
  std::vector<int> secondaries;
  double rotation_angle = kDefaultRotationAngle;
  double duration = kDefaultDuration;
  std::int64_t shots = 0;
  std::uint64_t seed = 0;
  std::vector<double> phases;
  std::vector<double> observed_z;
  std::vector<double> sigma;
  // Points where readout mitigation overshot [0, 1] and was clipped.
  std::vector<bool> clipped;

  std::size_t size() const { return phases.size(); }

  friend bool operator==(const PhaseSweepDataset&,
                         const PhaseSweepDataset&) = default;
};

struct ExperimentOptions {
  SimulationConfig oracle;
  unsigned threads = 1;
};

// Oracle drive list for primary a: its own drive first, then each secondary
// drive retuned to a's carrier.
inline std::vector<DriveTermInstance> experiment_drives(
    const ChipGroundTruth& chip, int a, const std::vector<int>& secondaries,
    const PulseEnvelope& envelope) {
  const auto& xt = chip.crosstalk;
  const auto ua = static_cast<std::size_t>(a);
  const Frequency carrier = chip.drives[ua].carrier_frequency;
  std::vector<DriveTermInstance> drives;
  drives.push_back({xt.beta(ua, ua), xt.theta(ua, ua),
                    chip.drives[ua].software_phase, carrier, envelope,
                    xt.tau(ua, ua)});
  for (int k : secondaries) {
    const auto uk = static_cast<std::size_t>(k);
    drives.push_back({xt.beta(ua, uk), xt.theta(ua, uk),
                      chip.drives[uk].software_phase, carrier, envelope,
                      xt.tau(ua, uk)});
  }
  return drives;
}

inline void check_experiment_qubits(const ChipGroundTruth& chip, int a,
                                    const std::vector<int>& secondaries) {
  const int n = chip.qubit_count();
  if (a < 0 || a >= n) {
    throw std::invalid_argument("primary qubit " + std::to_string(a) +
                                " out of range");
  }
  if (!chip.topology.readout_enabled(a)) {
    throw std::invalid_argument("qubit " + std::to_string(a) +
                                " has disabled readout and cannot be primary");
  }
  if (secondaries.empty()) {
    throw std::invalid_argument("experiment needs at least one secondary");
  }
  for (std::size_t i = 0; i < secondaries.size(); ++i) {
    const int k = secondaries[i];
    if (k < 0 || k >= n) {
      throw std::invalid_argument("secondary qubit " + std::to_string(k) +
                                  " out of range");
    }
    if (k == a) throw std::invalid_argument("secondary equals primary");
    for (std::size_t j = 0; j < i; ++j) {
      if (secondaries[j] == k) {
        throw std::invalid_argument("duplicate secondary " + std::to_string(k));
      }
    }
  }
}

// Simultaneous drive of a and all secondaries with a common virtual Z offset
// on the secondaries, swept over the protocol phases.
inline PhaseSweepDataset run_multiplet_experiment(
    const ChipGroundTruth& chip, int a, const std::vector<int>& secondaries,
    const Protocol& protocol, std::uint64_t seed,
    const ExperimentOptions& options = {}) {
  validate_protocol(protocol);
  check_experiment_qubits(chip, a, secondaries);

  PhaseSweepDataset ds;
  ds.primary = a;
  ds.secondaries = secondaries;
  ds.rotation_angle = protocol.rotation_angle;
  ds.duration = protocol.duration;
  ds.shots = protocol.shots;
  ds.seed = seed;
  ds.phases = protocol.phases();

  const auto drives =
      experiment_drives(chip, a, secondaries, protocol.envelope());
  const auto& target = chip.transmons[static_cast<std::size_t>(a)];
  const auto& readout = chip.readout[static_cast<std::size_t>(a)];

  const std::size_t n = ds.phases.size();
  ds.observed_z.resize(n);
  ds.sigma.resize(n);
  ds.clipped.resize(n);
  std::vector<char> clipped(n, 0);
  parallel_for(n, options.threads, [&](std::size_t i) {
    std::vector<DriveTermInstance> shifted = drives;
    for (std::size_t k = 1; k < shifted.size(); ++k) shifted[k].phi -= ds.phases[i];
    const double z_true =
        expectation_xyz(evolve_target(target, shifted, options.oracle)).z;

    std::vector<std::uint64_t> keys;
    keys.push_back(secondaries.size());
    keys.push_back(static_cast<std::uint64_t>(a));
    for (int k : secondaries) keys.push_back(static_cast<std::uint64_t>(k));
    keys.push_back(i);
    RandomStream stream(derive_seed(seed, keys));

    const double p_excited = std::clamp(0.5 * (1.0 - z_true), 0.0, 1.0);
    const auto counts = apply_readout_error(
        sample_counts(p_excited, protocol.shots, stream), readout, stream);
    const double shots = static_cast<double>(counts.total());
    const auto mitigated = mitigate_readout(counts.n0 / shots, counts.n1 / shots, readout);
    const double z = mitigated.f0 - mitigated.f1;
    ds.observed_z[i] = z;
    ds.sigma[i] = sigma_from_counts(z, protocol.shots, readout);
    clipped[i] = mitigated.clipped ? 1 : 0;
  });
  for (std::size_t i = 0; i < n; ++i) ds.clipped[i] = clipped[i] != 0;
  return ds;
}

inline PhaseSweepDataset run_pair_experiment(const ChipGroundTruth& chip, int a,
                                             int b, const Protocol& protocol,
                                             std::uint64_t seed,
                                             const ExperimentOptions& options = {}) {
  return run_multiplet_experiment(chip, a, {b}, protocol, seed, options);
}

}  // namespace xtalk
