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

// Time-domain integration of the driven transmon Schrodinger equation for one
// target qubit under several simultaneous drives. Serves as the ground truth
// for the closed forms in analytic.hpp and as the data source for the
// synthetic experiments.
//
// The propagator is a fixed-step fourth-order Magnus integrator: two
// Gauss-Legendre samples per step and an exact matrix exponential, so every
// step is unitary to rounding.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "xtalk/analytic.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/model.hpp"
#include "xtalk/parallel.hpp"

namespace xtalk {

enum class Frame { lab, rotating_rwa };

inline const char* to_string(Frame frame) {
  return frame == Frame::lab ? "lab" : "rotating_rwa";
}

inline Frame frame_from_string(const std::string& name) {
  if (name == "lab") return Frame::lab;
  if (name == "rotating_rwa") return Frame::rotating_rwa;
  throw std::invalid_argument("unknown frame '" + name + "'");
}

struct SimulationConfig {
  int levels = 2;
  Frame frame = Frame::rotating_rwa;
  // Fixed step in seconds; 0 selects 1 / (steps_per_period * f_max), where
  // f_max is the fastest frequency present in the chosen frame.
  double time_step = 0.0;
  int steps_per_period = 200;
  bool include_delays = false;
  // Upper bound on the number of steps before reporting step underflow.
  std::size_t max_steps = 200'000'000;

  friend bool operator==(const SimulationConfig&,
                         const SimulationConfig&) = default;
};

// One drive as seen by the target qubit j: the matrix entries of row j for
// drive k, drive k's software phase and carrier, and its envelope.
struct DriveTermInstance {
  double beta = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  Frequency carrier;
  PulseEnvelope envelope;
  double delay = 0.0;
};

using StateVector = std::vector<std::complex<double>>;

struct EvolutionResult {
  // Final state in the frame rotating at the target frequency.
  StateVector state;
  std::size_t steps = 0;
  double time_step = 0.0;
  double max_norm_deviation = 0.0;
};

struct QubitExpectations {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double leakage = 0.0;
};

// Pauli expectations on the {|0>, |1>} subspace with X = |0><1| + |1><0|,
// Y = -i|0><1| + i|1><0|, Z = |0><0| - |1><1|.
inline QubitExpectations expectation_xyz(const StateVector& state) {
  if (state.size() < 2) {
    throw std::invalid_argument("state must have at least 2 levels");
  }
  const auto c0 = state[0];
  const auto c1 = state[1];
  const auto cross = std::conj(c0) * c1;
  QubitExpectations e;
  const double p0 = std::norm(c0);
  const double p1 = std::norm(c1);
  e.x = 2.0 * cross.real();
  e.y = 2.0 * cross.imag();
  e.z = p0 - p1;
  double total = 0.0;
  for (const auto& c : state) total += std::norm(c);
  e.leakage = std::max(0.0, total - p0 - p1);
  return e;
}

namespace detail {

template <int Levels>
using HermitianMatrix = Eigen::Matrix<std::complex<double>, Levels, Levels>;
template <int Levels>
using Amplitudes = Eigen::Matrix<std::complex<double>, Levels, 1>;

template <int Levels>
class TransmonHamiltonian {
 public:
  TransmonHamiltonian(const TransmonParams& target,
                      const std::vector<DriveTermInstance>& drives,
                      const SimulationConfig& config)
      : drives_(drives), config_(config) {
    frame_omega_ = target.frequency.angular();
    anharmonicity_ = Levels >= 3 ? target.anharmonicity.angular() : 0.0;
    for (int n = 0; n < Levels; ++n) {
      const double dn = n;
      double e = 0.5 * anharmonicity_ * dn * (dn - 1.0);
      if (config.frame == Frame::lab) e += frame_omega_ * dn;
      diagonal_[n] = e;
      ladder_[n] = std::sqrt(dn);
    }
  }

  double delay(const DriveTermInstance& d) const {
    return config_.include_delays ? d.delay : 0.0;
  }

  HermitianMatrix<Levels> at(double t) const {
    HermitianMatrix<Levels> h = HermitianMatrix<Levels>::Zero();
    for (int n = 0; n < Levels; ++n) h(n, n) = diagonal_[n];
    for (const auto& d : drives_) {
      const double tau = delay(d);
      const double rabi = d.beta * d.envelope.amplitude(t - tau);
      if (rabi == 0.0) continue;
      const double w = d.carrier.angular();
      const double psi = d.theta + d.phi;
      if (config_.frame == Frame::lab) {
        const double c = rabi * std::cos(w * (t - tau) - psi);
        for (int n = 1; n < Levels; ++n) {
          h(n, n - 1) += c * ladder_[n];
          h(n - 1, n) += c * ladder_[n];
        }
      } else {
        const double chi = psi + w * tau - (w - frame_omega_) * t;
        const std::complex<double> c = std::polar(0.5 * rabi, chi);
        for (int n = 1; n < Levels; ++n) {
          h(n, n - 1) += c * ladder_[n];
          h(n - 1, n) += std::conj(c) * ladder_[n];
        }
      }
    }
    return h;
  }

  // Fastest angular frequency present in the generator.
  double max_angular_frequency() const {
    double f = std::abs(anharmonicity_) * (Levels >= 3 ? 1.0 : 0.0);
    double rabi = 0.0;
    for (const auto& d : drives_) {
      rabi += d.beta * d.envelope.peak_amplitude();
      const double w = d.carrier.angular();
      if (config_.frame == Frame::lab) {
        f = std::max(f, w);
      } else {
        f = std::max(f, std::abs(w - frame_omega_));
      }
    }
    if (config_.frame == Frame::lab) {
      f = std::max(f, std::abs(diagonal_[Levels - 1]));
    }
    return std::max(f, rabi * ladder_[Levels - 1]);
  }

  double frame_omega() const { return frame_omega_; }

 private:
  const std::vector<DriveTermInstance>& drives_;
  SimulationConfig config_;
  double frame_omega_ = 0.0;
  double anharmonicity_ = 0.0;
  double diagonal_[Levels] = {};
  double ladder_[Levels] = {};
};

// exp(-i M) for Hermitian M.
inline HermitianMatrix<2> unitary_exponential(const HermitianMatrix<2>& m) {
  const double m0 = 0.5 * (m(0, 0).real() + m(1, 1).real());
  const double mz = 0.5 * (m(0, 0).real() - m(1, 1).real());
  const double mx = m(0, 1).real();
  const double my = -m(0, 1).imag();
  const double r = std::sqrt(mx * mx + my * my + mz * mz);
  const double c = std::cos(r);
  const double s = sinc(r);
  const std::complex<double> i{0.0, 1.0};
  HermitianMatrix<2> traceless = m;
  traceless(0, 0) -= m0;
  traceless(1, 1) -= m0;
  HermitianMatrix<2> u =
      c * HermitianMatrix<2>::Identity() - i * s * traceless;
  return std::polar(1.0, -m0) * u;
}

template <int Levels>
HermitianMatrix<Levels> unitary_exponential(const HermitianMatrix<Levels>& m) {
  Eigen::SelfAdjointEigenSolver<HermitianMatrix<Levels>> solver(m);
  if (solver.info() != Eigen::Success) {
    throw IntegrationError("eigen-decomposition of step generator failed");
  }
  Amplitudes<Levels> phases;
  for (int n = 0; n < Levels; ++n) {
    phases(n) = std::polar(1.0, -solver.eigenvalues()(n));
  }
  const auto& v = solver.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

template <int Levels>
EvolutionResult evolve(const TransmonParams& target,
                       const std::vector<DriveTermInstance>& drives,
                       const SimulationConfig& config) {
  TransmonHamiltonian<Levels> hamiltonian(target, drives, config);

  double t_start = 0.0;
  double t_end = 0.0;
  for (const auto& d : drives) {
    const double tau = hamiltonian.delay(d);
    t_start = std::min(t_start, tau);
    t_end = std::max(t_end, tau + d.envelope.duration);
  }
  const double span = t_end - t_start;

  double step = config.time_step;
  if (step == 0.0) {
    const double f_max = hamiltonian.max_angular_frequency() / kTwoPi;
    step = f_max > 0.0 ? 1.0 / (config.steps_per_period * f_max) : span;
  }
  const double raw_steps = std::ceil(span / step);
  if (!(raw_steps <= static_cast<double>(config.max_steps)) ||
      !std::isfinite(raw_steps)) {
    std::ostringstream msg;
    msg << "step underflow: time step " << step << " s over a " << span
        << " s window needs more than " << config.max_steps << " steps";
    throw IntegrationError(msg.str());
  }
  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(raw_steps));
  const double h = span / static_cast<double>(steps);

  constexpr double kGaussOffset = 0.28867513459481287;  // sqrt(3) / 6
  constexpr double kCommutatorWeight = 0.14433756729740643;  // sqrt(3) / 12
  const std::complex<double> i{0.0, 1.0};

  Amplitudes<Levels> psi = Amplitudes<Levels>::Zero();
  psi(0) = 1.0;
  EvolutionResult result;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = t_start + h * static_cast<double>(s);
    const auto h1 = hamiltonian.at(t + (0.5 - kGaussOffset) * h);
    const auto h2 = hamiltonian.at(t + (0.5 + kGaussOffset) * h);
    HermitianMatrix<Levels> generator =
        0.5 * h * (h1 + h2) + i * (kCommutatorWeight * h * h) * (h1 * h2 - h2 * h1);
    // Symmetrize away rounding so the exponential stays unitary.
    generator = 0.5 * (generator + generator.adjoint()).eval();
    psi = unitary_exponential(generator) * psi;
    const double deviation = std::abs(psi.norm() - 1.0);
    result.max_norm_deviation = std::max(result.max_norm_deviation, deviation);
    if (!(deviation <= 1e-9)) {
      std::ostringstream msg;
      msg << "norm drift " << deviation << " at step " << s << " (t = " << t
          << " s, h = " << h << " s)";
      throw IntegrationError(msg.str());
    }
  }

  if (config.frame == Frame::lab) {
    for (int n = 0; n < Levels; ++n) {
      psi(n) *= std::polar(1.0, hamiltonian.frame_omega() * n * t_end);
    }
  }
  result.state.assign(psi.data(), psi.data() + Levels);
  result.steps = steps;
  result.time_step = h;
  return result;
}

}  // namespace detail

inline void validate_simulation_config(const SimulationConfig& config) {
  if (config.levels != 2 && config.levels != 3) {
    throw std::invalid_argument("levels must be 2 or 3, got " +
                                std::to_string(config.levels));
  }
  if (!(config.time_step >= 0.0) || !std::isfinite(config.time_step)) {
    throw std::invalid_argument("time_step must be >= 0 (0 = automatic)");
  }
  if (config.steps_per_period < 1) {
    throw std::invalid_argument("steps_per_period must be positive");
  }
}

// Evolves the target from |0> under all drives. drives must be nonempty.
inline EvolutionResult evolve_target_detailed(
    const TransmonParams& target, const std::vector<DriveTermInstance>& drives,
    const SimulationConfig& config) {
  validate_simulation_config(config);
  if (drives.empty()) {
    throw std::invalid_argument("evolve_target needs at least one drive");
  }
  if (config.levels == 3) return detail::evolve<3>(target, drives, config);
  return detail::evolve<2>(target, drives, config);
}

inline StateVector evolve_target(const TransmonParams& target,
                                 const std::vector<DriveTermInstance>& drives,
                                 const SimulationConfig& config) {
  return evolve_target_detailed(target, drives, config).state;
}

// <Z> of the target for each offset in delta_phi_grid. drives[0] is the
// target's own drive; every later entry is a secondary drive and receives
// the virtual Z rotation (phase -= delta_phi).
inline std::vector<double> rabi_curve(
    const TransmonParams& target, const std::vector<DriveTermInstance>& drives,
    const SimulationConfig& config, const std::vector<double>& delta_phi_grid,
    unsigned threads = 1) {
  if (delta_phi_grid.empty()) {
    throw std::invalid_argument("rabi_curve: empty phase grid");
  }
  std::vector<double> z(delta_phi_grid.size());
  parallel_for(delta_phi_grid.size(), threads, [&](std::size_t i) {
    std::vector<DriveTermInstance> shifted = drives;
    for (std::size_t k = 1; k < shifted.size(); ++k) {
      shifted[k].phi -= delta_phi_grid[i];
    }
    z[i] = expectation_xyz(evolve_target(target, shifted, config)).z;
  });
  return z;
}

}  // namespace xtalk
