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

// Closed-form expectation values of a resonantly driven two-level qubit whose
// control field is corrupted by coherent crosstalk from other drives.
//
// Phase convention: a virtual Z rotation by delta_phi on a secondary drive
// shifts that drive's phase by -delta_phi, so for drive phases (phi_a, phi_b)
// the effective offset is delta_phi = phi_a - phi_b.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "xtalk/model.hpp"

namespace xtalk {

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  double norm_squared() const { return x * x + y * y + z * z; }
};

// sin(x)/x, with the series used for |x| < 1e-4.
inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

inline void require_nonnegative_beta(double beta) {
  if (!(beta >= 0.0)) {
    throw std::invalid_argument("crosstalk strength beta must be >= 0");
  }
}

inline double eta_pair(double beta, double theta, double delta_phi) {
  require_nonnegative_beta(beta);
  const double s = 1.0 + beta * beta + 2.0 * beta * std::cos(delta_phi - theta);
  // s >= (1 - beta)^2 >= 0 analytically; rounding can leave -1e-17.
  return std::sqrt(std::max(s, 0.0));
}

// First-order expansion of eta_pair in beta.
inline double eta_weak(double beta, double theta, double delta_phi) {
  require_nonnegative_beta(beta);
  return 1.0 + beta * std::cos(delta_phi - theta);
}

struct PairwiseDriveSpec {
  double beta_ab = 0.0;
  double theta_ab = 0.0;
  double phi_a = 0.0;
  double phi_b = 0.0;
  double rotation_angle = kDefaultRotationAngle;
};

// Bloch vector of qubit a after both drives, using the drive phases in spec.
inline BlochVector pair_expectations(const PairwiseDriveSpec& spec) {
  require_nonnegative_beta(spec.beta_ab);
  const double eta =
      eta_pair(spec.beta_ab, spec.theta_ab, spec.phi_a - spec.phi_b);
  const double angle = eta * spec.rotation_angle;
  // sin(eta * angle_hat) / eta, finite at eta = 0.
  const double scale = spec.rotation_angle * sinc(angle);
  BlochVector v;
  v.x = (std::sin(spec.phi_a) +
         spec.beta_ab * std::sin(spec.theta_ab + spec.phi_b)) *
        scale;
  v.y = (std::cos(spec.phi_a) +
         spec.beta_ab * std::cos(spec.theta_ab + spec.phi_b)) *
        scale;
  v.z = std::cos(angle);
  return v;
}

// As above with an additional virtual Z rotation by delta_phi on drive b.
inline BlochVector pair_expectations(PairwiseDriveSpec spec, double delta_phi) {
  spec.phi_b -= delta_phi;
  return pair_expectations(spec);
}

struct CrosstalkTerm {
  double beta = 0.0;
  double theta = 0.0;
};

struct MultiDriveSpec {
  double rotation_angle = kDefaultRotationAngle;
  std::vector<CrosstalkTerm> terms;
  double delta_phi = 0.0;
};

// eta = |1 + sum_k beta_k exp(i (theta_k - delta_phi))|. One term gives
// eta_pair; two terms give the three-qubit expression.
inline double eta_multi(const MultiDriveSpec& spec) {
  std::complex<double> sum{1.0, 0.0};
  for (const auto& term : spec.terms) {
    require_nonnegative_beta(term.beta);
    sum += std::polar(term.beta, term.theta - spec.delta_phi);
  }
  return std::abs(sum);
}

inline double predict_z_multi(const MultiDriveSpec& spec) {
  return std::cos(spec.rotation_angle * eta_multi(spec));
}

}  // namespace xtalk
