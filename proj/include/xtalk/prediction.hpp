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

// Zero-free-parameter prediction of multi-drive curves from pairwise fits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xtalk/analytic.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/experiment.hpp"
#include "xtalk/fitting.hpp"

namespace xtalk {

struct Contribution {
  int secondary = 0;
  double beta = 0.0;
  double theta = 0.0;

  friend bool operator==(const Contribution&, const Contribution&) = default;
};

struct MultipletPrediction {
  int primary = 0;
  std::vector<int> secondaries;
  double rotation_angle = kDefaultRotationAngle;
  std::vector<double> phases;
  std::vector<double> predicted_z;
  std::vector<Contribution> contributions;
  std::optional<double> chi2_per_dof_vs_data;

  friend bool operator==(const MultipletPrediction&,
                         const MultipletPrediction&) = default;
};

inline MultipletPrediction predict_multiplet(const ChipFitReport& report, int a,
                                             const std::vector<int>& secondaries,
                                             const Protocol& protocol) {
  if (secondaries.empty()) {
    throw std::invalid_argument("predict_multiplet needs at least one secondary");
  }
  MultipletPrediction p;
  p.primary = a;
  p.secondaries = secondaries;
  p.rotation_angle = protocol.rotation_angle;
  p.phases = protocol.phases();

  MultiDriveSpec spec;
  spec.rotation_angle = protocol.rotation_angle;
  for (int k : secondaries) {
    const PairFitResult* fit = report.find(a, k);
    if (fit == nullptr) throw MissingPairError(a, k);
    p.contributions.push_back({k, fit->beta_hat, fit->theta_hat});
    spec.terms.push_back({fit->beta_hat, fit->theta_hat});
  }
  p.predicted_z.reserve(p.phases.size());
  for (double phi : p.phases) {
    spec.delta_phi = phi;
    p.predicted_z.push_back(predict_z_multi(spec));
  }
  return p;
}

inline void check_matching_grid(const MultipletPrediction& prediction,
                                const PhaseSweepDataset& dataset) {
  if (prediction.phases.size() != dataset.phases.size()) {
    throw std::invalid_argument("prediction and dataset have different phase grids");
  }
  for (std::size_t i = 0; i < dataset.phases.size(); ++i) {
    if (std::abs(prediction.phases[i] - dataset.phases[i]) > 1e-12) {
      throw std::invalid_argument("prediction and dataset phase grids differ at index " +
                                  std::to_string(i));
    }
  }
}

// chi^2 / nu of the data against the prediction; p = 0 because nothing was
// fitted to this data.
inline double score_prediction(const MultipletPrediction& prediction,
                               const PhaseSweepDataset& dataset) {
  check_matching_grid(prediction, dataset);
  return chi_squared_per_dof(dataset.observed_z, prediction.predicted_z,
                             dataset.sigma, 0);
}

struct ResidualPoint {
  double delta_phi = 0.0;
  double observed = 0.0;
  double predicted = 0.0;
  double sigma = 0.0;
  double residual = 0.0;
  double pull = 0.0;
  // Prediction within 0.1 of +-1, where cosine envelopes fail in practice.
  bool near_pole = false;
};

inline std::vector<ResidualPoint> residual_report(const MultipletPrediction& prediction,
                                                  const PhaseSweepDataset& dataset) {
  check_matching_grid(prediction, dataset);
  std::vector<ResidualPoint> out(dataset.phases.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& r = out[i];
    r.delta_phi = dataset.phases[i];
    r.observed = dataset.observed_z[i];
    r.predicted = prediction.predicted_z[i];
    r.sigma = dataset.sigma[i];
    r.residual = r.observed - r.predicted;
    r.pull = r.residual / r.sigma;
    r.near_pole = std::abs(r.predicted) > 0.9;
  }
  return out;
}

// Predictions for every nonempty subset of the secondaries: the full set
// first, then smaller subsets, lexicographic within each size.
inline std::vector<MultipletPrediction> decompose_accumulation(
    const ChipFitReport& report, int a, const std::vector<int>& secondaries,
    const Protocol& protocol) {
  std::vector<int> sorted = secondaries;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() > 16) throw std::invalid_argument("too many secondaries");
  const std::size_t n = sorted.size();
  std::vector<std::vector<int>> subsets;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<int> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) s.push_back(sorted[i]);
    }
    subsets.push_back(std::move(s));
  }
  std::sort(subsets.begin(), subsets.end(), [](const auto& l, const auto& r) {
    if (l.size() != r.size()) return l.size() > r.size();
    return l < r;
  });
  std::vector<MultipletPrediction> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) out.push_back(predict_multiplet(report, a, s, protocol));
  return out;
}

}  // namespace xtalk
