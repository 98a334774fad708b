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

// Learning the directional crosstalk (beta, theta) of one qubit pair from a
// phase-sweep record, and whole-chip aggregation of the pair fits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "xtalk/analytic.hpp"
#include "xtalk/experiment.hpp"
#include "xtalk/model.hpp"
#include "xtalk/parallel.hpp"
#include "xtalk/random.hpp"

namespace xtalk {

// (1 / (N - p)) * sum_i ((O_i - M_i) / sigma_i)^2
inline double chi_squared_per_dof(std::span<const double> observed,
                                  std::span<const double> model,
                                  std::span<const double> sigma, int n_params) {
  if (observed.size() != model.size() || observed.size() != sigma.size()) {
    throw std::invalid_argument("chi_squared_per_dof: length mismatch");
  }
  if (n_params < 0 || observed.size() <= static_cast<std::size_t>(n_params)) {
    throw std::invalid_argument(
        "chi_squared_per_dof: need more points than parameters");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(sigma[i] > 0.0)) {
      throw std::invalid_argument("chi_squared_per_dof: sigma must be > 0");
    }
    const double r = (observed[i] - model[i]) / sigma[i];
    sum += r * r;
  }
  return sum / static_cast<double>(observed.size() - static_cast<std::size_t>(n_params));
}

struct FitFlags {
  bool theta_unidentifiable = false;
  bool boundary_hit = false;
  bool poor_fit = false;

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    if (theta_unidentifiable) out.emplace_back("theta_unidentifiable");
    if (boundary_hit) out.emplace_back("boundary_hit");
    if (poor_fit) out.emplace_back("poor_fit");
    return out;
  }

  void set(const std::string& name) {
    if (name == "theta_unidentifiable") {
      theta_unidentifiable = true;
    } else if (name == "boundary_hit") {
      boundary_hit = true;
    } else if (name == "poor_fit") {
      poor_fit = true;
    } else {
      throw std::invalid_argument("unknown fit flag '" + name + "'");
    }
  }

  friend bool operator==(const FitFlags&, const FitFlags&) = default;
};

struct PairFitResult {
  int primary = 0;
  int secondary = 0;
  double beta_hat = 0.0;
  double theta_hat = 0.0;
  double chi2_per_dof = 0.0;
  double beta_stderr = std::numeric_limits<double>::infinity();
  double theta_stderr = std::numeric_limits<double>::infinity();
  FitFlags flags;

  friend bool operator==(const PairFitResult&, const PairFitResult&) = default;
};

struct FitOptions {
  double beta_max = 0.5;
  double beta_step = 0.01;
  int theta_steps = 64;
  // Parameter tolerance of the local refinement.
  double tolerance = 1e-5;
  // Below this beta the phase is not identifiable.
  double beta_floor = 0.005;
  double poor_fit_chi2 = 3.0;
  int max_iterations = 5000;
  // > 0 replaces the curvature-based uncertainties by a parametric bootstrap.
  int bootstrap_samples = 0;
  std::uint64_t bootstrap_seed = 0;
};

// Pair model <Z>(delta_phi) = cos(rotation_angle * eta_pair).
inline double pair_model_z(double rotation_angle, double beta, double theta,
                           double delta_phi) {
  return std::cos(rotation_angle * eta_pair(beta, theta, delta_phi));
}

namespace detail {

// Total chi-square of the pair model. A negative beta is read as
// (|beta|, theta + pi), which describes the same curve.
class PairObjective {
 public:
  PairObjective(double rotation_angle, std::span<const double> phases,
                std::span<const double> observed, std::span<const double> sigma)
      : rotation_angle_(rotation_angle),
        phases_(phases),
        observed_(observed),
        sigma_(sigma) {}

  double operator()(double beta, double theta) const {
    if (beta < 0.0) {
      beta = -beta;
      theta += kPi;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < phases_.size(); ++i) {
      const double r =
          (observed_[i] - pair_model_z(rotation_angle_, beta, theta, phases_[i])) /
          sigma_[i];
      sum += r * r;
    }
    return sum;
  }

  std::vector<double> curve(double beta, double theta) const {
    std::vector<double> out(phases_.size());
    for (std::size_t i = 0; i < phases_.size(); ++i) {
      out[i] = pair_model_z(rotation_angle_, beta, theta, phases_[i]);
    }
    return out;
  }

 private:
  double rotation_angle_;
  std::span<const double> phases_;
  std::span<const double> observed_;
  std::span<const double> sigma_;
};

struct SimplexResult {
  std::array<double, 2> x{};
  double value = 0.0;
  bool converged = false;
};

// Nelder-Mead in two dimensions with standard coefficients.
template <class F>
SimplexResult nelder_mead(const F& f, std::array<double, 2> start,
                          std::array<double, 2> scale, double tolerance,
                          int max_iterations) {
  using Point = std::array<double, 2>;
  std::array<Point, 3> p{start, start, start};
  p[1][0] += scale[0];
  p[2][1] += scale[1];
  std::array<double, 3> v{f(p[0][0], p[0][1]), f(p[1][0], p[1][1]),
                          f(p[2][0], p[2][1])};
  auto eval = [&](const Point& q) { return f(q[0], q[1]); };
  auto lerp = [](const Point& a, const Point& b, double t) {
    return Point{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
  };

  SimplexResult out;
  for (int it = 0; it < max_iterations; ++it) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
    const int best = order[0], mid = order[1], worst = order[2];

    double spread = 0.0;
    for (int k : {mid, worst}) {
      for (int d = 0; d < 2; ++d) {
        spread = std::max(spread, std::abs(p[k][d] - p[best][d]));
      }
    }
    if (spread < tolerance) {
      out.converged = true;
      break;
    }

    const Point centroid{0.5 * (p[best][0] + p[mid][0]),
                         0.5 * (p[best][1] + p[mid][1])};
    const Point reflected = lerp(centroid, p[worst], -1.0);
    const double fr = eval(reflected);
    if (fr < v[best]) {
      const Point expanded = lerp(centroid, p[worst], -2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        p[worst] = expanded;
        v[worst] = fe;
      } else {
        p[worst] = reflected;
        v[worst] = fr;
      }
      continue;
    }
    if (fr < v[mid]) {
      p[worst] = reflected;
      v[worst] = fr;
      continue;
    }
    const bool outside = fr < v[worst];
    const Point contracted =
        outside ? lerp(centroid, reflected, 0.5) : lerp(centroid, p[worst], 0.5);
    const double fc = eval(contracted);
    if (fc < (outside ? fr : v[worst])) {
      p[worst] = contracted;
      v[worst] = fc;
      continue;
    }
    for (int k : {mid, worst}) {
      p[k] = lerp(p[best], p[k], 0.5);
      v[k] = eval(p[k]);
    }
  }
  const int best = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
  out.x = p[best];
  out.value = v[best];
  return out;
}

struct PointEstimate {
  double beta = 0.0;
  double theta = 0.0;
  double chi2 = 0.0;
  bool grid_boundary = false;
  bool refined = false;
};

inline PointEstimate estimate_pair(const PairObjective& objective,
                                   const FitOptions& options) {
  PointEstimate grid;
  grid.chi2 = std::numeric_limits<double>::infinity();
  const int beta_points =
      static_cast<int>(std::floor(options.beta_max / options.beta_step + 0.5)) + 1;
  for (int ib = 0; ib < beta_points; ++ib) {
    const double beta = ib * options.beta_step;
    for (int it = 0; it < options.theta_steps; ++it) {
      const double theta = -kPi + kTwoPi * it / options.theta_steps;
      const double chi2 = objective(beta, theta);
      if (chi2 < grid.chi2) {
        grid.beta = beta;
        grid.theta = theta;
        grid.chi2 = chi2;
        grid.grid_boundary = ib == beta_points - 1;
      }
      // theta is irrelevant at beta = 0.
      if (ib == 0) break;
    }
  }

  const auto simplex = nelder_mead(
      objective, {grid.beta, grid.theta},
      {0.5 * options.beta_step, 0.5 * kTwoPi / options.theta_steps},
      options.tolerance, options.max_iterations);
  if (!simplex.converged || !std::isfinite(simplex.value) ||
      simplex.value > grid.chi2) {
    return grid;
  }
  PointEstimate out;
  out.beta = simplex.x[0];
  out.theta = simplex.x[1];
  if (out.beta < 0.0) {
    out.beta = -out.beta;
    out.theta += kPi;
  }
  out.theta = canonicalize_phase(out.theta);
  out.chi2 = simplex.value;
  out.grid_boundary = grid.grid_boundary;
  out.refined = true;

  if (out.beta < options.beta_floor) {
    const double at_zero = objective(0.0, 0.0);
    if (at_zero <= out.chi2) {
      out.beta = 0.0;
      out.theta = 0.0;
      out.chi2 = at_zero;
    }
  }
  return out;
}

// 1-sigma errors from the curvature of the total chi-square
// (Delta chi^2 = 1 contour): cov = 2 H^-1.
inline std::pair<double, double> curvature_errors(const PairObjective& f,
                                                  double beta, double theta) {
  const double hb = 1e-4;
  const double ht = 1e-3;
  const double f0 = f(beta, theta);
  const double fbb = (f(beta + hb, theta) - 2.0 * f0 + f(beta - hb, theta)) / (hb * hb);
  const double ftt = (f(beta, theta + ht) - 2.0 * f0 + f(beta, theta - ht)) / (ht * ht);
  const double fbt = (f(beta + hb, theta + ht) - f(beta + hb, theta - ht) -
                      f(beta - hb, theta + ht) + f(beta - hb, theta - ht)) /
                     (4.0 * hb * ht);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double det = fbb * ftt - fbt * fbt;
  // A flat theta direction (beta ~ 0) leaves only the beta curvature usable.
  if (!(ftt > 1e-9 * std::abs(fbb)) || !(det > 0.0)) {
    return {fbb > 0.0 ? std::sqrt(2.0 / fbb) : inf, inf};
  }
  const double var_beta = 2.0 * ftt / det;
  const double var_theta = 2.0 * fbb / det;
  return {std::sqrt(var_beta), std::sqrt(var_theta)};
}

// Standard normal deviate (Box-Muller) from the portable uniform stream.
inline double standard_normal(RandomStream& stream) {
  double u1 = stream.uniform();
  while (u1 <= 0.0) u1 = stream.uniform();
  const double u2 = stream.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace detail

inline void validate_fit_dataset(const PhaseSweepDataset& ds) {
  if (ds.secondaries.size() != 1) {
    throw std::invalid_argument("fit_pair needs a dataset with one secondary");
  }
  if (ds.phases.size() < 8) {
    throw std::invalid_argument("fit_pair needs at least 8 phase points");
  }
  if (ds.observed_z.size() != ds.phases.size() || ds.sigma.size() != ds.phases.size()) {
    throw std::invalid_argument("dataset lists have unequal lengths");
  }
  for (double s : ds.sigma) {
    if (!(s > 0.0)) throw std::invalid_argument("dataset sigma must be > 0");
  }
}

inline PairFitResult fit_pair(const PhaseSweepDataset& ds,
                              const FitOptions& options = {}) {
  validate_fit_dataset(ds);
  const detail::PairObjective objective(ds.rotation_angle, ds.phases,
                                        ds.observed_z, ds.sigma);
  const auto est = detail::estimate_pair(objective, options);

  PairFitResult r;
  r.primary = ds.primary;
  r.secondary = ds.secondaries.front();
  r.beta_hat = est.beta;
  r.theta_hat = canonicalize_phase(est.theta);
  r.chi2_per_dof = est.chi2 / static_cast<double>(ds.phases.size() - 2);
  r.flags.theta_unidentifiable = r.beta_hat < options.beta_floor;
  r.flags.boundary_hit = est.grid_boundary || r.beta_hat >= options.beta_max;
  r.flags.poor_fit = !est.refined || r.chi2_per_dof > options.poor_fit_chi2;

  if (options.bootstrap_samples > 0) {
    const auto model = objective.curve(r.beta_hat, r.theta_hat);
    FitOptions inner = options;
    inner.bootstrap_samples = 0;
    RandomStream stream(derive_seed(
        options.bootstrap_seed,
        {static_cast<std::uint64_t>(r.primary), static_cast<std::uint64_t>(r.secondary)}));
    double sb = 0.0, sbb = 0.0, stt = 0.0;
    PhaseSweepDataset replica = ds;
    for (int b = 0; b < options.bootstrap_samples; ++b) {
      for (std::size_t i = 0; i < model.size(); ++i) {
        replica.observed_z[i] = model[i] + ds.sigma[i] * detail::standard_normal(stream);
      }
      const detail::PairObjective f(replica.rotation_angle, replica.phases,
                                    replica.observed_z, replica.sigma);
      const auto e = detail::estimate_pair(f, inner);
      sb += e.beta;
      sbb += e.beta * e.beta;
      const double dt = canonicalize_phase(e.theta - r.theta_hat);
      stt += dt * dt;
    }
    const double n = options.bootstrap_samples;
    const double mean = sb / n;
    r.beta_stderr = std::sqrt(std::max(0.0, sbb / n - mean * mean));
    r.theta_stderr = r.flags.theta_unidentifiable
                         ? std::numeric_limits<double>::infinity()
                         : std::sqrt(stt / n);
  } else {
    std::tie(r.beta_stderr, r.theta_stderr) =
        detail::curvature_errors(objective, r.beta_hat, r.theta_hat);
    if (r.flags.theta_unidentifiable) {
      r.theta_stderr = std::numeric_limits<double>::infinity();
    }
  }
  return r;
}

inline double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

struct ChipFitReport {
  int qubit_count = 0;
  // Sorted by (primary, secondary).
  std::vector<PairFitResult> results;
  double median_chi2 = 0.0;
  double beta_theta_correlation = 0.0;

  const PairFitResult* find(int primary, int secondary) const {
    for (const auto& r : results) {
      if (r.primary == primary && r.secondary == secondary) return &r;
    }
    return nullptr;
  }
};

// Sorts the fits and computes the aggregate statistics. The beta-theta
// correlation skips fits whose phase is unidentifiable.
inline ChipFitReport summarize_fits(int qubit_count,
                                    std::vector<PairFitResult> results) {
  std::sort(results.begin(), results.end(), [](const auto& l, const auto& r) {
    return std::pair(l.primary, l.secondary) < std::pair(r.primary, r.secondary);
  });
  ChipFitReport report;
  report.qubit_count = qubit_count;
  std::vector<double> chi2, betas, thetas;
  for (const auto& r : results) {
    chi2.push_back(r.chi2_per_dof);
    if (!r.flags.theta_unidentifiable) {
      betas.push_back(r.beta_hat);
      thetas.push_back(r.theta_hat);
    }
  }
  report.median_chi2 = median(chi2);
  report.beta_theta_correlation = pearson(betas, thetas);
  report.results = std::move(results);
  return report;
}

// Directed pairs (a, b) with a readout-enabled primary a, sorted.
inline std::vector<std::pair<int, int>> directed_pairs(const ChipTopology& topology) {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < topology.qubit_count; ++a) {
    if (!topology.readout_enabled(a)) continue;
    for (int b = 0; b < topology.qubit_count; ++b) {
      if (b != a) out.emplace_back(a, b);
    }
  }
  return out;
}

inline ChipFitReport fit_datasets(int qubit_count,
                                  const std::vector<PhaseSweepDataset>& datasets,
                                  const FitOptions& options = {},
                                  unsigned threads = 1) {
  std::vector<PairFitResult> results(datasets.size());
  parallel_for(datasets.size(), threads,
               [&](std::size_t i) { results[i] = fit_pair(datasets[i], options); });
  return summarize_fits(qubit_count, std::move(results));
}

struct Characterization {
  std::vector<PhaseSweepDataset> datasets;
  ChipFitReport report;
};

// Runs and fits the pair experiment for every directed pair (or only the
// given pairs). Per-pair fit problems surface as flags.
inline Characterization characterize_chip(
    const ChipGroundTruth& chip, const Protocol& protocol, std::uint64_t seed,
    const ExperimentOptions& experiment = {}, const FitOptions& fit = {},
    std::optional<std::vector<std::pair<int, int>>> pairs = std::nullopt) {
  const auto todo = pairs ? *pairs : directed_pairs(chip.topology);
  Characterization out;
  out.datasets.resize(todo.size());
  std::vector<PairFitResult> results(todo.size());
  ExperimentOptions serial = experiment;
  serial.threads = 1;
  parallel_for(todo.size(), experiment.threads, [&](std::size_t i) {
    const auto [a, b] = todo[i];
    out.datasets[i] = run_pair_experiment(chip, a, b, protocol, seed, serial);
    results[i] = fit_pair(out.datasets[i], fit);
  });
  out.report = summarize_fits(chip.qubit_count(), std::move(results));
  return out;
}

}  // namespace xtalk
