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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "support.hpp"
#include "xtalk/experiment.hpp"
#include "xtalk/fitting.hpp"
#include "xtalk/synthetic.hpp"

namespace xtalk {
namespace {

double circular_distance(double a, double b) { return std::abs(canonicalize_phase(a - b)); }

ChipGroundTruth pair_chip(double beta, double theta) {
  return testing::small_chip(2, {1.0, beta, 0.0, 1.0}, {0.0, theta, 0.0, 0.0});
}

// Noise-free pair data with a fixed sigma.
PhaseSweepDataset exact_dataset(double beta, double theta, double sigma) {
  PhaseSweepDataset ds;
  ds.primary = 0;
  ds.secondaries = {1};
  ds.phases = Protocol{}.phases();
  for (double phi : ds.phases) {
    ds.observed_z.push_back(pair_model_z(ds.rotation_angle, beta, theta, phi));
    ds.sigma.push_back(sigma);
  }
  ds.clipped.assign(ds.phases.size(), false);
  return ds;
}

TEST(ChiSquaredPerDof, Examples) {
  const std::vector<double> o{0.1, 0.2, 0.3};
  const std::vector<double> s{0.1, 0.1, 0.1};
  EXPECT_EQ(chi_squared_per_dof(o, o, s, 0), 0.0);
  const std::vector<double> m{0.0, 0.1, 0.2};
  EXPECT_NEAR(chi_squared_per_dof(o, m, s, 1), 1.5, 1e-12);
  EXPECT_THROW(chi_squared_per_dof(o, m, s, 3), std::invalid_argument);
  EXPECT_THROW(chi_squared_per_dof(o, std::vector<double>{0.0}, s, 0), std::invalid_argument);
  const std::vector<double> zero_sigma{0.1, 0.0, 0.1};
  EXPECT_THROW(chi_squared_per_dof(o, m, zero_sigma, 0), std::invalid_argument);
}

TEST(FitPair, RecoversParametersAcrossSeeds) {
  const auto chip = pair_chip(0.10, 1.2);
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto r = fit_pair(run_pair_experiment(chip, 0, 1, {}, seed));
    if (std::abs(r.beta_hat - 0.10) <= 0.01 && circular_distance(r.theta_hat, 1.2) <= 0.1) ++good;
  }
  EXPECT_GE(good, 95);
}

TEST(FitPair, FlatDataGivesZeroBeta) {
  const auto r = fit_pair(exact_dataset(0.0, 0.0, 1e-4));
  EXPECT_EQ(r.beta_hat, 0.0);
  EXPECT_TRUE(r.flags.theta_unidentifiable);
  EXPECT_FALSE(r.flags.boundary_hit);
  EXPECT_TRUE(std::isinf(r.theta_stderr));
  EXPECT_NEAR(r.chi2_per_dof, 0.0, 1e-12);
}

TEST(FitPair, LargeCrosstalkStaysOffTheBoundary) {
  for (double theta : {-2.5, 0.0, 1.7}) {
    const auto r = fit_pair(run_pair_experiment(pair_chip(0.15, theta), 0, 1, {}, 3));
    EXPECT_NEAR(r.beta_hat, 0.15, 0.01);
    EXPECT_FALSE(r.flags.boundary_hit);
    EXPECT_FALSE(r.flags.poor_fit);
  }
}

TEST(FitPair, ThetaWrapsAroundPi) {
  for (double theta : {3.1, -3.1}) {
    const auto r = fit_pair(run_pair_experiment(pair_chip(0.1, theta), 0, 1, {}, 9));
    EXPECT_GE(r.theta_hat, -kPi);
    EXPECT_LT(r.theta_hat, kPi);
    EXPECT_LT(circular_distance(r.theta_hat, theta), 0.1);
  }
}

TEST(FitPair, ResultIsTheChiSquareMinimum) {
  const auto ds = run_pair_experiment(pair_chip(0.07, -0.6), 0, 1, {}, 12);
  const auto r = fit_pair(ds);
  const detail::PairObjective f(ds.rotation_angle, ds.phases, ds.observed_z, ds.sigma);
  const double best = f(r.beta_hat, r.theta_hat);
  EXPECT_NEAR(best / (ds.size() - 2), r.chi2_per_dof, 1e-12);
  for (int ib = 0; ib <= 50; ++ib) {
    for (int it = 0; it < 64; ++it) {
      ASSERT_GE(f(0.01 * ib, -kPi + kTwoPi * it / 64) + 1e-9, best);
    }
  }
  for (double db : {-1e-3, 1e-3}) {
    for (double dt : {-1e-2, 0.0, 1e-2}) {
      EXPECT_GE(f(r.beta_hat + db, r.theta_hat + dt) + 1e-9, best);
    }
  }
}

TEST(FitPair, ThetaUncertaintyShrinksWithBeta) {
  double previous = std::numeric_limits<double>::infinity();
  for (double beta : {0.02, 0.04, 0.08, 0.14}) {
    const auto r = fit_pair(exact_dataset(beta, 0.5, 0.03));
    EXPECT_NEAR(r.beta_hat, beta, 1e-4);
    EXPECT_LT(r.theta_stderr, previous);
    previous = r.theta_stderr;
  }
}

TEST(FitPair, CurvatureErrorsMatchScatter) {
  const auto chip = pair_chip(0.09, 0.4);
  std::vector<double> betas, thetas, beta_err, theta_err;
  for (std::uint64_t seed = 100; seed < 300; ++seed) {
    const auto r = fit_pair(run_pair_experiment(chip, 0, 1, {}, seed));
    betas.push_back(r.beta_hat);
    thetas.push_back(canonicalize_phase(r.theta_hat - 0.4));
    beta_err.push_back(r.beta_stderr);
    theta_err.push_back(r.theta_stderr);
  }
  auto spread = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
  };
  EXPECT_NEAR(spread(betas) / median(beta_err), 1.0, 0.25);
  EXPECT_NEAR(spread(thetas) / median(theta_err), 1.0, 0.25);
}

TEST(FitPair, BootstrapAgreesWithCurvature) {
  const auto ds = run_pair_experiment(pair_chip(0.09, 0.4), 0, 1, {}, 77);
  const auto curvature = fit_pair(ds);
  FitOptions boot;
  boot.bootstrap_samples = 200;
  boot.bootstrap_seed = 5;
  const auto bootstrap = fit_pair(ds, boot);
  EXPECT_EQ(bootstrap.beta_hat, curvature.beta_hat);
  EXPECT_NEAR(bootstrap.beta_stderr / curvature.beta_stderr, 1.0, 0.3);
  EXPECT_NEAR(bootstrap.theta_stderr / curvature.theta_stderr, 1.0, 0.3);
  EXPECT_EQ(fit_pair(ds, boot), bootstrap);
}

TEST(FitPair, RejectsBadDatasets) {
  auto ds = exact_dataset(0.1, 0.0, 0.03);
  ds.secondaries = {1, 2};
  EXPECT_THROW(fit_pair(ds), std::invalid_argument);
  ds = exact_dataset(0.1, 0.0, 0.03);
  ds.sigma[3] = 0.0;
  EXPECT_THROW(fit_pair(ds), std::invalid_argument);
  ds = exact_dataset(0.1, 0.0, 0.03);
  ds.phases.resize(5);
  ds.observed_z.resize(5);
  ds.sigma.resize(5);
  EXPECT_THROW(fit_pair(ds), std::invalid_argument);
}

TEST(FitPair, PoorFitFlag) {
  auto ds = exact_dataset(0.1, 0.0, 0.03);
  for (std::size_t i = 0; i < ds.size(); i += 2) ds.observed_z[i] += 0.2;
  const auto r = fit_pair(ds);
  EXPECT_TRUE(r.flags.poor_fit);
}

TEST(FitFlags, NamesRoundTrip) {
  FitFlags f;
  f.theta_unidentifiable = true;
  f.poor_fit = true;
  FitFlags g;
  for (const auto& n : f.names()) g.set(n);
  EXPECT_EQ(f, g);
  EXPECT_THROW(g.set("odd"), std::invalid_argument);
}

TEST(Statistics, MedianAndPearson) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{2, 4, 6, 8};
  const std::vector<double> z{8, 6, 4, 2};
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-15);
  EXPECT_TRUE(std::isnan(pearson(x, std::vector<double>{1, 1, 1, 1})));
}

ChipGroundTruth ring_chip(std::uint64_t seed) {
  GenerateSpec g;
  g.seed = seed;
  g.disabled_readout = {5};
  return generate_chip(g);
}

TEST(CharacterizeChip, FortyNinePairsWithOneDisabledReadout) {
  const auto chip = ring_chip(4);
  const auto c = characterize_chip(chip, {}, 10);
  ASSERT_EQ(c.report.results.size(), 49u);
  ASSERT_EQ(c.datasets.size(), 49u);
  for (std::size_t i = 0; i < c.report.results.size(); ++i) {
    const auto& r = c.report.results[i];
    EXPECT_NE(r.primary, 5);
    EXPECT_NE(r.primary, r.secondary);
    if (i > 0) {
      const auto& p = c.report.results[i - 1];
      EXPECT_LT(std::pair(p.primary, p.secondary), std::pair(r.primary, r.secondary));
    }
  }
  EXPECT_EQ(c.report.find(5, 0), nullptr);
  EXPECT_NE(c.report.find(0, 5), nullptr);
}

TEST(CharacterizeChip, DeterministicAcrossThreads) {
  const auto chip = ring_chip(5);
  ExperimentOptions many;
  many.threads = 4;
  const auto a = characterize_chip(chip, {}, 3);
  const auto b = characterize_chip(chip, {}, 3, many);
  EXPECT_EQ(a.report.results, b.report.results);
  EXPECT_EQ(a.datasets, b.datasets);
  const auto refit = fit_datasets(chip.qubit_count(), a.datasets, {}, 3);
  EXPECT_EQ(refit.results, a.report.results);
}

TEST(CharacterizeChip, SubsetOfPairs) {
  const auto chip = ring_chip(5);
  const auto c = characterize_chip(chip, {}, 3, {}, {},
                                   std::vector<std::pair<int, int>>{{1, 0}, {1, 2}});
  ASSERT_EQ(c.report.results.size(), 2u);
  EXPECT_EQ(c.report.results[0].secondary, 0);
  EXPECT_EQ(c.report.results[1].secondary, 2);
}

TEST(CharacterizeChip, NoInducedBetaThetaCorrelation) {
  const auto chip = ring_chip(6);
  const auto c = characterize_chip(chip, {}, 6);
  std::vector<double> betas, thetas;
  for (const auto& r : c.report.results) {
    if (r.flags.theta_unidentifiable) continue;
    betas.push_back(r.beta_hat);
    thetas.push_back(r.theta_hat);
  }
  // Null band from a permutation test on the fitted values themselves.
  RandomStream rng(1234);
  std::vector<double> null;
  for (int p = 0; p < 2000; ++p) {
    auto shuffled = thetas;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
      std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    }
    null.push_back(std::abs(pearson(betas, shuffled)));
  }
  std::sort(null.begin(), null.end());
  const double band = null[static_cast<std::size_t>(0.95 * null.size())];
  EXPECT_LT(band, 0.3);
  EXPECT_LT(std::abs(c.report.beta_theta_correlation), 0.3);
  EXPECT_NEAR(c.report.beta_theta_correlation, pearson(betas, thetas), 1e-15);
}

TEST(CharacterizeChip, MedianChiSquareNearOne) {
  const auto c = characterize_chip(ring_chip(8), {}, 8);
  EXPECT_GT(c.report.median_chi2, 0.7);
  EXPECT_LT(c.report.median_chi2, 1.4);
}

}  // namespace
}  // namespace xtalk
