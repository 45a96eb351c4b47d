// Copyright 2026 The elir Authors
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

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "elir/mixfit.hpp"

namespace {

using elir::Density;
using elir::FitConfig;
using elir::MixtureFamily;

const elir::MixtureDensity& mix(const elir::FitResult& r) { return *r.mixture.as<elir::MixtureDensity>(); }

void expect_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    EXPECT_GE(trace[i] - trace[i - 1], -1e-10 * std::abs(trace[i])) << "step " << i;
  }
}

std::pair<double, double> mean_logs(const std::vector<double>& x) {
  double l1 = 0.0;
  double l2 = 0.0;
  for (const double v : x) {
    l1 += std::log(v);
    l2 += std::log1p(-v);
  }
  const auto n = static_cast<double>(x.size());
  return {l1 / n, l2 / n};
}

TEST(Mixfit, RecoversSingleBeta) {
  const auto x = Density::beta(6.8, 19.7).sample(100000, 3);
  const auto r = elir::fit_mixture(x, MixtureFamily::beta);
  ASSERT_EQ(r.components, 1U);
  const auto& b = std::get<elir::Beta>(mix(r).components()[0].kernel);
  EXPECT_NEAR(b.a / 6.8, 1.0, 0.05);
  EXPECT_NEAR(b.b / 19.7, 1.0, 0.05);
  EXPECT_TRUE(r.converged);
  expect_monotone(r.trace);
}

TEST(Mixfit, BetaNewtonMatchesMaximumLikelihood) {
  // single component: EM reduces to the Beta MLE, whose score vanishes
  const auto x = Density::beta(2.5, 0.7).sample(5000, 11);
  FitConfig cfg;
  cfg.min_beta_shape = 1e-3;
  const auto r = elir::fit_mixture(x, MixtureFamily::beta, cfg);
  const auto& b = std::get<elir::Beta>(mix(r).components()[0].kernel);
  const auto [l1, l2] = mean_logs(x);
  const double psi_ab = boost::math::digamma(b.a + b.b);
  EXPECT_NEAR(l1 - boost::math::digamma(b.a) + psi_ab, 0.0, 1e-8);
  EXPECT_NEAR(l2 - boost::math::digamma(b.b) + psi_ab, 0.0, 1e-8);
}

TEST(Mixfit, BetaShapeFloorIsActiveConstraint) {
  // the default floor of 1 binds on b; a maximises the likelihood given b = 1
  const auto x = Density::beta(2.5, 0.7).sample(5000, 11);
  const auto r = elir::fit_mixture(x, MixtureFamily::beta);
  const auto& b = std::get<elir::Beta>(mix(r).components()[0].kernel);
  const auto [l1, l2] = mean_logs(x);
  const double psi_ab = boost::math::digamma(b.a + b.b);
  EXPECT_EQ(b.b, 1.0);
  EXPECT_NEAR(l1 - boost::math::digamma(b.a) + psi_ab, 0.0, 1e-8);
  EXPECT_LT(l2 - boost::math::digamma(b.b) + psi_ab, 0.0);
  expect_monotone(r.trace);
  FitConfig bad;
  bad.min_beta_shape = 0.0;
  EXPECT_THROW(elir::fit_mixture(x, MixtureFamily::beta, bad), elir::Error);
}

// Quantile-stratified sample: its empirical law matches `d` up to O(1/n),
// so the maximum likelihood fit sits on the generating parameters.
std::vector<double> stratified(const Density& d, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = d.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  return x;
}

TEST(Mixfit, RecoversTwoNormals) {
  const Density truth = Density::mixture({{0.5, elir::Normal{-2.0, 2.0}}, {0.5, elir::Normal{2.0, 2.0}}});
  const auto x = stratified(truth, 100000);
  FitConfig cfg;
  cfg.components = 2;
  const auto r = elir::fit_mixture(x, MixtureFamily::normal, cfg);
  ASSERT_EQ(r.components, 2U);
  auto comps = mix(r).components();
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
    return std::get<elir::Normal>(a.kernel).mean < std::get<elir::Normal>(b.kernel).mean;
  });
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& n = std::get<elir::Normal>(comps[k].kernel);
    EXPECT_NEAR(comps[k].weight, 0.5, 0.02);
    EXPECT_NEAR(n.mean, k == 0 ? -2.0 : 2.0, 0.05);
    EXPECT_NEAR(n.sd, 2.0, 0.05);
  }
  expect_monotone(r.trace);
}

TEST(Mixfit, RandomSampleReachesLikelihoodOfTruth) {
  const Density truth = Density::mixture({{0.5, elir::Normal{-2.0, 2.0}}, {0.5, elir::Normal{2.0, 2.0}}});
  const auto x = truth.sample(50000, 5);
  FitConfig cfg;
  cfg.components = 2;
  const auto r = elir::fit_mixture(x, MixtureFamily::normal, cfg);
  double at_truth = 0.0;
  for (const double v : x) at_truth += truth.log_pdf(v);
  EXPECT_GE(r.log_likelihood, at_truth);
  EXPECT_TRUE(r.converged);
  expect_monotone(r.trace);
}

TEST(Mixfit, AutoFitChoosesStructure) {
  const auto single = Density::beta(6.8, 19.7).sample(20000, 8);
  EXPECT_EQ(elir::auto_fit(single, MixtureFamily::beta).components, 1U);

  const Density bimodal = Density::mixture({{0.4, elir::Normal{-3.0, 1.0}}, {0.6, elir::Normal{3.0, 1.0}}});
  const auto x = bimodal.sample(20000, 9);
  const auto r = elir::auto_fit(x, MixtureFamily::normal);
  EXPECT_EQ(r.components, 2U);
  EXPECT_LT(elir::ks_distance(x, r.mixture), 0.01);
}

TEST(Mixfit, BetaMixtureMonotoneAndClose) {
  const Density truth = Density::mixture({{0.66, elir::Beta{16.7, 51.1}}, {0.34, elir::Beta{3.4, 9.0}}});
  const auto x = truth.sample(40000, 21);
  FitConfig cfg;
  cfg.components = 2;
  const auto r = elir::fit_mixture(x, MixtureFamily::beta, cfg);
  expect_monotone(r.trace);
  EXPECT_LT(elir::ks_distance(x, r.mixture), 0.01);
  EXPECT_NEAR(r.mixture.mean(), truth.mean(), 0.002);
}

TEST(Mixfit, DeterministicAcrossThreads) {
  const Density truth = Density::mixture({{0.3, elir::Beta{2.0, 8.0}}, {0.7, elir::Beta{9.0, 3.0}}});
  const auto x = truth.sample(5000, 2);
  FitConfig cfg;
  cfg.components = 3;
  const auto a = elir::fit_mixture(x, MixtureFamily::beta, cfg);
  cfg.threads = 4;
  const auto b = elir::fit_mixture(x, MixtureFamily::beta, cfg);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  EXPECT_EQ(a.restart, b.restart);
  EXPECT_EQ(elir::to_json(a).dump(), elir::to_json(b).dump());
}

TEST(Mixfit, AicCountsParameters) {
  EXPECT_DOUBLE_EQ(elir::mixture_aic(1, -10.0), 4.0 + 20.0);
  EXPECT_DOUBLE_EQ(elir::mixture_aic(3, -10.0), 16.0 + 20.0);
}

TEST(Mixfit, RejectsBadSamples) {
  std::vector<double> few(50, 0.5);
  EXPECT_THROW((void)elir::fit_mixture(few, MixtureFamily::beta), elir::Error);
  std::vector<double> outside(200, 0.5);
  outside[17] = 1.0;
  try {
    (void)elir::fit_mixture(outside, MixtureFamily::beta);
    FAIL() << "expected SupportViolation";
  } catch (const elir::Error& e) {
    EXPECT_EQ(e.code(), elir::ErrorCode::support_violation);
  }
  EXPECT_NO_THROW((void)elir::fit_mixture(outside, MixtureFamily::normal));
}

TEST(Mixfit, KsDistanceOfExactSample) {
  const Density d = Density::normal(0.0, 1.0);
  const auto x = d.sample(100000, 4);
  EXPECT_LT(elir::ks_distance(x, d), 0.006);
  EXPECT_GT(elir::ks_distance(x, Density::normal(0.5, 1.0)), 0.15);
}

}  // namespace
