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
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <gtest/gtest.h>

#include "elir/hierarchy.hpp"

namespace {

using elir::HierModelSpec;
using elir::McmcConfig;
using elir::TrialRecord;

const std::vector<TrialRecord> kAs = {{"1", 23, 107}, {"2", 12, 44}, {"3", 19, 51}, {"4", 9, 39},
                                      {"5", 39, 139}, {"6", 6, 20},  {"7", 9, 78},  {"8", 10, 35}};

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (const double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sd_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (const double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double quantile_of(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  return x[static_cast<std::size_t>(p * static_cast<double>(x.size() - 1))];
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                             static_cast<double>(j) / static_cast<double>(b.size())));
  }
  return d;
}

const elir::HierarchyFit& as_fit() {
  static const elir::HierarchyFit fit = elir::map_prior(kAs);
  return fit;
}

TEST(Hierarchy, MapPriorForAsTrials) {
  const auto p = as_fit().pi_star();
  EXPECT_NEAR(mean_of(p), 0.26, 0.01);
  EXPECT_NEAR(sd_of(p), 0.084, 0.006);
  EXPECT_NEAR(quantile_of(p, 0.025), 0.11, 0.02);
  EXPECT_NEAR(quantile_of(p, 0.975), 0.46, 0.02);
}

TEST(Hierarchy, MapPriorDiagnostics) {
  const auto& fit = as_fit();
  EXPECT_LE(fit.max_rhat(), 1.05);
  EXPECT_GE(fit.min_ess(), 1000.0);
  EXPECT_EQ(fit.diagnostics.size(), kAs.size() + 2);
  EXPECT_EQ(fit.pi_star().size(), 4U * 10000U);
  for (const double a : fit.acceptance) {
    EXPECT_GT(a, 0.05);
    EXPECT_LT(a, 0.95);
  }
}

TEST(Hierarchy, ChainLengthInvariance) {
  McmcConfig cfg;
  cfg.iterations = 20000;
  cfg.seed = 3;
  const auto longer = elir::map_prior(kAs, HierModelSpec::map_default(), cfg);
  EXPECT_NEAR(mean_of(longer.pi_star()), mean_of(as_fit().pi_star()), 0.005);
}

TEST(Hierarchy, VanishingHeterogeneityPoolsTrials) {
  // tau ~ 0: pi* = logistic(mu), mu | data has log density
  // 10 mu - 20 log(1 + e^mu) - mu^2 / 200 for the pooled 10/20.
  HierModelSpec spec;
  spec.tau_prior = elir::Density::half_normal(1e-4);
  const auto fit = elir::map_prior({{"a", 5, 10}, {"b", 5, 10}}, spec);
  auto p = fit.pi_star();
  std::sort(p.begin(), p.end());

  const auto log_post = [](double mu) { return 10.0 * mu - 20.0 * std::log1p(std::exp(mu)) - mu * mu / 200.0; };
  constexpr int kGrid = 200001;
  const double lo = -6.0;
  const double h = 12.0 / (kGrid - 1);
  std::vector<double> cdf(kGrid, 0.0);
  for (int i = 1; i < kGrid; ++i) {
    const double a = lo + h * (i - 1);
    cdf[i] = cdf[i - 1] + 0.5 * h * (std::exp(log_post(a)) + std::exp(log_post(a + h)));
  }
  for (auto& c : cdf) c /= cdf.back();
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double mu = std::log(p[i] / (1.0 - p[i]));
    const double pos = std::clamp((mu - lo) / h, 0.0, kGrid - 1.0);
    const auto k = std::min(static_cast<std::size_t>(pos), static_cast<std::size_t>(kGrid - 2));
    const double f = cdf[k] + (pos - static_cast<double>(k)) * (cdf[k + 1] - cdf[k]);
    const double n = static_cast<double>(p.size());
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, 0.02);
}

TEST(Hierarchy, ZeroResponderTrials) {
  const auto fit = elir::map_prior({{"a", 0, 10}, {"b", 0, 10}});
  const auto p = fit.pi_star();
  EXPECT_LT(quantile_of(p, 0.5), 0.3);
  EXPECT_LE(fit.max_rhat(), 1.05);
}

TEST(Hierarchy, IdenticalSubgroupsCoincide) {
  McmcConfig cfg;
  cfg.iterations = 40000;
  const std::vector<TrialRecord> same = {{"a", 5, 20}, {"b", 5, 20}, {"c", 5, 20}, {"d", 5, 20}};
  const auto fit = elir::subgroup_posteriors(same, HierModelSpec::subgroup_default(1.0), cfg);
  for (std::size_t i = 0; i < same.size(); ++i) {
    for (std::size_t j = i + 1; j < same.size(); ++j) {
      EXPECT_LT(two_sample_ks(fit.pi(i), fit.pi(j)), 0.02) << i << " vs " << j;
    }
  }
}

TEST(Hierarchy, RobustWeightReducesBorrowing) {
  const std::vector<TrialRecord> groups = {{"a", 2, 15}, {"b", 0, 13}, {"c", 6, 28}, {"d", 7, 29}, {"e", 14, 20}};
  const auto full = elir::subgroup_posteriors(groups, HierModelSpec::subgroup_default(1.0));
  const auto half = elir::subgroup_posteriors(groups, HierModelSpec::subgroup_default(0.5));
  // the outlying subgroup is pulled towards the others less when it may be non-exchangeable
  EXPECT_GT(mean_of(half.pi(4)), mean_of(full.pi(4)));
  EXPECT_LT(half.exchangeable_probability[4], half.exchangeable_probability[0]);
  for (const double w : full.exchangeable_probability) EXPECT_EQ(w, 1.0);
}

TEST(Hierarchy, DeterministicAcrossThreads) {
  McmcConfig cfg;
  cfg.iterations = 1000;
  cfg.warmup = 500;
  const auto a = elir::map_prior(kAs, HierModelSpec::map_default(), cfg);
  cfg.threads = 4;
  const auto b = elir::map_prior(kAs, HierModelSpec::map_default(), cfg);
  EXPECT_EQ(a.theta_star, b.theta_star);
  EXPECT_EQ(a.tau, b.tau);
  cfg.seed = 2;
  const auto c = elir::map_prior(kAs, HierModelSpec::map_default(), cfg);
  EXPECT_NE(a.theta_star, c.theta_star);
}

TEST(Hierarchy, RejectsBadInput) {
  EXPECT_THROW((void)elir::map_prior({{"a", 5, 10}}), elir::Error);
  EXPECT_THROW((void)elir::map_prior({{"a", 5, 10}, {"b", 11, 10}}), elir::Error);
  EXPECT_THROW((void)elir::map_prior(kAs, HierModelSpec::subgroup_default(0.5)), elir::Error);
  McmcConfig cfg;
  cfg.iterations = 999;
  EXPECT_THROW((void)elir::map_prior(kAs, HierModelSpec::map_default(), cfg), elir::Error);
}

std::vector<std::vector<double>> ar1_chains(double phi, double shift, std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<double>> chains(4, std::vector<double>(n));
  for (std::size_t c = 0; c < chains.size(); ++c) {
    elir::Engine rng = elir::make_engine(seed, {c});
    boost::random::normal_distribution<double> z;
    double x = z(rng) / std::sqrt(1.0 - phi * phi);
    for (auto& v : chains[c]) {
      x = phi * x + z(rng);
      v = x + (c == 0 ? shift : 0.0);
    }
  }
  return chains;
}

TEST(Diagnostics, IidChains) {
  const auto chains = ar1_chains(0.0, 0.0, 20000, 1);
  EXPECT_NEAR(elir::split_rhat(chains), 1.0, 0.005);
  EXPECT_NEAR(elir::effective_sample_size(chains) / 80000.0, 1.0, 0.1);
}

TEST(Diagnostics, AutocorrelatedChains) {
  const auto chains = ar1_chains(0.9, 0.0, 50000, 2);
  // integrated autocorrelation time of AR(1) is (1 + phi) / (1 - phi)
  EXPECT_NEAR(elir::effective_sample_size(chains) / (200000.0 * 0.1 / 1.9), 1.0, 0.15);
  EXPECT_LT(elir::split_rhat(chains), 1.01);
}

TEST(Diagnostics, DisagreeingChains) {
  EXPECT_GT(elir::split_rhat(ar1_chains(0.0, 1.0, 5000, 3)), 1.05);
}

TEST(SampleEss, SingleBeta) {
  const auto x = elir::Density::beta(6.8, 19.7).sample(40000, 5);
  elir::FitConfig cfg;
  cfg.restarts = 3;
  const auto s = elir::ess_from_samples(x, elir::SamplingModel::binomial(elir::Parameterization::mean), cfg);
  EXPECT_EQ(s.fit.components, 1U);
  // both equal a + b for a Beta prior
  EXPECT_NEAR(s.elir.value, 26.5, 0.5);
  EXPECT_NEAR(s.vr.value, 26.5, 0.5);
}

TEST(SampleEss, TwoComponentMixture) {
  const elir::Density truth =
      elir::Density::mixture({{0.66, elir::Beta{16.7, 51.1}}, {0.34, elir::Beta{3.4, 9.0}}});
  const auto model = elir::SamplingModel::binomial(elir::Parameterization::mean);
  const double exact = elir::compute(elir::EssMethod::elir, truth, model).value;
  const auto x = truth.sample(40000, 6);
  elir::FitConfig cfg;
  cfg.restarts = 3;
  const auto s = elir::ess_from_samples(x, model, cfg, 2);
  EXPECT_EQ(s.fit.components, 2U);
  EXPECT_NEAR(s.elir.value, exact, 1.5);
}

}  // namespace
