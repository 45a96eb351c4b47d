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

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "elir/densities.hpp"

namespace {

using elir::Density;
using elir::ErrorCode;

struct Case {
  std::string label;
  Density density;
  std::vector<double> points;
};

std::vector<Case> cases() {
  return {
      {"normal", Density::normal(0.3, 2.0), {-3.0, 0.0, 1.7}},
      {"student_t", Density::student_t(1.0, 0.5, 4.0), {-2.0, 0.9, 3.0}},
      {"beta", Density::beta(2.5, 4.0), {0.05, 0.3, 0.8}},
      {"gamma", Density::gamma(3.0, 0.7), {0.2, 2.0, 9.0}},
      {"inverse_gamma", Density::inverse_gamma(4.0, 2.0), {0.1, 0.6, 3.0}},
      {"generalized_gamma", Density::generalized_gamma(5.0, 1.3, 2.0), {0.4, 1.5, 3.0}},
      {"weibull", Density::weibull(3.0, 2.0), {0.3, 1.8, 3.5}},
      {"log_normal", Density::log_normal(0.2, 0.6), {0.3, 1.2, 4.0}},
      {"half_normal", Density::half_normal(1.5), {0.1, 1.0, 3.0}},
      {"logit_beta", Density::logit_beta(2.0, 3.0), {-3.0, 0.0, 2.0}},
      {"log_gamma", Density::log_gamma(2.0, 0.5), {-1.0, 1.0, 2.5}},
      {"normal_mixture",
       Density::mixture({{0.4, elir::Normal{-1.0, 0.8}}, {0.6, elir::Normal{2.0, 1.5}}}),
       {-2.0, 0.4, 3.0}},
      {"beta_mixture",
       Density::mixture({{0.3, elir::Beta{2.0, 8.0}}, {0.7, elir::Beta{6.0, 3.0}}}),
       {0.1, 0.45, 0.85}},
  };
}

void PrintTo(const Case& c, std::ostream* os) { *os << c.label; }

class DensityCase : public ::testing::TestWithParam<Case> {};

TEST_P(DensityCase, DerivativesMatchFiniteDifferences) {
  const auto& c = GetParam();
  for (const double x : c.points) {
    const auto exact = c.density.derivatives(x);
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    const double d1 = (c.density.log_pdf(x + h) - c.density.log_pdf(x - h)) / (2.0 * h);
    const double d2 = (c.density.derivatives(x + h).dlog_p - c.density.derivatives(x - h).dlog_p) / (2.0 * h);
    EXPECT_NEAR(exact.dlog_p, d1, 1e-5 * std::max(1.0, std::abs(exact.dlog_p))) << c.label << " at " << x;
    EXPECT_NEAR(exact.d2log_p, d2, 1e-5 * std::max(1.0, std::abs(exact.d2log_p))) << c.label << " at " << x;
    const auto fd = elir::finite_difference_derivatives([&](double t) { return c.density.log_pdf(t); }, x);
    EXPECT_NEAR(exact.d2log_p, fd.d2log_p, 1e-4 * std::max(1.0, std::abs(exact.d2log_p))) << c.label << " at " << x;
    EXPECT_DOUBLE_EQ(exact.prior_info, -exact.d2log_p);
  }
}

TEST_P(DensityCase, IntegratesToOne) {
  const auto& c = GetParam();
  const double mass = elir::expectation(c.density, [](double) { return 1.0; });
  EXPECT_NEAR(mass, 1.0, 1e-9) << c.label;
  const double lo = c.density.quantile(1e-9);
  const double hi = c.density.quantile(1.0 - 1e-9);
  std::vector<double> breaks{lo};
  for (const double p : {0.01, 0.1, 0.5, 0.9, 0.99}) {
    breaks.push_back(c.density.quantile(p));
  }
  breaks.push_back(hi);
  const double raw = elir::numeric::integrate_segments([&](double x) { return c.density.pdf(x); }, breaks);
  EXPECT_NEAR(raw, 1.0, 1e-6) << c.label;
}

TEST_P(DensityCase, QuantileInvertsCdf) {
  const auto& c = GetParam();
  for (const double p : {1e-6, 0.02, 0.5, 0.93, 1.0 - 1e-6}) {
    EXPECT_NEAR(c.density.cdf(c.density.quantile(p)), p, 1e-9 * std::max(1.0, 1.0 / p) * p + 1e-12) << c.label;
  }
}

TEST_P(DensityCase, MomentsMatchQuadrature) {
  const auto& c = GetParam();
  const auto m = c.density.moments();
  const double mean = elir::expectation(c.density, [](double x) { return x; });
  const double var = elir::expectation(c.density, [&](double x) { return (x - mean) * (x - mean); });
  EXPECT_NEAR(m.mean, mean, 1e-7 * (1.0 + std::abs(mean))) << c.label;
  EXPECT_NEAR(m.variance, var, 1e-5 * var) << c.label;
}

TEST_P(DensityCase, SampleMomentsMatch) {
  const auto& c = GetParam();
  const auto xs = c.density.sample(200000, 17);
  const auto s = elir::numeric::sample_mean(xs);
  const auto m = c.density.moments();
  EXPECT_NEAR(s.mean, m.mean, 5.0 * std::sqrt(m.variance / 200000.0)) << c.label;
  const auto again = c.density.sample(200000, 17);
  EXPECT_EQ(xs, again);
}

TEST_P(DensityCase, JsonRoundTrip) {
  const auto& c = GetParam();
  const Density back = elir::density_from_json(elir::to_json(c.density));
  for (const double x : c.points) {
    EXPECT_DOUBLE_EQ(back.log_pdf(x), c.density.log_pdf(x));
  }
}

INSTANTIATE_TEST_SUITE_P(Families, DensityCase, ::testing::ValuesIn(cases()),
                         [](const auto& info) { return info.param.label; });

TEST(Density, InvalidParametersRejected) {
  EXPECT_THROW((void)Density::normal(0.0, -1.0), elir::Error);
  EXPECT_THROW((void)Density::beta(0.0, 1.0), elir::Error);
  EXPECT_THROW((void)Density::mixture({{0.5, elir::Normal{0, 1}}, {0.4, elir::Normal{1, 1}}}), elir::Error);
  EXPECT_THROW((void)Density::mixture({{0.5, elir::Normal{0, 1}}, {0.5, elir::Beta{1, 1}}}), elir::Error);
}

TEST(Density, OutOfSupport) {
  const Density b = Density::beta(2, 2);
  EXPECT_EQ(b.log_pdf(1.5), -elir::kInf);
  try {
    (void)b.derivatives(0.0);
    FAIL();
  } catch (const elir::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_support);
  }
}

TEST(Density, UndefinedMoments) {
  try {
    (void)Density::student_t(0, 1, 1.5).moments();
    FAIL();
  } catch (const elir::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::moment_undefined);
    EXPECT_EQ(e.detail(), 2);
  }
  try {
    (void)Density::student_t(0, 1, 1.0).mean();
    FAIL();
  } catch (const elir::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::mean_undefined);
  }
  try {
    (void)Density::inverse_gamma(0.8, 1.0).mean();
    FAIL();
  } catch (const elir::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::mean_undefined);
  }
}

TEST(Density, ModeUndefinedForUnboundedBeta) {
  try {
    (void)Density::beta(0.5, 0.5).mode();
    FAIL();
  } catch (const elir::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::mode_undefined);
  }
  EXPECT_NEAR(Density::beta(3, 5).mode(), 2.0 / 6.0, 1e-12);
}

TEST(Density, MixtureModeRefined) {
  const Density mix = Density::mixture({{0.2, elir::Normal{-3.0, 1.0}}, {0.8, elir::Normal{2.0, 1.0}}});
  EXPECT_NEAR(mix.mode(), 2.0, 1e-3);
  const double d = mix.derivatives(mix.mode()).dlog_p;
  EXPECT_NEAR(d, 0.0, 1e-6);
}

TEST(Density, MixtureInformationMatchesDefinition) {
  const elir::MixtureDensity m({{0.5, elir::Beta{2.0, 5.0}}, {0.5, elir::Beta{5.0, 2.0}}});
  for (const double x : {0.2, 0.5, 0.7}) {
    const auto fd = elir::finite_difference_derivatives([&](double t) { return m.log_pdf(t); }, x);
    EXPECT_NEAR(elir::mixture_information(m, x), fd.prior_info, 1e-5 * std::abs(fd.prior_info));
  }
}

TEST(Density, WeibullIsGeneralizedGamma) {
  const Density w = Density::weibull(3.0, 2.0);
  const auto* gg = w.as<elir::GeneralizedGamma>();
  ASSERT_NE(gg, nullptr);
  EXPECT_EQ(gg->f, 3.0);
  // Weibull cdf 1 - exp(-(x/s)^a)
  EXPECT_NEAR(w.cdf(1.5), 1.0 - std::exp(-std::pow(0.75, 3.0)), 1e-12);
}

TEST(Density, ParseErrors) {
  EXPECT_THROW((void)elir::density_from_json(nlohmann::json{{"family", "cauchy"}}), elir::Error);
  EXPECT_THROW((void)elir::density_from_json(nlohmann::json{{"family", "normal"}, {"params", {{"mean", 0}}}}),
               elir::Error);
}

TEST(Density, SampleRejectsZero) { EXPECT_THROW((void)elir::sample(Density::normal(0, 1), 0, 1), elir::Error); }

}  // namespace
