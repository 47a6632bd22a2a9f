// Copyright 2026 The abcloss Authors.
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

#include <abcloss/distributions.hpp>
#include <abcloss/random.hpp>
#include <abcloss/stats.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <vector>

namespace {

using namespace abcloss;

constexpr std::size_t kDraws = 100'000;

struct Moments {
  double mean;
  double variance;
  double fourth;  // central
};

Moments empirical(const std::vector<double>& x) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (const double v : x) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (const double v : x) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  return {mean, m2 / (n - 1.0), m4 / n};
}

/// Central moments from the first four raw moments.
Moments from_raw(double r1, double r2, double r3, double r4) {
  const double variance = r2 - r1 * r1;
  const double fourth = r4 - 4.0 * r3 * r1 + 6.0 * r2 * r1 * r1 - 3.0 * r1 * r1 * r1 * r1;
  return {r1, variance, fourth};
}

/// Mean and variance within four standard errors of their analytic values.
void expect_moments(const std::vector<double>& x, const Moments& truth, const char* label) {
  const auto sample = empirical(x);
  const auto n = static_cast<double>(x.size());
  EXPECT_NEAR(sample.mean, truth.mean, 4.0 * std::sqrt(truth.variance / n)) << label;
  const double se_variance = std::sqrt((truth.fourth - truth.variance * truth.variance) / n);
  EXPECT_NEAR(sample.variance, truth.variance, 4.0 * se_variance) << label;
}

std::vector<double> frequency_draws(const FrequencyFamily& family, RandomStream& rng, bool second = false,
                                    std::size_t period = 1) {
  std::vector<double> out(kDraws);
  for (auto& v : out) {
    const auto n = sample_frequency(family, period, rng);
    v = static_cast<double>(second ? n.second : n.first);
  }
  return out;
}

std::vector<double> severity_draws(const SeverityFamily& family, RandomStream& rng, std::size_t count = kDraws,
                                   ClaimCount n_claims = 1) {
  std::vector<double> out;
  out.reserve(count);
  while (out.size() < count) {
    for (const double v : sample_severity(family, n_claims, rng)) {
      if (out.size() < count) out.push_back(v);
    }
  }
  return out;
}

/// Pearson test of counts against a pmf; cells with expectation < 5 are pooled with the tail.
double chi_square_against_pmf(const std::vector<double>& draws, const std::function<double(ClaimCount)>& pmf) {
  std::map<ClaimCount, double> counts;
  for (const double v : draws) counts[static_cast<ClaimCount>(v)] += 1.0;
  const auto n = static_cast<double>(draws.size());
  std::vector<double> observed;
  std::vector<double> probabilities;
  double covered = 0.0;
  double covered_count = 0.0;
  for (ClaimCount k = 0; n * pmf(k) >= 5.0 || k < 1; ++k) {
    const double prob = pmf(k);
    if (n * prob < 5.0) break;
    observed.push_back(counts.contains(k) ? counts[k] : 0.0);
    probabilities.push_back(prob);
    covered += prob;
    covered_count += observed.back();
  }
  observed.push_back(n - covered_count);
  probabilities.push_back(1.0 - covered);
  return stats::chi_square_test(observed, probabilities);
}

double integrate_density(const SeverityFamily& family, ClaimCount n_claims = 0) {
  const auto f = [&](double x) { return std::exp(log_density(family, x, n_claims)); };
  boost::math::quadrature::tanh_sinh<double> near;
  boost::math::quadrature::exp_sinh<double> far;
  return near.integrate(f, 0.0, 1.0) + far.integrate(f, 1.0, std::numeric_limits<double>::infinity());
}

// Frequency sampling -------------------------------------------------------

TEST(SampleFrequency, PoissonMean) {
  auto rng = make_stream(1);
  const auto x = frequency_draws(Poisson{4.0}, rng);
  EXPECT_NEAR(empirical(x).mean, 4.0, 3.0 * std::sqrt(4.0 / kDraws));
  EXPECT_GE(*std::min_element(x.begin(), x.end()), 0.0);
}

TEST(SampleFrequency, CyclicalWithoutSinusoidIsPoisson) {
  auto rng = make_stream(2);
  const CyclicalPoisson cyclical{1.0, 0.0, 1.0 / 50.0};
  for (std::size_t s : {1U, 13U, 37U}) {
    EXPECT_DOUBLE_EQ(log_mass(cyclical, {3, 0}, s), log_mass(Poisson{1.0}, {3, 0}));
  }
  const auto x = frequency_draws(cyclical, rng, false, 17);
  EXPECT_GT(chi_square_against_pmf(x, [](ClaimCount k) { return std::exp(log_mass(Poisson{1.0}, {k, 0})); }), 0.01);
}

TEST(SampleFrequency, CyclicalFollowsIntegratedIntensity) {
  auto rng = make_stream(3);
  const CyclicalPoisson cyclical{1.0, 5.0, 1.0 / 50.0};
  for (std::size_t s : {1U, 12U, 30U}) {
    const double mu = integrated_intensity(1.0, 5.0, 1.0 / 50.0, static_cast<double>(s));
    const auto x = frequency_draws(cyclical, rng, false, s);
    expect_moments(x, {mu, mu, mu + 3.0 * mu * mu}, "cyclical");
  }
}

TEST(SampleFrequency, BivariateDegenerateLatentMeans) {
  auto rng = make_stream(4);
  const BivariateMixedPoisson family{1e-9, 15.0, 5.0};
  std::vector<double> first(kDraws);
  std::vector<double> second(kDraws);
  for (std::size_t i = 0; i < kDraws; ++i) {
    const auto n = sample_frequency(family, 1, rng);
    first[i] = static_cast<double>(n.first);
    second[i] = static_cast<double>(n.second);
  }
  EXPECT_NEAR(empirical(first).mean, 15.0, 4.0 * std::sqrt(15.0 / kDraws));
  EXPECT_NEAR(empirical(second).mean, 5.0, 4.0 * std::sqrt(5.0 / kDraws));
}

TEST(SampleFrequency, BivariateMarginalOverdispersed) {
  auto rng = make_stream(5);
  const auto x = frequency_draws(BivariateMixedPoisson{0.2, 15.0, 5.0}, rng);
  const auto m = empirical(x);
  EXPECT_GT(m.variance, m.mean);
}

TEST(SampleFrequency, MomentsOfEveryFamily) {
  auto rng = make_stream(6);
  {
    const double p = 0.8;
    const auto x = frequency_draws(Geometric{p}, rng);
    const auto m = empirical(x);
    expect_moments(x, {p / (1 - p), p / ((1 - p) * (1 - p)), m.fourth}, "geometric");
  }
  {
    const auto x = frequency_draws(Poisson{4.0}, rng);
    expect_moments(x, {4.0, 4.0, 4.0 + 3.0 * 16.0}, "poisson");
  }
  {
    const double alpha = 4.0;
    const double p = 2.0 / 3.0;
    const auto x = frequency_draws(NegativeBinomial{alpha, p}, rng);
    expect_moments(x, {alpha * (1 - p) / p, alpha * (1 - p) / (p * p), empirical(x).fourth}, "negbin");
  }
  {
    const double s2 = 0.04;
    const double w = 15.0;
    const auto x = frequency_draws(BivariateMixedPoisson{0.2, w, 5.0}, rng);
    const double mean = w * std::exp(s2 / 2.0);
    const double variance = mean + w * w * (std::exp(2.0 * s2) - std::exp(s2));
    expect_moments(x, {mean, variance, empirical(x).fourth}, "bivariate first");
    const auto y = frequency_draws(BivariateMixedPoisson{0.2, w, 5.0}, rng, true);
    const double mean2 = 5.0 * std::exp(s2 / 2.0);
    expect_moments(y, {mean2, mean2 + 25.0 * (std::exp(2.0 * s2) - std::exp(s2)), empirical(y).fourth},
                   "bivariate second");
  }
}

TEST(SampleFrequency, GoodnessOfFitAgainstLogMass) {
  const std::vector<FrequencyFamily> families{Geometric{0.8}, Poisson{4.0}, NegativeBinomial{4.0, 2.0 / 3.0},
                                              CyclicalPoisson{1.0, 5.0, 1.0 / 50.0}};
  for (const auto& family : families) {
    auto rng = make_stream(7, {family.index()});
    const auto x = frequency_draws(family, rng, false, 5);
    const double p = chi_square_against_pmf(x, [&](ClaimCount k) { return std::exp(log_mass(family, {k, 0}, 5)); });
    EXPECT_GT(p, 0.01) << "family index " << family.index();
  }
}

TEST(SampleFrequency, BivariateJointGoodnessOfFit) {
  auto rng = make_stream(8);
  const BivariateMixedPoisson family{0.2, 15.0, 5.0};
  std::map<std::pair<ClaimCount, ClaimCount>, double> counts;
  const std::size_t draws = 20'000;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto n = sample_frequency(family, 1, rng);
    counts[{n.first, n.second}] += 1.0;
  }
  std::vector<double> observed;
  std::vector<double> probabilities;
  double covered = 0.0;
  double covered_count = 0.0;
  for (ClaimCount a = 0; a < 45; ++a) {
    for (ClaimCount b = 0; b < 25; ++b) {
      const double prob = std::exp(log_mass(family, {a, b}));
      if (prob * draws < 5.0) continue;
      const auto it = counts.find({a, b});
      observed.push_back(it == counts.end() ? 0.0 : it->second);
      probabilities.push_back(prob);
      covered += prob;
      covered_count += observed.back();
    }
  }
  observed.push_back(static_cast<double>(draws) - covered_count);
  probabilities.push_back(1.0 - covered);
  EXPECT_GT(stats::chi_square_test(observed, probabilities), 0.01);
}

TEST(SampleFrequency, InvalidParametersThrow) {
  auto rng = make_stream(9);
  EXPECT_THROW((void)sample_frequency(Geometric{1.5}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_frequency(Poisson{-1.0}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_frequency(NegativeBinomial{0.0, 0.5}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_frequency(BivariateMixedPoisson{0.2, -1.0, 5.0}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_frequency(CyclicalPoisson{1.0, 1.0, 0.0}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_frequency(CyclicalPoisson{1.0, 1.0, 0.1}, 0, rng), std::invalid_argument);
}

// Severity sampling --------------------------------------------------------

TEST(SampleSeverity, DependentExponentialWithoutClaimsIsPlainExponential) {
  auto rng = make_stream(10);
  EXPECT_TRUE(sample_severity(FrequencyDependentExponential{2.0, 0.2}, 0, rng).empty());
  // A claim drawn with the n = 0 scale is Exponential with mean 2.
  std::vector<double> x(kDraws);
  for (auto& v : x) v = sample_claim(FrequencyDependentExponential{2.0, 0.2}, 0, rng);
  EXPECT_NEAR(empirical(x).mean, 2.0, 4.0 * 2.0 / std::sqrt(kDraws));
  EXPECT_GT(stats::ks_test(x, [](double v) { return 1.0 - std::exp(-v / 2.0); }), 0.01);
  EXPECT_DOUBLE_EQ(log_density(FrequencyDependentExponential{2.0, 0.2}, 1.0, 0), log_density(Exponential{2.0}, 1.0));
}

TEST(SampleSeverity, WeibullShapeOneIsExponential) {
  auto rng = make_stream(11);
  const auto x = severity_draws(Weibull{1.0, 5.0}, rng, 10'000);
  EXPECT_GT(stats::ks_test(x, [](double v) { return 1.0 - std::exp(-v / 5.0); }), 0.01);
}

TEST(SampleSeverity, LogNormalMean) {
  auto rng = make_stream(12);
  const auto x = severity_draws(LogNormal{0.0, 1.0}, rng);
  const double e = std::numbers::e;
  EXPECT_NEAR(empirical(x).mean, std::sqrt(e), 3.0 * std::sqrt((e - 1.0) * e / kDraws));
}

TEST(SampleSeverity, LengthAndPositivity) {
  auto rng = make_stream(13);
  EXPECT_TRUE(sample_severity(Exponential{1.0}, 0, rng).empty());
  const auto x = sample_severity(Gamma{2.0, 3.0}, 17, rng);
  EXPECT_EQ(x.size(), 17U);
  for (const double v : x) EXPECT_GT(v, 0.0);
}

TEST(SampleSeverity, MomentsOfEveryFamily) {
  auto rng = make_stream(14);
  {
    const double d = 5.0;
    expect_moments(severity_draws(Exponential{d}, rng), from_raw(d, 2 * d * d, 6 * d * d * d, 24 * d * d * d * d),
                   "exponential");
  }
  {
    const double r = 2.0;
    const double m = 3.0;
    const auto raw = [&](int j) { return std::pow(m, j) * std::tgamma(r + j) / std::tgamma(r); };
    expect_moments(severity_draws(Gamma{r, m}, rng), from_raw(raw(1), raw(2), raw(3), raw(4)), "gamma");
  }
  {
    const double k = 1.0 / 3.0;
    const double b = 1.0;
    const auto raw = [&](int j) { return std::pow(b, j) * std::tgamma(1.0 + j / k); };
    expect_moments(severity_draws(Weibull{k, b}, rng), from_raw(raw(1), raw(2), raw(3), raw(4)), "weibull");
  }
  {
    const double mu = 0.0;
    const double s = 0.5;
    const auto raw = [&](int j) { return std::exp(j * mu + j * j * s * s / 2.0); };
    expect_moments(severity_draws(LogNormal{mu, s}, rng), from_raw(raw(1), raw(2), raw(3), raw(4)), "lognormal");
  }
  {
    const double scale = 2.0 * std::exp(0.2 * 4.0);
    expect_moments(severity_draws(FrequencyDependentExponential{2.0, 0.2}, rng, kDraws, 4),
                   from_raw(scale, 2 * std::pow(scale, 2), 6 * std::pow(scale, 3), 24 * std::pow(scale, 4)),
                   "dep-exp");
  }
}

TEST(SampleSeverity, GoodnessOfFitAgainstCdf) {
  auto rng = make_stream(15);
  const std::size_t n = 20'000;
  EXPECT_GT(stats::ks_test(severity_draws(Weibull{1.0 / 3.0, 1.0}, rng, n),
                           [](double x) { return 1.0 - std::exp(-std::cbrt(x)); }),
            0.01);
  EXPECT_GT(stats::ks_test(severity_draws(Gamma{2.0, 3.0}, rng, n),
                           [](double x) { return boost::math::gamma_p(2.0, x / 3.0); }),
            0.01);
  EXPECT_GT(stats::ks_test(severity_draws(LogNormal{0.0, 0.5}, rng, n),
                           [](double x) { return 0.5 * std::erfc(-std::log(x) / (0.5 * std::numbers::sqrt2)); }),
            0.01);
  EXPECT_GT(stats::ks_test(severity_draws(LogNormal{0.0, 1.0}, rng, n),
                           [](double x) { return 0.5 * std::erfc(-std::log(x) / std::numbers::sqrt2); }),
            0.01);
  EXPECT_GT(stats::ks_test(severity_draws(Exponential{10.0}, rng, n), [](double x) { return 1.0 - std::exp(-x / 10.0); }),
            0.01);
  const double scale = 2.0 * std::exp(0.2 * 3.0);
  EXPECT_GT(stats::ks_test(severity_draws(FrequencyDependentExponential{2.0, 0.2}, rng, n, 3),
                           [&](double x) { return 1.0 - std::exp(-x / scale); }),
            0.01);
}

TEST(SampleSeverity, TotalMatchesSumOfClaimsInLaw) {
  auto rng = make_stream(16);
  std::vector<double> totals(20'000);
  for (auto& v : totals) v = sample_severity_total(Weibull{1.0 / 3.0, 1.0}, 3, rng);
  std::vector<double> sums(20'000);
  for (auto& v : sums) {
    const auto claims = sample_severity(Weibull{1.0 / 3.0, 1.0}, 3, rng);
    v = claims[0] + claims[1] + claims[2];
  }
  EXPECT_GT(stats::ks_two_sample(totals, sums), 0.01);
}

TEST(SampleSeverity, InvalidParametersThrow) {
  auto rng = make_stream(17);
  EXPECT_THROW((void)sample_severity(Exponential{0.0}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_severity(Gamma{-1.0, 1.0}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_severity(Weibull{1.0, 0.0}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_severity(LogNormal{0.0, 0.0}, 1, rng), ParameterDomainError);
  EXPECT_THROW((void)sample_severity(FrequencyDependentExponential{-2.0, 0.1}, 1, rng), ParameterDomainError);
  EXPECT_NO_THROW((void)sample_severity(FrequencyDependentExponential{2.0, -0.5}, 1, rng));
  EXPECT_NO_THROW((void)sample_severity(LogNormal{-3.0, 1.0}, 1, rng));
}

// Log mass and density -----------------------------------------------------

TEST(LogMass, Examples) {
  EXPECT_DOUBLE_EQ(log_mass(Geometric{0.8}, {0, 0}), std::log(0.2));
  EXPECT_DOUBLE_EQ(log_density(Exponential{5.0}, 0.0), std::log(1.0 / 5.0));
  const double expected = std::log(3.0 * std::exp(-1.0) / 9.0);
  EXPECT_NEAR(log_density(Gamma{2.0, 3.0}, 3.0), expected, 1e-14);
  EXPECT_NEAR(integrate_density(Gamma{2.0, 3.0}), 1.0, 1e-8);
}

TEST(LogMass, OutsideSupportIsNegativeInfinity) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(log_density(Exponential{1.0}, -1.0), neg_inf);
  EXPECT_EQ(log_density(LogNormal{0.0, 1.0}, 0.0), neg_inf);
  EXPECT_EQ(log_density(Gamma{2.0, 1.0}, 0.0), neg_inf);
  EXPECT_EQ(log_density(Weibull{2.0, 1.0}, -0.5), neg_inf);
}

TEST(LogMass, PmfSumsToOne) {
  const std::vector<FrequencyFamily> families{Geometric{0.8}, Geometric{0.99}, Poisson{4.0}, Poisson{150.0},
                                              NegativeBinomial{4.0, 2.0 / 3.0}, NegativeBinomial{0.3, 0.05},
                                              CyclicalPoisson{1.0, 5.0, 1.0 / 50.0}};
  for (const auto& family : families) {
    double total = 0.0;
    for (ClaimCount n = 0; n < 20'000; ++n) total += std::exp(log_mass(family, {n, 0}, 9));
    EXPECT_NEAR(total, 1.0, 1e-9) << "family index " << family.index();
  }
}

TEST(LogMass, BivariatePmfSumsToOne) {
  const BivariateMixedPoisson family{0.2, 15.0, 5.0};
  double total = 0.0;
  for (ClaimCount a = 0; a < 90; ++a) {
    for (ClaimCount b = 0; b < 50; ++b) total += std::exp(log_mass(family, {a, b}));
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  // Degenerate latent: the joint pmf factorizes into two Poisson pmfs.
  const BivariateMixedPoisson flat{1e-9, 15.0, 5.0};
  EXPECT_NEAR(log_mass(flat, {12, 7}), log_mass(Poisson{15.0}, {12, 0}) + log_mass(Poisson{5.0}, {7, 0}), 1e-7);
}

TEST(LogDensity, PdfIntegratesToOne) {
  const std::vector<SeverityFamily> families{Exponential{5.0},        Gamma{2.0, 3.0},  Gamma{0.5, 10.0},
                                             Weibull{1.0 / 3.0, 1.0}, Weibull{3.0, 2.0}, LogNormal{0.0, 1.0},
                                             LogNormal{0.0, 0.5},     FrequencyDependentExponential{2.0, 0.2}};
  for (const auto& family : families) {
    EXPECT_NEAR(integrate_density(family, 4), 1.0, 1e-6) << "family index " << family.index();
  }
}

// Prior boxes --------------------------------------------------------------

TEST(PriorBox, Density) {
  const PriorBox box{{"x"}, {{0.0, 10.0}}};
  EXPECT_DOUBLE_EQ(prior_density(box, ParameterPoint::Constant(1, 5.0)), 0.1);
  EXPECT_EQ(prior_density(box, ParameterPoint::Constant(1, -1.0)), 0.0);
  EXPECT_EQ(prior_density(box, ParameterPoint::Constant(1, 0.0)), 0.0);
  EXPECT_EQ(prior_density(box, ParameterPoint::Constant(2, 5.0)), 0.0);
}

TEST(PriorBox, InvalidBoundsThrow) {
  EXPECT_THROW((PriorBox{{"x"}, {{1.0, 1.0}}}), std::invalid_argument);
  EXPECT_THROW((PriorBox{{"x", "y"}, {{0.0, 1.0}}}), std::invalid_argument);
  EXPECT_THROW((PriorBox{{}, {}}), std::invalid_argument);
}

TEST(PriorBox, SamplesAreUniformOnTheGrid) {
  const PriorBox box{{"a", "b"}, {{0.0, 10.0}, {0.0, 1.0}}};
  auto rng = make_stream(18);
  std::vector<double> counts(100, 0.0);
  for (std::size_t i = 0; i < kDraws; ++i) {
    const auto theta = prior_sample(box, rng);
    ASSERT_GT(prior_density(box, theta), 0.0);
    const auto ix = std::min<std::size_t>(static_cast<std::size_t>(theta[0]), 9);
    const auto iy = std::min<std::size_t>(static_cast<std::size_t>(theta[1] * 10.0), 9);
    counts[ix * 10 + iy] += 1.0;
  }
  const std::vector<double> probabilities(100, 0.01);
  EXPECT_GT(stats::chi_square_test(counts, probabilities), 0.01);
}

TEST(Names, RoundTripAndCounts) {
  for (const auto kind : {FrequencyKind::geometric, FrequencyKind::poisson, FrequencyKind::negative_binomial,
                          FrequencyKind::bivariate_mixed_poisson, FrequencyKind::cyclical_poisson}) {
    EXPECT_EQ(parse_frequency_kind(to_string(kind)), kind);
  }
  for (const auto kind : {SeverityKind::exponential, SeverityKind::gamma, SeverityKind::weibull, SeverityKind::lognormal,
                          SeverityKind::frequency_dependent_exponential}) {
    EXPECT_EQ(parse_severity_kind(to_string(kind)), kind);
  }
  EXPECT_EQ(parse_frequency_kind("negbin"), FrequencyKind::negative_binomial);
  EXPECT_EQ(parse_severity_kind("dep-exp"), SeverityKind::frequency_dependent_exponential);
  EXPECT_EQ(parameter_count(FrequencyKind::bivariate_mixed_poisson), 3U);
  EXPECT_THROW((void)parse_severity_kind("pareto"), std::invalid_argument);
  const std::vector<double> params{2.0, 3.0};
  EXPECT_EQ(std::get<Gamma>(make_severity(SeverityKind::gamma, params)).scale, 3.0);
  EXPECT_THROW((void)make_severity(SeverityKind::exponential, params), std::invalid_argument);
}

}  // namespace
