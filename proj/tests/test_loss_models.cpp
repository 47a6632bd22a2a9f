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

#include <abcloss/loss_models.hpp>
#include <abcloss/random.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "support/test_support.hpp"

namespace {

using namespace abcloss;

ParameterPoint point(std::initializer_list<double> values) {
  ParameterPoint theta(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double v : values) theta[i++] = v;
  return theta;
}

TEST(Summary, StopLossAndQuotaShare) {
  const std::vector<double> claims{3.0, 4.0};
  EXPECT_DOUBLE_EQ(apply_summary(SummaryOperator::stop_loss(5.0), claims), 2.0);
  EXPECT_DOUBLE_EQ(apply_summary(SummaryOperator::stop_loss(10.0), claims), 0.0);
  EXPECT_DOUBLE_EQ(apply_summary(SummaryOperator::quota_share(0.5), std::vector<double>{3.0, 5.0}), 4.0);
  EXPECT_DOUBLE_EQ(apply_summary(SummaryOperator::sum(), std::vector<double>{}), 0.0);
  EXPECT_THROW((void)SummaryOperator::quota_share(1.5), std::invalid_argument);
  EXPECT_THROW((void)SummaryOperator::stop_loss(-1.0), std::invalid_argument);
}

TEST(Summary, ForcedCountsThroughTheSimulator) {
  // Exponential claims are drawn, so check the operator against the same stream run through Sum.
  LossModelSpec spec;
  spec.severity = SeverityKind::exponential;
  spec.observed_frequencies = ObservedFrequencies{{2, 0, 5}, {}};
  spec.summary = SummaryOperator::sum();
  auto rng_sum = make_stream(3);
  const auto sum = simulate(spec, point({4.0}), 3, rng_sum);
  EXPECT_EQ(sum.values[1], 0.0);
  for (const double c : {0.0, 2.0, 5.0, 10.0}) {
    spec.summary = SummaryOperator::stop_loss(c);
    auto rng = make_stream(3);
    const auto out = simulate(spec, point({4.0}), 3, rng);
    for (std::size_t s = 0; s < 3; ++s) EXPECT_DOUBLE_EQ(out.values[s], std::max(sum.values[s] - c, 0.0));
  }
  spec.summary = SummaryOperator::quota_share(0.3);
  auto rng = make_stream(3);
  const auto quota = simulate(spec, point({4.0}), 3, rng);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_DOUBLE_EQ(quota.values[s], 0.3 * sum.values[s]);
}

TEST(Simulate, GeometricExponentialZeroMassAndPositiveMean) {
  const std::size_t t = 100'000;
  const auto data = test_support::geom_exp_data(t, 21);
  ASSERT_EQ(data.horizon(), t);
  const double zeros = static_cast<double>(std::count(data.values.begin(), data.values.end(), 0.0));
  const double share = zeros / static_cast<double>(t);
  EXPECT_NEAR(share, 0.2, 3.0 * std::sqrt(0.2 * 0.8 / t));
  double total = 0.0;
  for (const double x : data.values) total += x;
  const double positives = static_cast<double>(t) - zeros;
  // A geometric number of exponential claims, given at least one, is exponential with mean delta / (1 - p).
  EXPECT_NEAR(total / positives, 25.0, 3.0 * 25.0 / std::sqrt(positives));
}

TEST(Simulate, WaldIdentity) {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::poisson;
  spec.severity = SeverityKind::gamma;
  spec.summary = SummaryOperator::sum();
  auto rng = make_stream(22);
  const std::size_t t = 100'000;
  const auto data = simulate(spec, point({4.0, 2.0, 3.0}), t, rng);
  const double mean = std::accumulate(data.values.begin(), data.values.end(), 0.0) / t;
  // Var(S) = E[N] Var(U) + Var(N) E[U]^2 = 4 * 18 + 4 * 36.
  EXPECT_NEAR(mean, 4.0 * 6.0, 4.0 * std::sqrt((4.0 * 18.0 + 4.0 * 36.0) / t));
}

TEST(Simulate, StopLossMonotoneInPriority) {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::negative_binomial;
  spec.severity = SeverityKind::weibull;
  std::vector<double> previous;
  for (const double c : {0.0, 0.5, 1.0, 3.0, 10.0, 100.0}) {
    spec.summary = SummaryOperator::stop_loss(c);
    auto rng = make_stream(23);
    const auto data = simulate(spec, point({4.0, 2.0 / 3.0, 1.0 / 3.0, 1.0}), 500, rng);
    for (const double x : data.values) EXPECT_GE(x, 0.0);
    if (!previous.empty()) {
      for (std::size_t s = 0; s < previous.size(); ++s) EXPECT_LE(data.values[s], previous[s]);
    }
    previous = data.values;
  }
}

TEST(Simulate, ObservedFrequenciesUsedVerbatim) {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::negative_binomial;
  spec.severity = SeverityKind::weibull;
  spec.summary = SummaryOperator::stop_loss(1.0);
  const std::vector<ClaimCount> counts{0, 3, 1, 7, 0, 2};
  spec.observed_frequencies = ObservedFrequencies{counts, {}};
  EXPECT_EQ(spec.parameter_names(), (std::vector<std::string>{"k", "beta"}));
  auto rng = make_stream(24);
  const auto data = simulate(spec, point({1.0 / 3.0, 1.0}), counts.size(), rng);
  for (std::size_t s = 0; s < counts.size(); ++s) {
    EXPECT_EQ(data.counts[s].first, counts[s]);
    if (counts[s] == 0) {
      EXPECT_EQ(data.values[s], 0.0);
    }
  }
  EXPECT_THROW((void)simulate(spec, point({1.0 / 3.0, 1.0}), counts.size() + 1, rng), std::invalid_argument);
}

TEST(Simulate, BivariatePairOfSums) {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::bivariate_mixed_poisson;
  spec.severity = SeverityKind::exponential;
  spec.second_severity = SeverityKind::exponential;
  spec.summary = SummaryOperator::bivariate_pair_of_sums();
  EXPECT_EQ(spec.parameter_names(), (std::vector<std::string>{"sigma", "w1", "w2", "delta1", "delta2"}));
  auto rng = make_stream(25);
  const std::size_t t = 20'000;
  const auto data = simulate(spec, point({0.2, 15.0, 5.0, 10.0, 40.0}), t, rng);
  ASSERT_TRUE(data.bivariate());
  for (std::size_t s = 0; s < t; ++s) {
    EXPECT_EQ(data.values[s] == 0.0, data.counts[s].first == 0);
    EXPECT_EQ(data.second_values[s] == 0.0, data.counts[s].second == 0);
  }
  const double mean1 = std::accumulate(data.values.begin(), data.values.end(), 0.0) / t;
  const double mean2 = std::accumulate(data.second_values.begin(), data.second_values.end(), 0.0) / t;
  const double scale = std::exp(0.02);
  EXPECT_NEAR(mean1, 150.0 * scale, 0.03 * 150.0);
  EXPECT_NEAR(mean2, 200.0 * scale, 0.03 * 200.0);
}

TEST(IntegratedIntensity, Examples) {
  for (const double s : {1.0, 7.0, 100.0}) EXPECT_EQ(integrated_intensity(2.5, 0.0, 0.1, s), 2.5);
  double total = 0.0;
  for (int s = 1; s <= 50; ++s) total += integrated_intensity(1.0, 5.0, 1.0 / 50.0, s);
  EXPECT_NEAR(total, 300.0, 1e-9);
  const auto rate = [](double u) { return 1.0 + 5.0 * (1.0 + std::sin(2.0 * std::numbers::pi * u / 50.0)); };
  const double quad = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(rate, 9.0, 10.0, 15, 1e-14);
  EXPECT_NEAR(integrated_intensity(1.0, 5.0, 1.0 / 50.0, 10.0), quad, 1e-8);
  for (int s = 1; s <= 200; ++s) EXPECT_GT(integrated_intensity(0.0, 0.5, 1.0 / 7.0, s), 0.0);
}

TEST(Simulate, TimeIndexedSumFollowsTheCycle) {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::cyclical_poisson;
  spec.severity = SeverityKind::lognormal;
  spec.summary = SummaryOperator::time_indexed_sum();
  auto rng = make_stream(26);
  const std::size_t t = 50;
  std::vector<double> mean(t, 0.0);
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const auto data = simulate(spec, point({1.0, 5.0, 1.0 / 50.0, 0.0, 0.5}), t, rng);
    for (std::size_t s = 0; s < t; ++s) mean[s] += data.values[s] / reps;
  }
  const double claim_mean = std::exp(0.125);
  // Peak near s = 13, trough near s = 38.
  EXPECT_NEAR(mean[12], integrated_intensity(1.0, 5.0, 0.02, 13.0) * claim_mean, 1.5);
  EXPECT_NEAR(mean[37], integrated_intensity(1.0, 5.0, 0.02, 38.0) * claim_mean, 0.5);
  EXPECT_GT(mean[12], 5.0 * mean[37]);
}

TEST(Simulate, UsageErrors) {
  auto spec = test_support::geom_exp_model();
  auto rng = make_stream(27);
  EXPECT_THROW((void)simulate(spec, point({0.5, 1.0}), 0, rng), std::invalid_argument);
  EXPECT_THROW((void)simulate(spec, point({0.5}), 3, rng), std::invalid_argument);
  EXPECT_THROW((void)simulate(spec, point({1.5, 1.0}), 3, rng), ParameterDomainError);
  spec.summary = SummaryOperator::bivariate_pair_of_sums();
  EXPECT_THROW(spec.check(), std::invalid_argument);
}

TEST(Simulate, SameStreamSameData) {
  const auto a = test_support::geom_exp_data(200, 5);
  const auto b = test_support::geom_exp_data(200, 5);
  const auto c = test_support::geom_exp_data(200, 6);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
}

TEST(Simulate, ZeroCountStopAgreesWithTheFullRun) {
  // Stopping early must happen exactly when the full series has another zero count.
  LossModelSpec spec;
  spec.frequency = FrequencyKind::geometric;
  spec.severity = SeverityKind::exponential;
  ParameterPoint theta(2);
  theta << 0.5, 2.0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    for (const std::size_t target : {3U, 5U, 7U}) {
      auto full_rng = make_stream(seed);
      auto gated_rng = make_stream(seed);
      const auto full = simulate(spec, theta, 12, full_rng);
      SyntheticData gated;
      const bool complete = simulate_with_zero_count(spec, theta, 12, target, gated_rng, gated);
      const auto zeros = static_cast<std::size_t>(std::count(full.values.begin(), full.values.end(), 0.0));
      ASSERT_EQ(complete, zeros == target) << "seed " << seed;
      if (complete) {
        EXPECT_EQ(gated.values, full.values);
      }
    }
  }
}

TEST(Simulate, ZeroCountStopIgnoresBivariateSummaries) {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::bivariate_mixed_poisson;
  spec.severity = SeverityKind::exponential;
  spec.second_severity = SeverityKind::exponential;
  spec.summary = SummaryOperator::bivariate_pair_of_sums();
  ParameterPoint theta(5);
  theta << 0.2, 1.0, 1.0, 1.0, 1.0;
  auto rng = make_stream(4);
  SyntheticData out;
  EXPECT_TRUE(simulate_with_zero_count(spec, theta, 20, 0, rng, out));
  EXPECT_EQ(out.values.size(), 20U);
}

}  // namespace
