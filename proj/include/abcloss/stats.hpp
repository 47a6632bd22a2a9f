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

#ifndef ABCLOSS_STATS_HPP
#define ABCLOSS_STATS_HPP

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

/**
 * \file
 * \brief Summaries of weighted samples and goodness-of-fit p-values.
 */

namespace abcloss::stats {

inline double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  return std::inner_product(values.begin(), values.end(), weights.begin(), 0.0) / total;
}

inline double weighted_sd(std::span<const double> values, std::span<const double> weights) {
  const double mean = weighted_mean(values, weights);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += weights[i] * (values[i] - mean) * (values[i] - mean);
  }
  return std::sqrt(acc / total);
}

/// Smallest value whose weighted cumulative share reaches `level`.
inline double weighted_quantile(std::span<const double> values, std::span<const double> weights, double level) {
  if (values.size() != weights.size() || values.empty()) {
    throw std::invalid_argument("weighted_quantile: bad input sizes");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double running = 0.0;
  for (const auto i : order) {
    running += weights[i] / total;
    if (running >= level) {
      return values[i];
    }
  }
  return values[order.back()];
}

/// Survival function of the limiting Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) {
    return 1.0;
  }
  double total = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    total += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(total, 0.0, 1.0);
}

/// Kolmogorov-Smirnov statistic of a weighted sample against a continuous cdf.
inline double ks_statistic(std::span<const double> values, std::span<const double> weights,
                           const std::function<double(double)>& cdf) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double running = 0.0;
  double worst = 0.0;
  for (const auto i : order) {
    const double f = cdf(values[i]);
    worst = std::max(worst, std::abs(f - running));
    running += weights[i] / total;
    worst = std::max(worst, std::abs(f - running));
  }
  return worst;
}

/// p-value of a KS statistic for effective sample size n (Stephens' correction).
inline double ks_pvalue(double statistic, double n) {
  const double root = std::sqrt(n);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * statistic);
}

/// One-sample KS test of an unweighted sample against `cdf`.
inline double ks_test(std::span<const double> values, const std::function<double(double)>& cdf) {
  const std::vector<double> weights(values.size(), 1.0);
  return ks_pvalue(ks_statistic(values, weights, cdf), static_cast<double>(values.size()));
}

/// Two-sample KS test.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double worst = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / static_cast<double>(x.size()) -
                                     static_cast<double>(j) / static_cast<double>(y.size())));
  }
  const double n = static_cast<double>(x.size() * y.size()) / static_cast<double>(x.size() + y.size());
  return ks_pvalue(worst, n);
}

/// Upper tail probability of a chi-square statistic.
inline double chi_square_pvalue(double statistic, double degrees_of_freedom) {
  return boost::math::gamma_q(degrees_of_freedom / 2.0, statistic / 2.0);
}

/// Pearson goodness-of-fit p-value of observed counts against expected probabilities.
inline double chi_square_test(std::span<const double> counts, std::span<const double> probabilities) {
  if (counts.size() != probabilities.size() || counts.size() < 2) {
    throw std::invalid_argument("chi_square_test: bad input sizes");
  }
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  double statistic = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = n * probabilities[i];
    statistic += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  return chi_square_pvalue(statistic, static_cast<double>(counts.size() - 1));
}

}  // namespace abcloss::stats

#endif
