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

#ifndef ABCLOSS_ORACLES_HPP
#define ABCLOSS_ORACLES_HPP

#include <abcloss/distances.hpp>
#include <abcloss/distributions.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

/**
 * \file
 * \brief Independent references for checking the sampler and the distances.
 *
 * Nothing here is used by the production sampler.
 */

namespace abcloss::oracles {

struct GridResolution {
  std::size_t p_intervals = 200;
  std::size_t delta_intervals = 200;
};

/// Exact posterior of the geometric-exponential compound model on a trapezoid grid.
struct GridPosterior {
  double mean_p = 0.0;
  double mean_delta = 0.0;
  double variance_p = 0.0;
  double variance_delta = 0.0;
  std::vector<double> p_nodes;
  std::vector<double> p_density;
  std::vector<double> delta_nodes;
  std::vector<double> delta_density;
  /// Joint density on the grid, row-major in (p, delta).
  std::vector<double> joint_density;
};

namespace detail {

inline std::vector<double> trapezoid_weights(std::size_t intervals, double step) {
  std::vector<double> weights(intervals + 1, step);
  weights.front() = weights.back() = 0.5 * step;
  return weights;
}

inline double integrate(std::span<const double> values, std::span<const double> weights) {
  return std::inner_product(values.begin(), values.end(), weights.begin(), 0.0);
}

}  // namespace detail

/**
 * Log-likelihood t log(1 - p) + (t - t0) log(p / delta) - ((1 - p) / delta) sum(x+)
 * of summed geometric-exponential data, with its limits at the box edges.
 */
inline double geom_exp_log_likelihood(const PartitionedUnivariate& data, double p, double delta) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  const auto t = static_cast<double>(data.horizon());
  const auto positives = static_cast<double>(data.positives.size());
  const double total = std::accumulate(data.positives.begin(), data.positives.end(), 0.0);
  if (p >= 1.0) {
    return neg_inf;
  }
  double value = t * std::log1p(-p);
  if (positives > 0.0) {
    if (p <= 0.0 || delta <= 0.0) {
      return neg_inf;
    }
    value += positives * std::log(p / delta) - (1.0 - p) / delta * total;
  }
  return value;
}

/// Normalized posterior under the uniform prior box (p, delta) on a (p, delta) grid.
inline GridPosterior grid_posterior_geom_exp(const PartitionedUnivariate& data, GridResolution resolution,
                                             const PriorBox& prior) {
  if (prior.dimension() != 2) {
    throw std::invalid_argument("grid posterior: prior must be two-dimensional (p, delta)");
  }
  if (resolution.p_intervals < 2 || resolution.delta_intervals < 2) {
    throw std::invalid_argument("grid posterior: resolution too coarse");
  }
  const std::size_t np = resolution.p_intervals + 1;
  const std::size_t nd = resolution.delta_intervals + 1;
  const double hp = prior.width(0) / static_cast<double>(resolution.p_intervals);
  const double hd = prior.width(1) / static_cast<double>(resolution.delta_intervals);

  GridPosterior out;
  out.p_nodes.resize(np);
  out.delta_nodes.resize(nd);
  for (std::size_t i = 0; i < np; ++i) out.p_nodes[i] = prior.low(0) + hp * static_cast<double>(i);
  for (std::size_t j = 0; j < nd; ++j) out.delta_nodes[j] = prior.low(1) + hd * static_cast<double>(j);

  std::vector<double> log_values(np * nd);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < nd; ++j) {
      const double value = geom_exp_log_likelihood(data, out.p_nodes[i], out.delta_nodes[j]);
      log_values[i * nd + j] = value;
      peak = std::max(peak, value);
    }
  }
  if (!std::isfinite(peak)) {
    throw std::runtime_error("grid posterior: likelihood vanishes on the whole grid");
  }
  out.joint_density.resize(np * nd);
  for (std::size_t k = 0; k < log_values.size(); ++k) {
    out.joint_density[k] = std::exp(log_values[k] - peak);
  }

  const auto wp = detail::trapezoid_weights(resolution.p_intervals, hp);
  const auto wd = detail::trapezoid_weights(resolution.delta_intervals, hd);
  out.p_density.assign(np, 0.0);
  out.delta_density.assign(nd, 0.0);
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < nd; ++j) {
      const double value = out.joint_density[i * nd + j];
      out.p_density[i] += value * wd[j];
      out.delta_density[j] += value * wp[i];
    }
  }
  const double mass = detail::integrate(out.p_density, wp);
  for (auto& v : out.joint_density) v /= mass;
  for (auto& v : out.p_density) v /= mass;
  for (auto& v : out.delta_density) v /= mass;

  const auto moments = [](std::span<const double> nodes, std::span<const double> density, std::span<const double> w) {
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      mean += nodes[i] * density[i] * w[i];
      second += nodes[i] * nodes[i] * density[i] * w[i];
    }
    return std::pair{mean, second - mean * mean};
  };
  std::tie(out.mean_p, out.variance_p) = moments(out.p_nodes, out.p_density, wp);
  std::tie(out.mean_delta, out.variance_delta) = moments(out.delta_nodes, out.delta_density, wd);
  return out;
}

/// Integral of a grid density by the trapezoid rule.
inline double trapezoid_integral(std::span<const double> nodes, std::span<const double> density) {
  double total = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    total += 0.5 * (density[i] + density[i - 1]) * (nodes[i] - nodes[i - 1]);
  }
  return total;
}

/**
 * Order-1 Wasserstein distance between a weighted sample and a density given
 * on increasing grid nodes (piecewise linear between nodes).
 *
 * Computed as the integral of |F_sample - F_density| over the grid range.
 */
inline double w1_to_grid_density(std::span<const double> samples, std::span<const double> weights,
                                 std::span<const double> nodes, std::span<const double> density) {
  if (samples.size() != weights.size() || samples.empty() || nodes.size() != density.size() || nodes.size() < 2) {
    throw std::invalid_argument("w1_to_grid_density: bad input sizes");
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return samples[a] < samples[b]; });
  const double weight_total = std::accumulate(weights.begin(), weights.end(), 0.0);

  // Cumulative of the grid density at the nodes.
  std::vector<double> cdf(nodes.size(), 0.0);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    cdf[i] = cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) * (nodes[i] - nodes[i - 1]);
  }
  const double mass = cdf.back();
  for (auto& c : cdf) c /= mass;

  // Breakpoints: grid nodes plus sample positions inside the grid range.
  std::vector<double> points(nodes.begin(), nodes.end());
  for (const double s : samples) {
    if (s > nodes.front() && s < nodes.back()) points.push_back(s);
  }
  std::sort(points.begin(), points.end());

  const auto grid_cdf = [&](double x) {
    if (x <= nodes.front()) return 0.0;
    if (x >= nodes.back()) return 1.0;
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    const auto i = static_cast<std::size_t>(it - nodes.begin());
    const double fraction = (x - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
    return cdf[i - 1] + fraction * (cdf[i] - cdf[i - 1]);
  };

  double total = 0.0;
  std::size_t cursor = 0;
  double sample_cdf = 0.0;
  // Sample mass strictly below the grid start.
  while (cursor < order.size() && samples[order[cursor]] <= points.front()) {
    sample_cdf += weights[order[cursor]] / weight_total;
    ++cursor;
  }
  for (std::size_t k = 1; k < points.size(); ++k) {
    const double left = points[k - 1];
    const double right = points[k];
    if (right > left) {
      // Sample cdf is constant on (left, right); the grid cdf is linear there.
      const double a = grid_cdf(left) - sample_cdf;
      const double b = grid_cdf(right) - sample_cdf;
      const double width = right - left;
      if ((a >= 0.0) == (b >= 0.0)) {
        total += 0.5 * (std::abs(a) + std::abs(b)) * width;
      } else {
        total += 0.5 * (a * a + b * b) / (std::abs(a) + std::abs(b)) * width;
      }
    }
    while (cursor < order.size() && samples[order[cursor]] <= right) {
      sample_cdf += weights[order[cursor]] / weight_total;
      ++cursor;
    }
  }
  // Sample mass outside the grid range contributes its distance to the nearest end.
  for (const auto i : order) {
    const double w = weights[i] / weight_total;
    if (samples[i] < nodes.front()) total += w * (nodes.front() - samples[i]);
    if (samples[i] > nodes.back()) total += w * (samples[i] - nodes.back());
  }
  return total;
}

/// Exact order-1 Wasserstein distance by enumerating all matchings (m <= 8).
inline double w1_exact_bruteforce(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("w1_exact_bruteforce: samples must be non-empty and of equal length");
  }
  if (a.size() > 8) {
    throw std::invalid_argument("w1_exact_bruteforce: at most 8 points");
  }
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[perm[i]]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

inline double w1_exact_bruteforce(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("w1_exact_bruteforce: samples must be non-empty and of equal length");
  }
  if (a.size() > 8) {
    throw std::invalid_argument("w1_exact_bruteforce: at most 8 points");
  }
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      total += std::hypot(a[i][0] - b[perm[i]][0], a[i][1] - b[perm[i]][1]);
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

}  // namespace abcloss::oracles

#endif
