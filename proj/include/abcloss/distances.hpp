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

#ifndef ABCLOSS_DISTANCES_HPP
#define ABCLOSS_DISTANCES_HPP

#include <abcloss/hilbert.hpp>
#include <abcloss/loss_models.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/**
 * \file
 * \brief Wasserstein-type dissimilarities between observed and synthetic summaries.
 *
 * Summaries carry an atom at zero, so synthetic data is only compared with the
 * observed data when it reproduces the observed zero structure exactly. When it
 * does not, the distance is `kReject`, which orders above every finite value.
 */

namespace abcloss {

using Point2 = std::array<double, 2>;

/// Distance value meaning "outside the acceptance set for every tolerance".
inline constexpr double kReject = std::numeric_limits<double>::infinity();

inline bool is_reject(double distance) { return !(distance < kReject); }

/// Univariate data split into its zeros and its sorted positive part.
struct PartitionedUnivariate {
  std::size_t zero_count = 0;
  std::vector<double> positives;

  [[nodiscard]] std::size_t horizon() const { return zero_count + positives.size(); }
};

/// Bivariate data split by which components are zero.
struct PartitionedBivariate {
  std::size_t both_zero = 0;
  std::size_t first_only = 0;
  std::size_t second_only = 0;
  std::size_t both_positive = 0;
  /// First components of the (+, 0) periods, sorted.
  std::vector<double> first_only_values;
  /// Second components of the (0, +) periods, sorted.
  std::vector<double> second_only_values;
  /// The (+, +) periods, in input order.
  std::vector<Point2> joint_values;

  [[nodiscard]] std::size_t horizon() const { return both_zero + first_only + second_only + both_positive; }
};

inline PartitionedUnivariate partition(std::span<const double> values) {
  PartitionedUnivariate out;
  out.positives.reserve(values.size());
  for (const double x : values) {
    if (x == 0.0) {
      ++out.zero_count;
    } else {
      out.positives.push_back(x);
    }
  }
  std::sort(out.positives.begin(), out.positives.end());
  return out;
}

inline PartitionedBivariate partition(std::span<const double> first, std::span<const double> second) {
  if (first.size() != second.size()) {
    throw std::invalid_argument("partition: components differ in length");
  }
  PartitionedBivariate out;
  for (std::size_t s = 0; s < first.size(); ++s) {
    const bool a = first[s] != 0.0;
    const bool b = second[s] != 0.0;
    if (!a && !b) {
      ++out.both_zero;
    } else if (a && !b) {
      ++out.first_only;
      out.first_only_values.push_back(first[s]);
    } else if (!a && b) {
      ++out.second_only;
      out.second_only_values.push_back(second[s]);
    } else {
      ++out.both_positive;
      out.joint_values.push_back({first[s], second[s]});
    }
  }
  std::sort(out.first_only_values.begin(), out.first_only_values.end());
  std::sort(out.second_only_values.begin(), out.second_only_values.end());
  return out;
}

/// Order-1 Wasserstein distance between two equal-size samples given sorted ascending.
inline double w1_sorted(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("w1_sorted: samples must be non-empty and of equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += std::abs(a[i] - b[i]);
  }
  return total / static_cast<double>(a.size());
}

/// Mean absolute difference of index-matched values.
inline double mean_abs_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("mean_abs_difference: series must be non-empty and of equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += std::abs(a[i] - b[i]);
  }
  return total / static_cast<double>(a.size());
}

inline constexpr unsigned kDefaultHilbertOrder = 16;

/**
 * Approximate order-1 Wasserstein distance between two planar samples.
 *
 * Both samples are mapped onto a common 2^order grid, sorted along the Hilbert
 * curve, and matched rank by rank; the result is the mean Euclidean distance of
 * the matched pairs, hence never below the exact optimum. The grid map uses one
 * scale factor for both axes so the curve sees the geometry of the ground distance.
 */
inline double w1_hilbert(std::span<const Point2> a, std::span<const Point2> b, unsigned order = kDefaultHilbertOrder) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("w1_hilbert: samples must be non-empty and of equal length");
  }
  if (order < 1 || order > 31) {
    throw std::invalid_argument("w1_hilbert: order must lie in [1, 31]");
  }
  std::array<double, 2> low{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  std::array<double, 2> high{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto* sample : {&a, &b}) {
    for (const auto& p : *sample) {
      for (std::size_t axis = 0; axis < 2; ++axis) {
        low[axis] = std::min(low[axis], p[axis]);
        high[axis] = std::max(high[axis], p[axis]);
      }
    }
  }
  const double span = std::max(high[0] - low[0], high[1] - low[1]);
  const double cells = static_cast<double>((std::uint64_t{1} << order) - 1);
  const double scale = span > 0.0 ? cells / span : 0.0;

  const auto to_index = [&](const Point2& p) {
    const auto cell = [&](std::size_t axis) {
      const double scaled = std::round((p[axis] - low[axis]) * scale);
      return static_cast<std::uint32_t>(std::clamp(scaled, 0.0, cells));
    };
    return hilbert_index(GridPoint{cell(0), cell(1), order});
  };
  const auto curve_order = [&](std::span<const Point2> sample) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
      keyed[i] = {to_index(sample[i]), i};
    }
    std::sort(keyed.begin(), keyed.end());
    return keyed;
  };
  const auto order_a = curve_order(a);
  const auto order_b = curve_order(b);
  double total = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    const auto& p = a[order_a[s].second];
    const auto& q = b[order_b[s].second];
    total += std::hypot(p[0] - q[0], p[1] - q[1]);
  }
  return total / static_cast<double>(a.size());
}

enum class Regime { univariate_mixed, bivariate, curve_matching };

/// How the time axis is weighted in curve matching.
enum class GammaMode { zero, infinity, aspect_ratio, fixed };

struct DistanceSpec {
  Regime regime = Regime::univariate_mixed;
  GammaMode gamma_mode = GammaMode::infinity;
  /// Target aspect ratio H:V of the rescaled trace plot (aspect_ratio mode).
  double aspect_h = 2.0;
  double aspect_v = 1.0;
  /// Time weight (fixed mode).
  double gamma = 0.0;
  unsigned hilbert_order = kDefaultHilbertOrder;

  void check() const {
    if (gamma_mode == GammaMode::aspect_ratio && !(aspect_h > 0.0 && aspect_v > 0.0)) {
      throw std::invalid_argument("distance: H and V must be > 0");
    }
    if (gamma_mode == GammaMode::fixed && !(gamma >= 0.0)) {
      throw std::invalid_argument("distance: gamma must be >= 0");
    }
    if (hilbert_order < 1 || hilbert_order > 31) {
      throw std::invalid_argument("distance: hilbert_order must lie in [1, 31]");
    }
  }
};

inline Regime parse_regime(std::string_view name) {
  if (name == "univariate-mixed") return Regime::univariate_mixed;
  if (name == "bivariate") return Regime::bivariate;
  if (name == "curve-matching") return Regime::curve_matching;
  throw std::invalid_argument("unknown distance regime '" + std::string{name} + "'");
}

inline GammaMode parse_gamma_mode(std::string_view name) {
  if (name == "zero") return GammaMode::zero;
  if (name == "infinity") return GammaMode::infinity;
  if (name == "aspect-ratio") return GammaMode::aspect_ratio;
  if (name == "fixed") return GammaMode::fixed;
  throw std::invalid_argument("unknown gamma mode '" + std::string{name} + "'");
}

inline std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::univariate_mixed:
      return "univariate-mixed";
    case Regime::bivariate:
      return "bivariate";
    case Regime::curve_matching:
      return "curve-matching";
  }
  return "";
}

inline std::string_view to_string(GammaMode mode) {
  switch (mode) {
    case GammaMode::zero:
      return "zero";
    case GammaMode::infinity:
      return "infinity";
    case GammaMode::aspect_ratio:
      return "aspect-ratio";
    case GammaMode::fixed:
      return "fixed";
  }
  return "";
}

/// gamma* = (max x - min x) / (t - 1) * H / V, computed from the observed series.
inline double aspect_ratio_gamma(std::span<const double> observed, double h, double v) {
  if (observed.size() < 2) {
    throw std::invalid_argument("aspect-ratio gamma needs at least two periods");
  }
  const auto [lo, hi] = std::minmax_element(observed.begin(), observed.end());
  return (*hi - *lo) / static_cast<double>(observed.size() - 1) * (h / v);
}

/// Resolves the time weight; +inf means index matching.
inline double resolve_gamma(std::span<const double> observed, const DistanceSpec& spec) {
  switch (spec.gamma_mode) {
    case GammaMode::zero:
      return 0.0;
    case GammaMode::infinity:
      return std::numeric_limits<double>::infinity();
    case GammaMode::aspect_ratio:
      return aspect_ratio_gamma(observed, spec.aspect_h, spec.aspect_v);
    case GammaMode::fixed:
      return spec.gamma;
  }
  return 0.0;
}

/// Curve-matching distance for a resolved time weight `gamma`.
inline double curve_distance_with_gamma(std::span<const double> x, std::span<const double> y, double gamma,
                                        unsigned order = kDefaultHilbertOrder) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("curve_distance: series must be non-empty and of equal length");
  }
  if (std::isinf(gamma)) {
    return mean_abs_difference(x, y);
  }
  if (gamma == 0.0) {
    std::vector<double> xs(x.begin(), x.end());
    std::vector<double> ys(y.begin(), y.end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    return w1_sorted(xs, ys);
  }
  std::vector<Point2> a(x.size());
  std::vector<Point2> b(y.size());
  for (std::size_t s = 0; s < x.size(); ++s) {
    const double time = gamma * static_cast<double>(s + 1);
    a[s] = {x[s], time};
    b[s] = {y[s], time};
  }
  return w1_hilbert(a, b, order);
}

/// Curve-matching distance; with aspect-ratio mode gamma* comes from `x`, the observed series.
inline double curve_distance(std::span<const double> x, std::span<const double> y, const DistanceSpec& spec) {
  return curve_distance_with_gamma(x, y, resolve_gamma(x, spec), spec.hilbert_order);
}

/**
 * Distance to a fixed observed data set.
 *
 * Observed-side work (partitioning, sorting, gamma*) is done once at
 * construction. Calls are const and may run concurrently.
 */
class DistanceEvaluator {
 public:
  DistanceEvaluator(const SyntheticData& observed, DistanceSpec spec) : spec_{spec}, horizon_{observed.horizon()} {
    spec_.check();
    if (horizon_ == 0) {
      throw std::invalid_argument("distance: observed data is empty");
    }
    switch (spec_.regime) {
      case Regime::univariate_mixed:
        if (observed.bivariate()) {
          throw std::invalid_argument("distance: univariate regime given bivariate data");
        }
        univariate_ = partition(observed.values);
        break;
      case Regime::bivariate:
        if (!observed.bivariate()) {
          throw std::invalid_argument("distance: bivariate regime given univariate data");
        }
        bivariate_ = partition(observed.values, observed.second_values);
        break;
      case Regime::curve_matching:
        if (observed.bivariate()) {
          throw std::invalid_argument("distance: curve matching needs a univariate series");
        }
        series_ = observed.values;
        gamma_ = resolve_gamma(series_, spec_);
        break;
    }
  }

  [[nodiscard]] const DistanceSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t horizon() const { return horizon_; }
  /// Observed zero count when the distance rejects any other count (mixed regime only).
  [[nodiscard]] std::optional<std::size_t> zero_gate() const {
    if (spec_.regime != Regime::univariate_mixed) return std::nullopt;
    return univariate_.zero_count;
  }
  /// Resolved curve-matching time weight (curve regime only).
  [[nodiscard]] double gamma() const { return gamma_; }

  /// Distance from the observed data to `synthetic`, or kReject.
  [[nodiscard]] double operator()(const SyntheticData& synthetic) const {
    if (synthetic.horizon() != horizon_) {
      throw std::invalid_argument("distance: observed and synthetic horizons differ");
    }
    switch (spec_.regime) {
      case Regime::univariate_mixed:
        return univariate(synthetic.values);
      case Regime::bivariate:
        return bivariate(synthetic);
      case Regime::curve_matching:
        return curve_distance_with_gamma(series_, synthetic.values, gamma_, spec_.hilbert_order);
    }
    return kReject;
  }

 private:
  [[nodiscard]] double univariate(std::span<const double> values) const {
    // The zero gate is checked before anything is sorted.
    const auto zeros = static_cast<std::size_t>(std::count(values.begin(), values.end(), 0.0));
    if (zeros != univariate_.zero_count) {
      return kReject;
    }
    if (univariate_.positives.empty()) {
      return 0.0;
    }
    std::vector<double> positives;
    positives.reserve(values.size() - zeros);
    for (const double x : values) {
      if (x != 0.0) positives.push_back(x);
    }
    std::sort(positives.begin(), positives.end());
    return w1_sorted(univariate_.positives, positives);
  }

  [[nodiscard]] double bivariate(const SyntheticData& synthetic) const {
    if (!synthetic.bivariate()) {
      throw std::invalid_argument("distance: bivariate regime given univariate data");
    }
    const auto other = partition(synthetic.values, synthetic.second_values);
    if (other.both_zero != bivariate_.both_zero || other.first_only != bivariate_.first_only ||
        other.second_only != bivariate_.second_only) {
      return kReject;
    }
    double total = 0.0;
    if (bivariate_.first_only > 0) total += w1_sorted(bivariate_.first_only_values, other.first_only_values);
    if (bivariate_.second_only > 0) total += w1_sorted(bivariate_.second_only_values, other.second_only_values);
    if (bivariate_.both_positive > 0) {
      total += w1_hilbert(bivariate_.joint_values, other.joint_values, spec_.hilbert_order);
    }
    return total;
  }

  DistanceSpec spec_;
  std::size_t horizon_ = 0;
  PartitionedUnivariate univariate_;
  PartitionedBivariate bivariate_;
  std::vector<double> series_;
  double gamma_ = 0.0;
};

/// One-off distance between observed and synthetic data.
inline double distance(const SyntheticData& observed, const SyntheticData& synthetic, const DistanceSpec& spec) {
  if (observed.horizon() != synthetic.horizon()) {
    throw std::invalid_argument("distance: observed and synthetic horizons differ");
  }
  return DistanceEvaluator{observed, spec}(synthetic);
}

}  // namespace abcloss

#endif
