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

#ifndef ABCLOSS_DISTRIBUTIONS_HPP
#define ABCLOSS_DISTRIBUTIONS_HPP

#include <abcloss/random.hpp>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

/**
 * \file
 * \brief Claim frequency and claim severity families, and uniform prior boxes.
 */

namespace abcloss {

/// A point in parameter space. Component names live in the matching PriorBox.
using ParameterPoint = Eigen::VectorXd;

/// Number of claims in a period.
using ClaimCount = std::uint64_t;

/// Thrown when a family is given parameters outside its domain.
class ParameterDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Frequency families
// ---------------------------------------------------------------------------

/// pmf (1 - p) p^n on n = 0, 1, ...
struct Geometric {
  double p;
};

struct Poisson {
  double lambda;
};

/// pmf C(alpha + n - 1, n) p^alpha (1 - p)^n.
struct NegativeBinomial {
  double alpha;
  double p;
};

/// Two Poisson counts sharing a latent LogNormal(0, sigma) intensity multiplier.
struct BivariateMixedPoisson {
  double sigma;
  double w1;
  double w2;
};

/// Poisson increments of a process with rate a + b (1 + sin(2 pi c t)).
struct CyclicalPoisson {
  double a;
  double b;
  double c;
};

using FrequencyFamily = std::variant<Geometric, Poisson, NegativeBinomial, BivariateMixedPoisson, CyclicalPoisson>;

enum class FrequencyKind { geometric, poisson, negative_binomial, bivariate_mixed_poisson, cyclical_poisson };

/// Claim counts of one period. `second` is only used by the bivariate family.
struct ClaimCounts {
  ClaimCount first = 0;
  ClaimCount second = 0;

  friend bool operator==(const ClaimCounts&, const ClaimCounts&) = default;
};

// ---------------------------------------------------------------------------
// Severity families
// ---------------------------------------------------------------------------

/// Exponential with mean `scale`.
struct Exponential {
  double scale;
};

/// Gamma with pdf e^{-x/m} x^{r-1} / (m^r Gamma(r)).
struct Gamma {
  double shape;
  double scale;
};

struct Weibull {
  double shape;
  double scale;
};

struct LogNormal {
  double mu;
  double sigma;
};

/// Exponential with mean scale * exp(dependence * n), where n is the claim count of the period.
struct FrequencyDependentExponential {
  double scale;
  double dependence;
};

using SeverityFamily = std::variant<Exponential, Gamma, Weibull, LogNormal, FrequencyDependentExponential>;

enum class SeverityKind { exponential, gamma, weibull, lognormal, frequency_dependent_exponential };

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) {
    throw ParameterDomainError(message);
  }
}

inline bool positive(double value) { return std::isfinite(value) && value > 0.0; }

}  // namespace detail

inline void validate(const Geometric& f) { detail::require(f.p > 0.0 && f.p < 1.0, "geometric: p must lie in (0, 1)"); }
inline void validate(const Poisson& f) { detail::require(detail::positive(f.lambda), "poisson: lambda must be > 0"); }
inline void validate(const NegativeBinomial& f) {
  detail::require(detail::positive(f.alpha), "negbin: alpha must be > 0");
  detail::require(f.p > 0.0 && f.p < 1.0, "negbin: p must lie in (0, 1)");
}
inline void validate(const BivariateMixedPoisson& f) {
  detail::require(detail::positive(f.sigma), "bivariate-poisson: sigma must be > 0");
  detail::require(detail::positive(f.w1) && detail::positive(f.w2), "bivariate-poisson: w1, w2 must be > 0");
}
inline void validate(const CyclicalPoisson& f) {
  detail::require(f.a >= 0.0 && f.b >= 0.0 && f.a + f.b > 0.0 && std::isfinite(f.a + f.b),
                  "cyclical-poisson: a, b must be >= 0 with a + b > 0");
  detail::require(detail::positive(f.c), "cyclical-poisson: c must be > 0");
}

inline void validate(const Exponential& f) { detail::require(detail::positive(f.scale), "exponential: scale must be > 0"); }
inline void validate(const Gamma& f) {
  detail::require(detail::positive(f.shape) && detail::positive(f.scale), "gamma: r, m must be > 0");
}
inline void validate(const Weibull& f) {
  detail::require(detail::positive(f.shape) && detail::positive(f.scale), "weibull: k, beta must be > 0");
}
inline void validate(const LogNormal& f) {
  detail::require(std::isfinite(f.mu), "lognormal: mu must be finite");
  detail::require(detail::positive(f.sigma), "lognormal: sigma must be > 0");
}
inline void validate(const FrequencyDependentExponential& f) {
  detail::require(detail::positive(f.scale), "dep-exp: beta must be > 0");
  detail::require(std::isfinite(f.dependence), "dep-exp: delta must be finite");
}

inline void validate(const FrequencyFamily& family) {
  std::visit([](const auto& f) { validate(f); }, family);
}

inline void validate(const SeverityFamily& family) {
  std::visit([](const auto& f) { validate(f); }, family);
}

// ---------------------------------------------------------------------------
// Kinds, names and construction from parameter vectors
// ---------------------------------------------------------------------------

inline std::vector<std::string> parameter_names(FrequencyKind kind) {
  switch (kind) {
    case FrequencyKind::geometric:
      return {"p"};
    case FrequencyKind::poisson:
      return {"lambda"};
    case FrequencyKind::negative_binomial:
      return {"alpha", "p"};
    case FrequencyKind::bivariate_mixed_poisson:
      return {"sigma", "w1", "w2"};
    case FrequencyKind::cyclical_poisson:
      return {"a", "b", "c"};
  }
  return {};
}

inline std::vector<std::string> parameter_names(SeverityKind kind) {
  switch (kind) {
    case SeverityKind::exponential:
      return {"delta"};
    case SeverityKind::gamma:
      return {"r", "m"};
    case SeverityKind::weibull:
      return {"k", "beta"};
    case SeverityKind::lognormal:
      return {"mu", "sigma"};
    case SeverityKind::frequency_dependent_exponential:
      return {"beta", "delta"};
  }
  return {};
}

inline std::size_t parameter_count(FrequencyKind kind) { return parameter_names(kind).size(); }
inline std::size_t parameter_count(SeverityKind kind) { return parameter_names(kind).size(); }

inline FrequencyKind parse_frequency_kind(std::string_view name) {
  if (name == "geometric" || name == "geom") return FrequencyKind::geometric;
  if (name == "poisson") return FrequencyKind::poisson;
  if (name == "negbin") return FrequencyKind::negative_binomial;
  if (name == "bivariate-poisson") return FrequencyKind::bivariate_mixed_poisson;
  if (name == "cyclical-poisson") return FrequencyKind::cyclical_poisson;
  throw std::invalid_argument("unknown frequency family '" + std::string{name} + "'");
}

inline SeverityKind parse_severity_kind(std::string_view name) {
  if (name == "exponential" || name == "exp") return SeverityKind::exponential;
  if (name == "gamma") return SeverityKind::gamma;
  if (name == "weibull") return SeverityKind::weibull;
  if (name == "lognormal") return SeverityKind::lognormal;
  if (name == "dep-exp") return SeverityKind::frequency_dependent_exponential;
  throw std::invalid_argument("unknown severity family '" + std::string{name} + "'");
}

inline std::string_view to_string(FrequencyKind kind) {
  switch (kind) {
    case FrequencyKind::geometric:
      return "geometric";
    case FrequencyKind::poisson:
      return "poisson";
    case FrequencyKind::negative_binomial:
      return "negbin";
    case FrequencyKind::bivariate_mixed_poisson:
      return "bivariate-poisson";
    case FrequencyKind::cyclical_poisson:
      return "cyclical-poisson";
  }
  return "";
}

inline std::string_view to_string(SeverityKind kind) {
  switch (kind) {
    case SeverityKind::exponential:
      return "exponential";
    case SeverityKind::gamma:
      return "gamma";
    case SeverityKind::weibull:
      return "weibull";
    case SeverityKind::lognormal:
      return "lognormal";
    case SeverityKind::frequency_dependent_exponential:
      return "dep-exp";
  }
  return "";
}

/// Builds a validated frequency family from its parameters, in `parameter_names` order.
inline FrequencyFamily make_frequency(FrequencyKind kind, std::span<const double> params) {
  if (params.size() != parameter_count(kind)) {
    throw std::invalid_argument("wrong number of frequency parameters");
  }
  FrequencyFamily family = Geometric{0.5};
  switch (kind) {
    case FrequencyKind::geometric:
      family = Geometric{params[0]};
      break;
    case FrequencyKind::poisson:
      family = Poisson{params[0]};
      break;
    case FrequencyKind::negative_binomial:
      family = NegativeBinomial{params[0], params[1]};
      break;
    case FrequencyKind::bivariate_mixed_poisson:
      family = BivariateMixedPoisson{params[0], params[1], params[2]};
      break;
    case FrequencyKind::cyclical_poisson:
      family = CyclicalPoisson{params[0], params[1], params[2]};
      break;
  }
  validate(family);
  return family;
}

/// Builds a validated severity family from its parameters, in `parameter_names` order.
inline SeverityFamily make_severity(SeverityKind kind, std::span<const double> params) {
  if (params.size() != parameter_count(kind)) {
    throw std::invalid_argument("wrong number of severity parameters");
  }
  SeverityFamily family = Exponential{1.0};
  switch (kind) {
    case SeverityKind::exponential:
      family = Exponential{params[0]};
      break;
    case SeverityKind::gamma:
      family = Gamma{params[0], params[1]};
      break;
    case SeverityKind::weibull:
      family = Weibull{params[0], params[1]};
      break;
    case SeverityKind::lognormal:
      family = LogNormal{params[0], params[1]};
      break;
    case SeverityKind::frequency_dependent_exponential:
      family = FrequencyDependentExponential{params[0], params[1]};
      break;
  }
  validate(family);
  return family;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Expected number of claims of a cyclical Poisson process over the period (s - 1, s].
inline double integrated_intensity(double a, double b, double c, double period) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (b == 0.0) {
    return a;
  }
  return a + b + (b / (two_pi * c)) * (std::cos(two_pi * c * (period - 1.0)) - std::cos(two_pi * c * period));
}

namespace detail {

inline ClaimCount draw_poisson(double mean, RandomStream& rng) {
  if (!(mean > 0.0)) {
    return 0;
  }
  std::poisson_distribution<ClaimCount> poisson{mean};
  return poisson(rng);
}

}  // namespace detail

/**
 * Draws the claim count(s) of one period.
 *
 * `period` is 1-based and only matters for the cyclical family. The bivariate
 * family draws a fresh latent intensity for every call.
 */
inline ClaimCounts sample_frequency(const FrequencyFamily& family, std::size_t period, RandomStream& rng) {
  validate(family);
  return std::visit(
      [&](const auto& f) -> ClaimCounts {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          std::geometric_distribution<ClaimCount> geometric{1.0 - f.p};
          return {geometric(rng), 0};
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return {detail::draw_poisson(f.lambda, rng), 0};
        } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
          // Gamma-Poisson mixture.
          std::gamma_distribution<double> mixing{f.alpha, (1.0 - f.p) / f.p};
          return {detail::draw_poisson(mixing(rng), rng), 0};
        } else if constexpr (std::is_same_v<T, BivariateMixedPoisson>) {
          std::normal_distribution<double> normal{0.0, f.sigma};
          const double latent = std::exp(normal(rng));
          const auto first = detail::draw_poisson(latent * f.w1, rng);
          const auto second = detail::draw_poisson(latent * f.w2, rng);
          return {first, second};
        } else {
          if (period < 1) {
            throw std::invalid_argument("cyclical-poisson: period index must be >= 1");
          }
          return {detail::draw_poisson(integrated_intensity(f.a, f.b, f.c, static_cast<double>(period)), rng), 0};
        }
      },
      family);
}

/// Draws one claim size. `n_claims` is the claim count of the period (used by dep-exp only).
inline double sample_claim(const SeverityFamily& family, ClaimCount n_claims, RandomStream& rng) {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Exponential>) {
          return -f.scale * std::log(open_uniform(rng));
        } else if constexpr (std::is_same_v<T, Gamma>) {
          std::gamma_distribution<double> gamma{f.shape, f.scale};
          return gamma(rng);
        } else if constexpr (std::is_same_v<T, Weibull>) {
          return f.scale * std::pow(-std::log(open_uniform(rng)), 1.0 / f.shape);
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          std::normal_distribution<double> normal{f.mu, f.sigma};
          return std::exp(normal(rng));
        } else {
          const double scale = f.scale * std::exp(f.dependence * static_cast<double>(n_claims));
          return -scale * std::log(open_uniform(rng));
        }
      },
      family);
}

/// Draws `n_claims` iid claim sizes.
inline std::vector<double> sample_severity(const SeverityFamily& family, ClaimCount n_claims, RandomStream& rng) {
  validate(family);
  std::vector<double> claims(n_claims);
  for (auto& claim : claims) {
    claim = sample_claim(family, n_claims, rng);
  }
  return claims;
}

/// Sum of `n_claims` iid claim sizes, without materializing them.
inline double sample_severity_total(const SeverityFamily& family, ClaimCount n_claims, RandomStream& rng) {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        double total = 0.0;
        if constexpr (std::is_same_v<T, Gamma>) {
          std::gamma_distribution<double> gamma{f.shape, f.scale};
          for (ClaimCount i = 0; i < n_claims; ++i) total += gamma(rng);
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          std::normal_distribution<double> normal{f.mu, f.sigma};
          for (ClaimCount i = 0; i < n_claims; ++i) total += std::exp(normal(rng));
        } else if constexpr (std::is_same_v<T, Weibull>) {
          const double inverse_shape = 1.0 / f.shape;
          for (ClaimCount i = 0; i < n_claims; ++i) total += std::pow(-std::log(open_uniform(rng)), inverse_shape);
          total *= f.scale;
        } else {
          double scale = 0.0;
          if constexpr (std::is_same_v<T, Exponential>) {
            scale = f.scale;
          } else {
            scale = f.scale * std::exp(f.dependence * static_cast<double>(n_claims));
          }
          for (ClaimCount i = 0; i < n_claims; ++i) total -= std::log(open_uniform(rng));
          total *= scale;
        }
        return total;
      },
      family);
}

// ---------------------------------------------------------------------------
// Log mass / density
// ---------------------------------------------------------------------------

namespace detail {

inline double log_poisson(ClaimCount n, double mean) {
  const auto k = static_cast<double>(n);
  if (mean == 0.0) {
    return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return -mean + k * std::log(mean) - std::lgamma(k + 1.0);
}

/// log of x^{s-1} at x = 0, with the conventions 0^0 = 1, 0^{neg} = inf.
inline double log_power_at_zero(double exponent) {
  if (exponent == 0.0) return 0.0;
  return exponent > 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Log pmf of claim counts. `period` is used by the cyclical family only.
inline double log_mass(const FrequencyFamily& family, ClaimCounts counts, std::size_t period = 1) {
  validate(family);
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        const auto n = static_cast<double>(counts.first);
        if constexpr (std::is_same_v<T, Geometric>) {
          return std::log1p(-f.p) + n * std::log(f.p);
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return detail::log_poisson(counts.first, f.lambda);
        } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
          return std::lgamma(f.alpha + n) - std::lgamma(n + 1.0) - std::lgamma(f.alpha) + f.alpha * std::log(f.p) +
                 n * std::log1p(-f.p);
        } else if constexpr (std::is_same_v<T, BivariateMixedPoisson>) {
          // Integrate the latent log-intensity z ~ N(0, 1), Lambda = exp(sigma z).
          const auto integrand = [&](double z) {
            const double latent = std::exp(f.sigma * z);
            const double log_terms = detail::log_poisson(counts.first, latent * f.w1) +
                                     detail::log_poisson(counts.second, latent * f.w2) - 0.5 * z * z;
            return std::exp(log_terms) / std::sqrt(2.0 * std::numbers::pi);
          };
          const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -12.0, 12.0, 12, 1e-13);
          return std::log(mass);
        } else {
          return detail::log_poisson(counts.first, integrated_intensity(f.a, f.b, f.c, static_cast<double>(period)));
        }
      },
      family);
}

/// Log pdf of a claim size; negative infinity outside the support. `n_claims` is used by dep-exp only.
inline double log_density(const SeverityFamily& family, double x, ClaimCount n_claims = 0) {
  validate(family);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (!(x >= 0.0) || !std::isfinite(x)) {
    return neg_inf;
  }
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Exponential>) {
          return -std::log(f.scale) - x / f.scale;
        } else if constexpr (std::is_same_v<T, Gamma>) {
          const double power = x == 0.0 ? detail::log_power_at_zero(f.shape - 1.0) : (f.shape - 1.0) * std::log(x);
          return power - x / f.scale - f.shape * std::log(f.scale) - std::lgamma(f.shape);
        } else if constexpr (std::is_same_v<T, Weibull>) {
          const double z = x / f.scale;
          const double power = x == 0.0 ? detail::log_power_at_zero(f.shape - 1.0) : (f.shape - 1.0) * std::log(z);
          return std::log(f.shape / f.scale) + power - std::pow(z, f.shape);
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          if (x == 0.0) return neg_inf;
          const double z = (std::log(x) - f.mu) / f.sigma;
          return -std::log(x * f.sigma * std::sqrt(2.0 * std::numbers::pi)) - 0.5 * z * z;
        } else {
          const double scale = f.scale * std::exp(f.dependence * static_cast<double>(n_claims));
          return -std::log(scale) - x / scale;
        }
      },
      family);
}

// ---------------------------------------------------------------------------
// Uniform prior boxes
// ---------------------------------------------------------------------------

/// Independent uniform priors on open intervals (low, high).
class PriorBox {
 public:
  PriorBox() = default;

  PriorBox(std::vector<std::string> names, std::vector<std::pair<double, double>> bounds)
      : names_{std::move(names)}, bounds_{std::move(bounds)} {
    if (names_.size() != bounds_.size()) {
      throw std::invalid_argument("prior box: names and bounds differ in length");
    }
    if (bounds_.empty()) {
      throw std::invalid_argument("prior box: at least one parameter is required");
    }
    log_density_ = 0.0;
    for (const auto& [low, high] : bounds_) {
      if (!(std::isfinite(low) && std::isfinite(high) && low < high)) {
        throw std::invalid_argument("prior box: every component needs finite low < high");
      }
      log_density_ -= std::log(high - low);
    }
  }

  [[nodiscard]] std::size_t dimension() const { return bounds_.size(); }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  [[nodiscard]] const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
  [[nodiscard]] double low(std::size_t i) const { return bounds_[i].first; }
  [[nodiscard]] double high(std::size_t i) const { return bounds_[i].second; }
  [[nodiscard]] double width(std::size_t i) const { return bounds_[i].second - bounds_[i].first; }

  [[nodiscard]] bool contains(const ParameterPoint& theta) const {
    if (static_cast<std::size_t>(theta.size()) != dimension()) {
      return false;
    }
    for (std::size_t i = 0; i < dimension(); ++i) {
      const double value = theta[static_cast<Eigen::Index>(i)];
      if (!(value > bounds_[i].first && value < bounds_[i].second)) {
        return false;
      }
    }
    return true;
  }

  /// Density inside the box (the same everywhere inside).
  [[nodiscard]] double inside_density() const { return std::exp(log_density_); }

 private:
  std::vector<std::string> names_;
  std::vector<std::pair<double, double>> bounds_;
  double log_density_ = 0.0;
};

inline ParameterPoint prior_sample(const PriorBox& box, RandomStream& rng) {
  ParameterPoint theta(static_cast<Eigen::Index>(box.dimension()));
  for (std::size_t i = 0; i < box.dimension(); ++i) {
    theta[static_cast<Eigen::Index>(i)] = box.low(i) + box.width(i) * open_uniform(rng);
  }
  return theta;
}

inline double prior_density(const PriorBox& box, const ParameterPoint& theta) {
  return box.contains(theta) ? box.inside_density() : 0.0;
}

}  // namespace abcloss

#endif
