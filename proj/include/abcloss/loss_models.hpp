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

#ifndef ABCLOSS_LOSS_MODELS_HPP
#define ABCLOSS_LOSS_MODELS_HPP

#include <abcloss/distributions.hpp>
#include <abcloss/random.hpp>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/**
 * \file
 * \brief Generative compound loss models.
 *
 * A model draws a claim count per period (or takes it from observed data),
 * draws the claim sizes, and reports only a per-period summary of them.
 */

namespace abcloss {

enum class SummaryKind { sum, quota_share, stop_loss, bivariate_pair_of_sums, time_indexed_sum };

/// The map from (claim count, claim sizes) to the reported per-period value.
struct SummaryOperator {
  SummaryKind kind = SummaryKind::sum;
  /// Retention share for quota-share, priority for stop-loss; unused otherwise.
  double constant = 0.0;

  static SummaryOperator sum() { return {SummaryKind::sum, 0.0}; }
  static SummaryOperator quota_share(double share) {
    if (!(share > 0.0 && share < 1.0)) {
      throw std::invalid_argument("quota-share: share must lie in (0, 1)");
    }
    return {SummaryKind::quota_share, share};
  }
  static SummaryOperator stop_loss(double priority) {
    if (!(priority >= 0.0) || !std::isfinite(priority)) {
      throw std::invalid_argument("stop-loss: priority must be >= 0");
    }
    return {SummaryKind::stop_loss, priority};
  }
  static SummaryOperator bivariate_pair_of_sums() { return {SummaryKind::bivariate_pair_of_sums, 0.0}; }
  static SummaryOperator time_indexed_sum() { return {SummaryKind::time_indexed_sum, 0.0}; }

  [[nodiscard]] bool bivariate() const { return kind == SummaryKind::bivariate_pair_of_sums; }
};

inline SummaryKind parse_summary_kind(std::string_view name) {
  if (name == "sum") return SummaryKind::sum;
  if (name == "quota-share") return SummaryKind::quota_share;
  if (name == "stop-loss") return SummaryKind::stop_loss;
  if (name == "bivariate-sum") return SummaryKind::bivariate_pair_of_sums;
  if (name == "time-indexed-sum") return SummaryKind::time_indexed_sum;
  throw std::invalid_argument("unknown summary operator '" + std::string{name} + "'");
}

inline std::string_view to_string(SummaryKind kind) {
  switch (kind) {
    case SummaryKind::sum:
      return "sum";
    case SummaryKind::quota_share:
      return "quota-share";
    case SummaryKind::stop_loss:
      return "stop-loss";
    case SummaryKind::bivariate_pair_of_sums:
      return "bivariate-sum";
    case SummaryKind::time_indexed_sum:
      return "time-indexed-sum";
  }
  return "";
}

/// Applies a univariate summary operator to the total claim amount of a period.
inline double apply_summary_to_total(const SummaryOperator& op, double total) {
  switch (op.kind) {
    case SummaryKind::quota_share:
      return op.constant * total;
    case SummaryKind::stop_loss:
      return std::max(total - op.constant, 0.0);
    default:
      return total;
  }
}

/// Applies a univariate summary operator to the claim sizes of a period.
inline double apply_summary(const SummaryOperator& op, std::span<const double> claims) {
  return apply_summary_to_total(op, std::accumulate(claims.begin(), claims.end(), 0.0));
}

/// Claim counts supplied with the data. `second` is only filled for bivariate data.
struct ObservedFrequencies {
  std::vector<ClaimCount> first;
  std::vector<ClaimCount> second;
};

/// The generative program behind observed-style data.
struct LossModelSpec {
  FrequencyKind frequency = FrequencyKind::poisson;
  SeverityKind severity = SeverityKind::exponential;
  /// Severity of the second portfolio; required by the bivariate summary.
  std::optional<SeverityKind> second_severity;
  SummaryOperator summary;
  /// When present the frequency family is ignored and these counts are used verbatim.
  std::optional<ObservedFrequencies> observed_frequencies;

  [[nodiscard]] bool uses_observed_frequencies() const { return observed_frequencies.has_value(); }

  /// Parameter names in the order expected by `simulate`.
  [[nodiscard]] std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    if (!uses_observed_frequencies()) {
      names = abcloss::parameter_names(frequency);
    }
    const auto first = abcloss::parameter_names(severity);
    if (second_severity) {
      for (const auto& name : first) names.push_back(name + "1");
      for (const auto& name : abcloss::parameter_names(*second_severity)) names.push_back(name + "2");
    } else {
      names.insert(names.end(), first.begin(), first.end());
    }
    return names;
  }

  [[nodiscard]] std::size_t parameter_count() const { return parameter_names().size(); }

  /// Throws std::invalid_argument when the combination cannot be simulated.
  void check() const {
    const bool bivariate_frequency = frequency == FrequencyKind::bivariate_mixed_poisson;
    if (summary.bivariate()) {
      if (!second_severity) {
        throw std::invalid_argument("bivariate summary needs a second severity family");
      }
      if (!uses_observed_frequencies() && !bivariate_frequency) {
        throw std::invalid_argument("bivariate summary needs the bivariate-poisson frequency or observed counts");
      }
      if (uses_observed_frequencies() && observed_frequencies->second.size() != observed_frequencies->first.size()) {
        throw std::invalid_argument("bivariate summary needs two observed count columns of equal length");
      }
    } else {
      if (second_severity) {
        throw std::invalid_argument("second severity family is only meaningful for the bivariate summary");
      }
      if (!uses_observed_frequencies() && bivariate_frequency) {
        throw std::invalid_argument("bivariate-poisson frequency needs the bivariate summary");
      }
    }
  }
};

/// Simulated (or observed) per-period summaries.
struct SyntheticData {
  /// x_s, or the first component for bivariate data.
  std::vector<double> values;
  /// Second component for bivariate data; empty otherwise.
  std::vector<double> second_values;
  /// Claim counts behind each period, as drawn or as supplied.
  std::vector<ClaimCounts> counts;

  [[nodiscard]] std::size_t horizon() const { return values.size(); }
  [[nodiscard]] bool bivariate() const { return !second_values.empty(); }
};

namespace detail {

// Simulates period by period; `keep_going(value)` sees each univariate summary
// and may end the run early. Returns false when it did.
template <class KeepGoing>
bool simulate_periods(const LossModelSpec& spec, const ParameterPoint& theta, std::size_t horizon, RandomStream& rng,
                      SyntheticData& out, KeepGoing&& keep_going) {
  if (horizon < 1) {
    throw std::invalid_argument("simulate: horizon must be >= 1");
  }
  if (static_cast<std::size_t>(theta.size()) != spec.parameter_count()) {
    throw std::invalid_argument("simulate: parameter vector has the wrong length");
  }
  const std::span<const double> params{theta.data(), static_cast<std::size_t>(theta.size())};
  std::size_t offset = 0;

  std::optional<FrequencyFamily> frequency;
  if (!spec.uses_observed_frequencies()) {
    const auto count = parameter_count(spec.frequency);
    frequency = make_frequency(spec.frequency, params.subspan(offset, count));
    offset += count;
  } else if (spec.observed_frequencies->first.size() < horizon) {
    throw std::invalid_argument("simulate: fewer observed frequencies than periods");
  }
  const auto severity_count = parameter_count(spec.severity);
  const SeverityFamily severity = make_severity(spec.severity, params.subspan(offset, severity_count));
  offset += severity_count;
  std::optional<SeverityFamily> second_severity;
  if (spec.second_severity) {
    second_severity = make_severity(*spec.second_severity, params.subspan(offset, parameter_count(*spec.second_severity)));
  }

  const bool bivariate = spec.summary.bivariate();
  out.values.resize(horizon);
  out.counts.resize(horizon);
  if (bivariate) {
    out.second_values.resize(horizon);
  } else {
    out.second_values.clear();
  }

  for (std::size_t s = 0; s < horizon; ++s) {
    ClaimCounts counts;
    if (frequency) {
      counts = sample_frequency(*frequency, s + 1, rng);
    } else {
      counts.first = spec.observed_frequencies->first[s];
      if (bivariate) {
        counts.second = spec.observed_frequencies->second[s];
      }
    }
    out.counts[s] = counts;
    // Severities are drawn even when the summary discards them (stop-loss below the priority).
    const double total = sample_severity_total(severity, counts.first, rng);
    if (bivariate) {
      out.values[s] = total;
      out.second_values[s] = sample_severity_total(*second_severity, counts.second, rng);
    } else {
      out.values[s] = apply_summary_to_total(spec.summary, total);
      if (!keep_going(out.values[s])) return false;
    }
  }
  return true;
}

}  // namespace detail

/**
 * Simulates `horizon` periods of summaries under parameters `theta`.
 *
 * `theta` follows `spec.parameter_names()`. The output is written into `out`
 * so callers in a hot loop can reuse its buffers.
 */
inline void simulate_into(const LossModelSpec& spec, const ParameterPoint& theta, std::size_t horizon, RandomStream& rng,
                          SyntheticData& out) {
  detail::simulate_periods(spec, theta, horizon, rng, out, [](double) { return true; });
}

/**
 * Like `simulate_into`, but stops once the number of zero summaries can no
 * longer equal `zeros`. Returns false in that case, leaving `out` partial.
 *
 * The mixed distance rejects any such data, so the sampler can skip the rest.
 */
inline bool simulate_with_zero_count(const LossModelSpec& spec, const ParameterPoint& theta, std::size_t horizon,
                                     std::size_t zeros, RandomStream& rng, SyntheticData& out) {
  std::size_t seen_zeros = 0;
  std::size_t seen_positives = 0;
  const std::size_t positives = horizon >= zeros ? horizon - zeros : 0;
  return detail::simulate_periods(spec, theta, horizon, rng, out, [&](double value) {
    if (value == 0.0) return ++seen_zeros <= zeros;
    return ++seen_positives <= positives;
  });
}

inline SyntheticData simulate(const LossModelSpec& spec, const ParameterPoint& theta, std::size_t horizon,
                              RandomStream& rng) {
  SyntheticData out;
  simulate_into(spec, theta, horizon, rng, out);
  return out;
}

}  // namespace abcloss

#endif
