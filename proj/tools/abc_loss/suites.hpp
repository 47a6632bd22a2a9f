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
#ifndef ABC_LOSS_SUITES_HPP
#define ABC_LOSS_SUITES_HPP

#include <abcloss/distances.hpp>
#include <abcloss/hilbert.hpp>
#include <abcloss/loss_models.hpp>
#include <abcloss/model_selection.hpp>
#include <abcloss/oracles.hpp>
#include <abcloss/random.hpp>
#include <abcloss/smc.hpp>
#include <abcloss/stats.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

/**
 * \file
 * \brief End-to-end acceptance studies and property suites.
 *
 * Each study simulates data from a known model, runs the sampler, and checks
 * the posterior against the stated tolerance. Stochastic studies are repeated
 * over fixed seeds and vote; a study stops early once its vote is decided.
 */

namespace abcloss::suites {

using namespace abcloss::stats;

/// One pass/fail observation.
struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::string title;
  bool passed = false;
  std::vector<Check> checks;
};

struct SuiteOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t workers = 1;
  /// Per-run progress lines; may be null.
  std::ostream* progress = nullptr;
};

/// Seed shares required by the stochastic studies.
inline constexpr double kFourOfFive = 0.8;
inline constexpr double kMajority = 0.51;

namespace detail {

inline std::string fixed(double value, int digits = 4) {
  std::ostringstream out;
  out << std::setprecision(digits) << value;
  return out.str();
}

inline void note(const SuiteOptions& options, const std::string& line) {
  if (options.progress != nullptr) *options.progress << "  " << line << std::endl;
}

inline std::vector<double> column(const Population& population, Eigen::Index j) {
  std::vector<double> out;
  for (const auto& particle : population.particles) out.push_back(particle.theta[j]);
  return out;
}

inline std::vector<double> weights(const Population& population) {
  std::vector<double> out;
  for (const auto& particle : population.particles) out.push_back(particle.weight);
  return out;
}

struct Marginal {
  double mean = 0.0;
  double sd = 0.0;
  double low = 0.0;
  double high = 0.0;

  [[nodiscard]] bool covers(double value) const { return low <= value && value <= high; }
  [[nodiscard]] std::string describe() const {
    return "mean " + fixed(mean) + ", 90% [" + fixed(low) + ", " + fixed(high) + "]";
  }
};

inline Marginal marginal(const Population& population, Eigen::Index j) {
  const auto values = column(population, j);
  const auto w = weights(population);
  return {weighted_mean(values, w), weighted_sd(values, w), weighted_quantile(values, w, 0.05),
          weighted_quantile(values, w, 0.95)};
}

inline SamplerOptions sampler(std::size_t particles, std::size_t generations, std::uint64_t seed,
                              const SuiteOptions& options) {
  SamplerOptions out;
  out.particles = particles;
  out.generations = generations;
  out.seed = seed;
  out.workers = options.workers;
  return out;
}

/**
 * Runs `trial` over the seeds and passes when at least `share` of them pass.
 *
 * Stops as soon as the outcome can no longer change.
 */
inline Check vote(const std::string& name, const SuiteOptions& options, double share,
                  const std::function<Check(std::uint64_t)>& trial, std::vector<Check>& log) {
  const std::size_t total = options.seeds.size();
  const auto required = static_cast<std::size_t>(std::ceil(share * static_cast<double>(total) - 1e-9));
  std::size_t passes = 0;
  std::size_t runs = 0;
  for (const auto seed : options.seeds) {
    if (passes >= required || passes + (total - runs) < required) break;
    auto check = trial(seed);
    check.name = name + " seed " + std::to_string(seed);
    note(options, check.name + ": " + (check.passed ? "pass" : "FAIL") + " (" + check.detail + ")");
    log.push_back(check);
    passes += check.passed ? 1 : 0;
    ++runs;
  }
  return {name, passes >= required,
          std::to_string(passes) + " of " + std::to_string(runs) + " seeds run passed, " + std::to_string(required) +
              " of " + std::to_string(total) + " required"};
}

inline Report finish(std::string title, std::vector<Check> verdicts, std::vector<Check> log) {
  Report report{std::move(title), true, {}};
  for (const auto& verdict : verdicts) report.passed = report.passed && verdict.passed;
  report.checks = std::move(verdicts);
  report.checks.insert(report.checks.end(), log.begin(), log.end());
  return report;
}

inline ObservedFrequencies counts_of(const SyntheticData& data) {
  ObservedFrequencies out;
  for (const auto& c : data.counts) out.first.push_back(c.first);
  return out;
}

inline ParameterPoint point(std::initializer_list<double> values) {
  ParameterPoint out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double v : values) out[i++] = v;
  return out;
}

inline SyntheticData simulate_study(const LossModelSpec& spec, const ParameterPoint& theta, std::size_t horizon,
                                    std::uint64_t seed, std::uint64_t study) {
  auto rng = make_stream(seed, {0xacce, study, horizon});
  return simulate(spec, theta, horizon, rng);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Study models
// ---------------------------------------------------------------------------

namespace studies {

inline LossModelSpec geom_exp() {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::geometric;
  spec.severity = SeverityKind::exponential;
  return spec;
}

inline PriorBox geom_exp_prior() { return PriorBox{{"p", "delta"}, {{0.0, 1.0}, {0.0, 100.0}}}; }

/// Stop-loss priority of the negative binomial Weibull studies.
inline constexpr double kStopLoss = 1.0;

inline LossModelSpec negbin(SeverityKind severity) {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::negative_binomial;
  spec.severity = severity;
  spec.summary = SummaryOperator::stop_loss(kStopLoss);
  return spec;
}

inline PriorBox negbin_weibull_prior() {
  return PriorBox{{"alpha", "p", "k", "beta"}, {{0.0, 10.0}, {0.001, 1.0}, {0.1, 10.0}, {0.0, 20.0}}};
}
inline PriorBox negbin_gamma_prior() {
  return PriorBox{{"alpha", "p", "r", "m"}, {{0.0, 20.0}, {0.001, 1.0}, {0.0, 10.0}, {0.0, 20.0}}};
}
inline PriorBox weibull_prior() { return PriorBox{{"k", "beta"}, {{0.1, 10.0}, {0.0, 20.0}}}; }
inline PriorBox gamma_prior() { return PriorBox{{"r", "m"}, {{0.0, 10.0}, {0.0, 20.0}}}; }

/// NegBin(4, 2/3) counts, Weib(1/3, 1) claims, stop-loss summaries.
inline SyntheticData negbin_weibull_data(std::size_t horizon, std::uint64_t seed) {
  return detail::simulate_study(negbin(SeverityKind::weibull), detail::point({4.0, 2.0 / 3.0, 1.0 / 3.0, 1.0}), horizon,
                                seed, 2);
}

inline LossModelSpec with_counts(LossModelSpec spec, const SyntheticData& data) {
  spec.observed_frequencies = detail::counts_of(data);
  return spec;
}

inline LossModelSpec poisson_depexp() {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::poisson;
  spec.severity = SeverityKind::frequency_dependent_exponential;
  return spec;
}

inline PriorBox poisson_depexp_prior() {
  return PriorBox{{"lambda", "beta", "delta"}, {{0.0, 10.0}, {0.0, 20.0}, {-1.0, 1.0}}};
}

inline LossModelSpec individual(SeverityKind severity, std::size_t n) {
  LossModelSpec spec;
  spec.severity = severity;
  spec.observed_frequencies = ObservedFrequencies{std::vector<ClaimCount>(n, 1), {}};
  return spec;
}

inline ModelEnsemble individual_ensemble(std::size_t n) {
  ModelEnsemble ensemble;
  ensemble.models.push_back({individual(SeverityKind::gamma, n), PriorBox{{"r", "m"}, {{0.0, 5.0}, {0.0, 100.0}}}, "gamma"});
  ensemble.models.push_back(
      {individual(SeverityKind::lognormal, n), PriorBox{{"mu", "sigma"}, {{-20.0, 20.0}, {0.0, 5.0}}}, "lognormal"});
  ensemble.models.push_back(
      {individual(SeverityKind::weibull, n), PriorBox{{"k", "beta"}, {{0.1, 5.0}, {0.0, 100.0}}}, "weibull"});
  return ensemble;
}

inline LossModelSpec cyclical() {
  LossModelSpec spec;
  spec.frequency = FrequencyKind::cyclical_poisson;
  spec.severity = SeverityKind::lognormal;
  spec.summary = SummaryOperator::time_indexed_sum();
  return spec;
}

inline PriorBox cyclical_prior() {
  return PriorBox{{"a", "b", "c", "mu", "sigma"},
                  {{0.0, 50.0}, {0.0, 50.0}, {0.001, 0.1}, {-10.0, 10.0}, {0.0, 3.0}}};
}

}  // namespace studies

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

/// Geometric-exponential fit against the exact grid posterior.
inline Report geom_exp_agreement(const SuiteOptions& options, std::size_t particles = 1000,
                                 std::size_t generations = 10) {
  std::vector<Check> log;
  const auto verdict = detail::vote("geom-exp oracle agreement", options, kFourOfFive, [&](std::uint64_t seed) {
    const auto data = detail::simulate_study(studies::geom_exp(), detail::point({0.8, 5.0}), 100, seed, 1);
    const auto prior = studies::geom_exp_prior();
    const auto fit = run_smc(studies::geom_exp(), prior, data, DistanceSpec{},
                             detail::sampler(particles, generations, seed, options));
    const auto grid = oracles::grid_posterior_geom_exp(partition(data.values), {400, 400}, prior);
    const auto p = detail::marginal(fit.population, 0);
    const auto delta = detail::marginal(fit.population, 1);
    const double w1 = oracles::w1_to_grid_density(detail::column(fit.population, 0), detail::weights(fit.population),
                                                  grid.p_nodes, grid.p_density);
    const bool ok = std::abs(p.mean - grid.mean_p) <= 0.05 && std::abs(delta.mean - grid.mean_delta) <= 1.0 && w1 <= 0.03;
    return Check{"", ok,
                 "p mean " + detail::fixed(p.mean) + " vs " + detail::fixed(grid.mean_p) + ", delta mean " +
                     detail::fixed(delta.mean) + " vs " + detail::fixed(grid.mean_delta) + ", W1(p) " +
                     detail::fixed(w1, 3)};
  }, log);
  return detail::finish("Geom-Exp oracle agreement", {verdict}, log);
}

/// Negative binomial Weibull stop-loss: concentration with counts, coverage without.
inline Report negbin_weibull_concentration(const SuiteOptions& options, std::size_t particles = 1000) {
  std::vector<Check> log;
  std::map<std::pair<std::size_t, std::uint64_t>, FitResult> fits;
  const auto with_counts = [&](std::size_t horizon, std::uint64_t seed) -> const FitResult& {
    auto it = fits.find({horizon, seed});
    if (it == fits.end()) {
      const auto data = studies::negbin_weibull_data(horizon, seed);
      const auto spec = studies::with_counts(studies::negbin(SeverityKind::weibull), data);
      it = fits.emplace(std::pair{horizon, seed}, run_smc(spec, studies::weibull_prior(), data, DistanceSpec{},
                                                          detail::sampler(particles, 10, seed, options)))
               .first;
    }
    return it->second;
  };
  const auto coverage = detail::vote("counts observed, t = 250: 90% intervals cover (k, beta)", options, kFourOfFive,
                                     [&](std::uint64_t seed) {
    const auto& fit = with_counts(250, seed);
    const auto k = detail::marginal(fit.population, 0);
    const auto beta = detail::marginal(fit.population, 1);
    return Check{"", k.covers(1.0 / 3.0) && beta.covers(1.0), "k " + k.describe() + "; beta " + beta.describe()};
  }, log);

  const auto narrowing = detail::vote("counts observed: posterior sd shrinks from t = 50 to t = 250", options,
                                      kMajority, [&](std::uint64_t seed) {
    const auto& short_fit = with_counts(50, seed);
    const auto& long_fit = with_counts(250, seed);
    const auto k50 = detail::marginal(short_fit.population, 0);
    const auto b50 = detail::marginal(short_fit.population, 1);
    const auto k250 = detail::marginal(long_fit.population, 0);
    const auto b250 = detail::marginal(long_fit.population, 1);
    return Check{"", k250.sd < k50.sd && b250.sd < b50.sd,
                 "sd(k) " + detail::fixed(k50.sd) + " -> " + detail::fixed(k250.sd) + ", sd(beta) " +
                     detail::fixed(b50.sd) + " -> " + detail::fixed(b250.sd)};
  }, log);

  const auto latent = detail::vote("counts latent, t = 250: 90% intervals cover (k, p)", options, kFourOfFive,
                                   [&](std::uint64_t seed) {
    const auto data = studies::negbin_weibull_data(250, seed);
    const auto fit = run_smc(studies::negbin(SeverityKind::weibull), studies::negbin_weibull_prior(), data,
                             DistanceSpec{}, detail::sampler(particles, 7, seed, options));
    const auto p = detail::marginal(fit.population, 1);
    const auto k = detail::marginal(fit.population, 2);
    return Check{"", p.covers(2.0 / 3.0) && k.covers(1.0 / 3.0), "p " + p.describe() + "; k " + k.describe()};
  }, log);
  return detail::finish("NegBin-Weibull stop-loss concentration", {coverage, narrowing, latent}, log);
}

/// Poisson counts with frequency-dependent exponential claims, summaries only.
inline Report frequency_dependent_exponential(const SuiteOptions& options, std::size_t particles = 1000) {
  std::vector<Check> log;
  std::map<std::uint64_t, FitResult> fits;
  const auto fit_for = [&](std::uint64_t seed) -> const FitResult& {
    auto it = fits.find(seed);
    if (it == fits.end()) {
      const auto data =
          detail::simulate_study(studies::poisson_depexp(), detail::point({4.0, 2.0, 0.2}), 250, seed, 3);
      it = fits.emplace(seed, run_smc(studies::poisson_depexp(), studies::poisson_depexp_prior(), data,
                                      DistanceSpec{}, detail::sampler(particles, 10, seed, options)))
               .first;
    }
    return it->second;
  };
  const auto coverage = detail::vote("90% intervals cover (lambda, beta, delta)", options, kFourOfFive, [&](std::uint64_t seed) {
    const auto& fit = fit_for(seed);
    const auto lambda = detail::marginal(fit.population, 0);
    const auto beta = detail::marginal(fit.population, 1);
    const auto delta = detail::marginal(fit.population, 2);
    return Check{"", lambda.covers(4.0) && beta.covers(2.0) && delta.covers(0.2),
                 "lambda " + lambda.describe() + "; beta " + beta.describe() + "; delta " + delta.describe()};
  }, log);
  // The sign check uses twice as many seeds: the given ones and as many after them.
  SuiteOptions ten = options;
  for (const auto seed : options.seeds) ten.seeds.push_back(seed + options.seeds.size());
  const auto sign = detail::vote("posterior mean of delta is positive", ten, 0.9, [&](std::uint64_t seed) {
    const auto delta = detail::marginal(fit_for(seed).population, 2);
    return Check{"", delta.mean > 0.0, "delta mean " + detail::fixed(delta.mean)};
  }, log);
  return detail::finish("Frequency-dependent exponential", {coverage, sign}, log);
}

/// Lognormal, gamma and Weibull models for individual lognormal claims.
inline Report individual_model_evidence(const SuiteOptions& options, std::size_t particles = 1000,
                                        std::size_t generations = 20) {
  std::vector<Check> log;
  const auto run = [&](std::size_t n, std::uint64_t seed) {
    const auto data =
        detail::simulate_study(studies::individual(SeverityKind::lognormal, n), detail::point({0.0, 1.0}), n, seed, 4);
    const auto result = run_smc_selection(studies::individual_ensemble(n), data, DistanceSpec{},
                                          detail::sampler(particles, generations, seed, options));
    return result.final_probabilities();
  };
  const auto describe = [](const std::vector<double>& p) {
    return "gamma " + detail::fixed(p[0], 3) + ", lognormal " + detail::fixed(p[1], 3) + ", weibull " +
           detail::fixed(p[2], 3);
  };
  const auto large = detail::vote("200 claims: lognormal probability >= 0.95", options, kFourOfFive, [&](std::uint64_t seed) {
    const auto p = run(200, seed);
    return Check{"", p[1] >= 0.95, describe(p)};
  }, log);
  const auto small = detail::vote("25 claims: every probability in [0.05, 0.65]", options, kFourOfFive, [&](std::uint64_t seed) {
    const auto p = run(25, seed);
    const bool ok = std::all_of(p.begin(), p.end(), [](double v) { return v >= 0.05 && v <= 0.65; });
    return Check{"", ok, describe(p)};
  }, log);
  return detail::finish("Model evidence, individual claims", {large, small}, log);
}

/// Weibull against gamma claim sizes on stop-loss aggregates.
inline Report aggregate_model_evidence(const SuiteOptions& options, std::size_t particles = 1000) {
  std::vector<Check> log;
  const auto weibull_probability = [&](std::size_t horizon, std::uint64_t seed, bool counts) {
    const auto data = studies::negbin_weibull_data(horizon, seed);
    ModelEnsemble ensemble;
    if (counts) {
      auto spec_w = studies::with_counts(studies::negbin(SeverityKind::weibull), data);
      auto spec_g = studies::with_counts(studies::negbin(SeverityKind::gamma), data);
      ensemble.models.push_back({spec_w, studies::weibull_prior(), "weibull"});
      ensemble.models.push_back({spec_g, studies::gamma_prior(), "gamma"});
    } else {
      ensemble.models.push_back({studies::negbin(SeverityKind::weibull), studies::negbin_weibull_prior(), "weibull"});
      ensemble.models.push_back({studies::negbin(SeverityKind::gamma), studies::negbin_gamma_prior(), "gamma"});
    }
    const auto result =
        run_smc_selection(ensemble, data, DistanceSpec{}, detail::sampler(particles, counts ? 10 : 7, seed, options));
    return result.final_probabilities()[0];
  };
  std::vector<Check> verdicts;
  for (const std::size_t horizon : {std::size_t{50}, std::size_t{250}}) {
    verdicts.push_back(detail::vote("counts observed, t = " + std::to_string(horizon) + ": Weibull probability >= 0.9",
                                    options, kFourOfFive, [&](std::uint64_t seed) {
      const double p = weibull_probability(horizon, seed, true);
      return Check{"", p >= 0.9, "Weibull " + detail::fixed(p, 3)};
    }, log));
    verdicts.push_back(detail::vote("counts latent, t = " + std::to_string(horizon) + ": Weibull probability in [0.4, 0.8]",
                                    options, kFourOfFive, [&](std::uint64_t seed) {
      const double p = weibull_probability(horizon, seed, false);
      return Check{"", p >= 0.4 && p <= 0.8, "Weibull " + detail::fixed(p, 3)};
    }, log));
  }
  return detail::finish("Model evidence, aggregate claims", verdicts, log);
}

/// Cyclical Poisson intensity: only time-aware distances learn the cycle frequency c.
inline Report curve_matching_discrimination(const SuiteOptions& options, std::size_t particles = 1000,
                                            std::size_t generations = 15) {
  std::vector<Check> log;
  const auto prior = studies::cyclical_prior();
  const double low = prior.low(2);
  const double width = prior.width(2);
  const double prior_mass = (1.0 / 40.0 - 1.0 / 60.0) / width;
  const auto fit = [&](std::uint64_t seed, GammaMode mode) {
    const auto data =
        detail::simulate_study(studies::cyclical(), detail::point({1.0, 5.0, 1.0 / 50.0, 0.0, 0.5}), 250, seed, 6);
    DistanceSpec distance;
    distance.regime = Regime::curve_matching;
    distance.gamma_mode = mode;
    return run_smc(studies::cyclical(), prior, data, distance, detail::sampler(particles, generations, seed, options));
  };
  const auto band_mass = [&](const Population& population) {
    double mass = 0.0;
    for (const auto& particle : population.particles) {
      if (particle.theta[2] >= 1.0 / 60.0 && particle.theta[2] <= 1.0 / 40.0) mass += particle.weight;
    }
    return mass;
  };
  const auto blind = detail::vote("gamma = 0: posterior of c indistinguishable from its prior (KS p > 0.01)", options, kFourOfFive,
                                  [&](std::uint64_t seed) {
    const auto result = fit(seed, GammaMode::zero);
    const auto values = detail::column(result.population, 2);
    const auto w = detail::weights(result.population);
    const double statistic = ks_statistic(values, w, [&](double c) { return std::clamp((c - low) / width, 0.0, 1.0); });
    const double p = ks_pvalue(statistic, result.population.ess);
    return Check{"", p > 0.01, "KS " + detail::fixed(statistic, 3) + " with ESS " + detail::fixed(result.population.ess, 4) +
                                   ", p " + detail::fixed(p, 3)};
  }, log);
  std::vector<Check> verdicts{blind};
  for (const auto& [mode, label] : {std::pair{GammaMode::infinity, "gamma = inf"}, std::pair{GammaMode::aspect_ratio, "gamma = gamma*"}}) {
    verdicts.push_back(detail::vote(std::string{label} + ": mass of c in [1/60, 1/40] at least 3x the prior's", options, kFourOfFive,
                                    [&](std::uint64_t seed) {
      const double mass = band_mass(fit(seed, mode).population);
      return Check{"", mass >= 3.0 * prior_mass,
                   "posterior " + detail::fixed(mass, 3) + " vs prior " + detail::fixed(prior_mass, 3)};
    }, log));
  }
  return detail::finish("Curve-matching discrimination", verdicts, log);
}

// ---------------------------------------------------------------------------
// Property suites
// ---------------------------------------------------------------------------

namespace detail {

inline Check property(const std::string& name, const std::function<std::string()>& body) {
  try {
    const auto failure = body();
    return {name, failure.empty(), failure.empty() ? "ok" : failure};
  } catch (const std::exception& error) {
    return {name, false, std::string{"threw: "} + error.what()};
  }
}

inline std::vector<double> normals(RandomStream& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
  std::normal_distribution<double> normal{mean, sd};
  std::vector<double> out(n);
  for (auto& v : out) v = normal(rng);
  return out;
}

inline std::vector<double> mixed(RandomStream& rng, std::size_t n) {
  std::bernoulli_distribution zero{0.3};
  std::exponential_distribution<double> size{0.5};
  std::vector<double> out(n);
  for (auto& v : out) v = zero(rng) ? 0.0 : size(rng);
  return out;
}

}  // namespace detail

/// Pseudometric and optimality properties of the distances.
inline Report distance_properties() {
  std::vector<Check> checks;
  checks.push_back(detail::property("sorted matching equals the brute-force optimum (m <= 6)", [] {
    auto rng = make_stream(71);
    for (std::size_t m = 1; m <= 6; ++m) {
      for (int trial = 0; trial < 50; ++trial) {
        auto a = detail::normals(rng, m);
        auto b = detail::normals(rng, m, 1.0, 2.0);
        const double exact = oracles::w1_exact_bruteforce(a, b);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (std::abs(exact - w1_sorted(a, b)) > 1e-12) return "mismatch at m = " + std::to_string(m);
      }
    }
    return std::string{};
  }));
  checks.push_back(detail::property("Hilbert matching never beats the exact optimum (m <= 6)", [] {
    auto rng = make_stream(72);
    std::uniform_real_distribution<double> u{-5.0, 5.0};
    for (std::size_t m = 1; m <= 6; ++m) {
      for (int trial = 0; trial < 50; ++trial) {
        std::vector<Point2> a(m);
        std::vector<Point2> b(m);
        for (auto& p : a) p = {u(rng), u(rng)};
        for (auto& p : b) p = {u(rng), u(rng)};
        if (w1_hilbert(a, b) < oracles::w1_exact_bruteforce(a, b) - 1e-12) {
          return "Hilbert below exact at m = " + std::to_string(m);
        }
      }
    }
    return std::string{};
  }));
  checks.push_back(detail::property("mixed-data distance is a pseudometric with a zero gate", [] {
    auto rng = make_stream(73);
    for (int trial = 0; trial < 200; ++trial) {
      SyntheticData x{detail::mixed(rng, 12), {}, {}};
      SyntheticData y{detail::mixed(rng, 12), {}, {}};
      SyntheticData z{detail::mixed(rng, 12), {}, {}};
      const DistanceSpec spec;
      const double xy = distance(x, y, spec);
      const double yx = distance(y, x, spec);
      if (distance(x, x, spec) != 0.0) return std::string{"d(x, x) != 0"};
      if (xy < 0.0 || (std::isfinite(xy) && std::abs(xy - yx) > 1e-12) || std::isfinite(xy) != std::isfinite(yx)) {
        return std::string{"symmetry or sign violated"};
      }
      const auto zeros = [](const SyntheticData& d) { return std::count(d.values.begin(), d.values.end(), 0.0); };
      if ((zeros(x) != zeros(y)) != is_reject(xy)) return std::string{"zero gate disagrees with the zero counts"};
      const double xz = distance(x, z, spec);
      const double zy = distance(z, y, spec);
      if (std::isfinite(xz) && std::isfinite(zy) && xy > xz + zy + 1e-12) return std::string{"triangle inequality"};
    }
    return std::string{};
  }));
  checks.push_back(detail::property("curve distance: gamma = inf is index matching, gamma = 0 is sorted matching", [] {
    auto rng = make_stream(74);
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = detail::normals(rng, 9);
      const auto y = detail::normals(rng, 9);
      DistanceSpec spec;
      spec.regime = Regime::curve_matching;
      spec.gamma_mode = GammaMode::infinity;
      if (std::abs(curve_distance(x, y, spec) - mean_abs_difference(x, y)) > 1e-12) return std::string{"gamma = inf"};
      spec.gamma_mode = GammaMode::zero;
      auto xs = x;
      auto ys = y;
      std::sort(xs.begin(), xs.end());
      std::sort(ys.begin(), ys.end());
      if (std::abs(curve_distance(x, y, spec) - w1_sorted(xs, ys)) > 1e-12) return std::string{"gamma = 0"};
    }
    return std::string{};
  }));
  return detail::finish("Distance properties", checks, {});
}

/// Exhaustive Hilbert curve checks for small orders.
inline Report hilbert_properties() {
  std::vector<Check> checks;
  for (unsigned order = 1; order <= 5; ++order) {
    checks.push_back(detail::property("order " + std::to_string(order) + ": bijection with unit steps", [order] {
      const std::uint64_t side = std::uint64_t{1} << order;
      std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
      GridPoint previous{};
      for (std::uint64_t d = 0; d < side * side; ++d) {
        const auto p = hilbert_point(d, order);
        if (hilbert_index(p) != d) return "round trip fails at " + std::to_string(d);
        if (!seen.emplace(p.x, p.y).second) return "cell visited twice at " + std::to_string(d);
        if (d > 0) {
          const auto dx = p.x > previous.x ? p.x - previous.x : previous.x - p.x;
          const auto dy = p.y > previous.y ? p.y - previous.y : previous.y - p.y;
          if (dx + dy != 1) return "non-adjacent step at " + std::to_string(d);
        }
        previous = p;
      }
      return seen.size() == side * side ? std::string{} : std::string{"cells missed"};
    }));
  }
  return detail::finish("Hilbert curve properties", checks, {});
}

/// Sampler invariants: ESS formula, tolerance monotonicity, normalization, determinism, prior recovery.
inline Report sampler_properties() {
  std::vector<Check> checks;
  checks.push_back(detail::property("ESS formula cases", [] {
    const std::vector<double> uniform(4, 0.25);
    const std::vector<double> single{1.0, 0.0, 0.0};
    const std::vector<double> half{0.5, 0.5, 0.0, 0.0};
    if (std::abs(ess(uniform) - 4.0) > 1e-12 || std::abs(ess(single) - 1.0) > 1e-12 || std::abs(ess(half) - 2.0) > 1e-12) {
      return std::string{"unexpected effective sample size"};
    }
    const std::vector<double> d{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> r(4, 1.0);
    const auto s = select_epsilon(d, r, 4);
    if (s.epsilon != 2.0 || std::abs(s.ess - 2.0) > 1e-12) return std::string{"tolerance selection example"};
    return std::string{};
  }));
  const auto data = detail::simulate_study(studies::geom_exp(), detail::point({0.8, 5.0}), 50, 9, 7);
  checks.push_back(detail::property("tolerances never increase and weights sum to one", [&] {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SamplerOptions o;
      o.particles = 200;
      o.generations = 5;
      o.seed = seed;
      o.keep_history = true;
      const auto fit = run_smc(studies::geom_exp(), studies::geom_exp_prior(), data, DistanceSpec{}, o);
      for (std::size_t g = 1; g < fit.epsilon_trace.size(); ++g) {
        if (fit.epsilon_trace[g] > fit.epsilon_trace[g - 1]) return "tolerance increased, seed " + std::to_string(seed);
      }
      for (const auto& population : fit.history) {
        double total = 0.0;
        for (const auto& particle : population.particles) total += particle.weight;
        if (std::abs(total - 1.0) > 1e-12) return "weights do not sum to one, seed " + std::to_string(seed);
      }
    }
    return std::string{};
  }));
  checks.push_back(detail::property("results do not depend on the worker count", [&] {
    std::vector<std::vector<double>> columns;
    for (const std::size_t workers : {1U, 3U}) {
      SamplerOptions o;
      o.particles = 200;
      o.generations = 4;
      o.seed = 5;
      o.workers = workers;
      const auto fit = run_smc(studies::geom_exp(), studies::geom_exp_prior(), data, DistanceSpec{}, o);
      auto values = detail::column(fit.population, 1);
      const auto w = detail::weights(fit.population);
      values.insert(values.end(), w.begin(), w.end());
      columns.push_back(values);
    }
    return columns[0] == columns[1] ? std::string{} : std::string{"populations differ"};
  }));
  checks.push_back(detail::property("one generation at infinite tolerance returns prior draws (KS)", [] {
    // Strictly positive data keeps the zero gate open.
    LossModelSpec spec = studies::individual(SeverityKind::lognormal, 30);
    auto rng = make_stream(75);
    const auto observed = simulate(spec, detail::point({0.0, 1.0}), 30, rng);
    const PriorBox prior{{"mu", "sigma"}, {{-3.0, 3.0}, {0.1, 3.0}}};
    SamplerOptions o;
    o.particles = 2000;
    o.generations = 1;
    o.seed = 3;
    const auto fit = run_smc(spec, prior, observed, DistanceSpec{}, o);
    for (Eigen::Index j = 0; j < 2; ++j) {
      const auto values = detail::column(fit.population, j);
      const double low = prior.low(static_cast<std::size_t>(j));
      const double width = prior.width(static_cast<std::size_t>(j));
      const double p = ks_test(values, [&](double v) { return std::clamp((v - low) / width, 0.0, 1.0); });
      if (p <= 0.01) return "KS p-value " + detail::fixed(p, 3) + " for parameter " + std::to_string(j);
    }
    return std::string{};
  }));
  return detail::finish("Sampler properties", checks, {});
}

/// All property suites in one report.
inline Report property_suites() {
  std::vector<Check> checks;
  bool passed = true;
  for (const auto& report : {distance_properties(), hilbert_properties(), sampler_properties()}) {
    passed = passed && report.passed;
    for (auto check : report.checks) {
      check.name = report.title + ": " + check.name;
      checks.push_back(check);
    }
  }
  return Report{"Property suites", passed, checks};
}

}  // namespace abcloss::suites

#endif
