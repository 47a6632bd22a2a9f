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

#ifndef ABCLOSS_SMC_HPP
#define ABCLOSS_SMC_HPP

#include <abcloss/distances.hpp>
#include <abcloss/distributions.hpp>
#include <abcloss/kde.hpp>
#include <abcloss/loss_models.hpp>
#include <abcloss/random.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

/**
 * \file
 * \brief Sequential Monte Carlo sampler for approximate Bayesian computation.
 *
 * Each generation proposes parameters from a Gaussian kernel density fitted to
 * the previous generation (the prior for the first one), keeps those whose
 * synthetic data falls within the previous tolerance, pools them with the
 * surviving new proposals of the previous generation, and then picks the next tolerance
 * so that the importance weights keep an effective sample size of K / 2.
 *
 * Particle slot k of generation g draws from its own stream keyed by
 * (seed, g, k), so results do not depend on the number of workers.
 */

namespace abcloss {

struct Particle {
  ParameterPoint theta;
  double distance = 0.0;
  /// Density of the distribution `theta` was drawn from, recorded at proposal time.
  double proposal_density = 0.0;
  double prior_density = 0.0;
  double weight = 0.0;
  std::size_t model = 0;
};

/// One generation of weighted particles.
struct Population {
  std::vector<Particle> particles;
  double epsilon = std::numeric_limits<double>::infinity();
  std::size_t generation = 0;
  double ess = 0.0;
};

/// Per-generation traces and the final population of a run.
struct FitResult {
  Population population;
  std::vector<double> epsilon_trace;
  std::vector<double> ess_trace;
  std::vector<double> acceptance_rate_trace;
  std::vector<double> generation_seconds;
  std::vector<std::uint64_t> proposal_counts;
  /// Posterior model probabilities per generation (one entry per model).
  std::vector<std::vector<double>> model_probability_trace;
  /// Every population, when `SamplerOptions::keep_history` is set.
  std::vector<Population> history;
  /// Notes about fallbacks taken during the run.
  std::vector<std::string> log;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t generations() const { return epsilon_trace.size(); }
};

/// Raised when a particle slot makes `proposal_budget` proposals without an acceptance.
class StallError : public std::runtime_error {
 public:
  StallError(const std::string& message, FitResult partial)
      : std::runtime_error{message}, partial_{std::move(partial)} {}

  /// Traces of the generations completed before the stall.
  [[nodiscard]] const FitResult& partial() const { return partial_; }

 private:
  FitResult partial_;
};

struct SamplerOptions {
  std::size_t particles = 1000;
  std::size_t generations = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  /// Proposals one particle slot may make without an acceptance before the run stalls.
  std::uint64_t proposal_budget = 10'000'000;
  bool keep_history = false;
};

/// A candidate model: generative program plus prior box.
struct ModelDefinition {
  LossModelSpec spec;
  PriorBox prior;
  std::string name;
};

/**
 * Effective sample size 1 / sum(w^2) of normalized weights.
 *
 * Throws std::invalid_argument if the weights do not sum to one.
 */
inline double ess(std::span<const double> weights) {
  double total = 0.0;
  double squares = 0.0;
  for (const double w : weights) {
    if (w < 0.0) {
      throw std::invalid_argument("ess: negative weight");
    }
    total += w;
    squares += w * w;
  }
  if (weights.empty() || std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("ess: weights must be normalized");
  }
  return 1.0 / squares;
}

struct EpsilonSelection {
  double epsilon = 0.0;
  double ess = 0.0;
};

/**
 * Picks the next tolerance.
 *
 * Candidates are the distinct pooled distances. For a candidate e the weights
 * are ratio_k * 1{distance_k <= e}; the smallest candidate whose effective
 * sample size reaches `particles / 2` wins. When none does, the candidate with
 * the largest effective sample size is returned. The result never exceeds
 * `previous`.
 */
inline EpsilonSelection select_epsilon(std::span<const double> distances, std::span<const double> ratios,
                                       std::size_t particles,
                                       double previous = std::numeric_limits<double>::infinity()) {
  if (distances.size() != ratios.size() || distances.empty()) {
    throw std::invalid_argument("select_epsilon: distances and ratios must be non-empty and of equal length");
  }
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });

  const double target = static_cast<double>(particles) / 2.0;
  EpsilonSelection best{distances[order.back()], -1.0};
  double sum = 0.0;
  double squares = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double candidate = distances[order[i]];
    if (is_reject(candidate)) {
      break;
    }
    while (i < order.size() && distances[order[i]] == candidate) {
      sum += ratios[order[i]];
      squares += ratios[order[i]] * ratios[order[i]];
      ++i;
    }
    if (!(squares > 0.0)) {
      continue;
    }
    const double value = sum * sum / squares;
    if (value >= target) {
      return {std::min(candidate, previous), value};
    }
    if (value > best.ess) {
      best = {candidate, value};
    }
  }
  best.epsilon = std::min(best.epsilon, previous);
  return best;
}

/**
 * The population machinery shared by single-model fitting and model selection.
 *
 * Models are proposed from their prior probabilities at every generation and
 * parameters from that model's current proposal (its prior until a kernel
 * density is available). With a single model no model draw happens at all.
 */
class PopulationSampler {
 public:
  PopulationSampler(std::vector<ModelDefinition> models, std::vector<double> model_prior, const SyntheticData& observed,
                    const DistanceSpec& distance, SamplerOptions options)
      : models_{std::move(models)},
        model_prior_{std::move(model_prior)},
        observed_{observed},
        evaluator_{observed, distance},
        zero_gate_{evaluator_.zero_gate()},
        options_{options} {
    if (models_.empty()) {
      throw std::invalid_argument("sampler: at least one model is required");
    }
    if (model_prior_.empty()) {
      model_prior_.assign(models_.size(), 1.0 / static_cast<double>(models_.size()));
    }
    if (model_prior_.size() != models_.size()) {
      throw std::invalid_argument("sampler: model prior has the wrong length");
    }
    const double total = std::accumulate(model_prior_.begin(), model_prior_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9 ||
        std::any_of(model_prior_.begin(), model_prior_.end(), [](double p) { return !(p >= 0.0); })) {
      throw std::invalid_argument("sampler: model prior must be a probability vector");
    }
    model_cumulative_.resize(model_prior_.size());
    std::partial_sum(model_prior_.begin(), model_prior_.end(), model_cumulative_.begin());
    model_cumulative_.back() = 1.0;
    for (const auto& model : models_) {
      model.spec.check();
      if (model.prior.dimension() != model.spec.parameter_count()) {
        throw std::invalid_argument("sampler: prior box dimension does not match model '" + model.name + "'");
      }
      if (model.spec.uses_observed_frequencies() &&
          model.spec.observed_frequencies->first.size() < observed.horizon()) {
        throw std::invalid_argument("sampler: fewer observed frequencies than periods");
      }
    }
    if (options_.particles < 1) {
      throw std::invalid_argument("sampler: need at least one particle");
    }
    if (options_.workers < 1) {
      options_.workers = 1;
    }
    proposals_.resize(models_.size());
  }

  [[nodiscard]] const SamplerOptions& options() const { return options_; }
  [[nodiscard]] std::size_t model_count() const { return models_.size(); }
  [[nodiscard]] const DistanceEvaluator& evaluator() const { return evaluator_; }

  /// Runs the full sampler.
  FitResult run() {
    if (options_.generations < 1) {
      throw std::invalid_argument("sampler: need at least one generation");
    }
    FitResult result;
    result.seed = options_.seed;
    double epsilon = std::numeric_limits<double>::infinity();
    Population previous;
    for (std::size_t g = 1; g <= options_.generations; ++g) {
      const auto start = std::chrono::steady_clock::now();
      std::uint64_t attempts = 0;
      std::vector<Particle> pool;
      try {
        pool = propose(g, epsilon, attempts);
      } catch (const BudgetExhausted&) {
        throw StallError("generation " + std::to_string(g) + ": no acceptance within the proposal budget of " +
                             std::to_string(options_.proposal_budget) + " proposals",
                         std::move(result));
      }
      // Only the previous generation's own proposals are recycled; older
      // survivors were drawn from staler kernels and would dominate the weights.
      const std::size_t fresh = std::min(previous.particles.size(), options_.particles);
      for (std::size_t i = 0; i < fresh; ++i) {
        if (previous.particles[i].weight > 0.0) {
          pool.push_back(previous.particles[i]);
        }
      }
      Population population = reweight(std::move(pool), epsilon, g);
      epsilon = population.epsilon;
      refit(population, result.log);

      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      result.epsilon_trace.push_back(population.epsilon);
      result.ess_trace.push_back(population.ess);
      result.acceptance_rate_trace.push_back(static_cast<double>(options_.particles) / static_cast<double>(attempts));
      result.generation_seconds.push_back(elapsed.count());
      result.proposal_counts.push_back(attempts);
      result.model_probability_trace.push_back(model_probabilities(population));
      if (options_.keep_history) {
        result.history.push_back(population);
      }
      previous = std::move(population);
    }
    result.population = std::move(previous);
    return result;
  }

  /**
   * One acceptance-rejection sweep from the priors at tolerance `epsilon`,
   * with equal weights. Used for plain rejection model choice.
   */
  FitResult run_rejection(double epsilon) {
    FitResult result;
    result.seed = options_.seed;
    const auto start = std::chrono::steady_clock::now();
    std::uint64_t attempts = 0;
    std::vector<Particle> accepted;
    try {
      accepted = propose(1, epsilon, attempts);
    } catch (const BudgetExhausted&) {
      throw StallError("rejection sampling: no acceptance within the proposal budget of " +
                           std::to_string(options_.proposal_budget) + " proposals",
                       std::move(result));
    }
    Population population;
    population.generation = 1;
    population.epsilon = epsilon;
    for (auto& particle : accepted) {
      particle.weight = 1.0 / static_cast<double>(accepted.size());
    }
    population.particles = std::move(accepted);
    population.ess = static_cast<double>(population.particles.size());
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    result.epsilon_trace.push_back(epsilon);
    result.ess_trace.push_back(population.ess);
    result.acceptance_rate_trace.push_back(static_cast<double>(options_.particles) / static_cast<double>(attempts));
    result.generation_seconds.push_back(elapsed.count());
    result.proposal_counts.push_back(attempts);
    result.model_probability_trace.push_back(model_probabilities(population));
    result.population = std::move(population);
    return result;
  }

 private:
  struct BudgetExhausted {};

  struct SlotOutcome {
    Particle particle;
    std::uint64_t attempts = 0;
  };

  [[nodiscard]] std::size_t draw_model(RandomStream& rng) const {
    if (models_.size() == 1) {
      return 0;
    }
    std::uniform_real_distribution<double> unit{0.0, 1.0};
    const double u = unit(rng);
    const auto it = std::upper_bound(model_cumulative_.begin(), model_cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - model_cumulative_.begin()), models_.size() - 1);
  }

  // Fills one particle slot. Returns false if the slot ran out of budget without an acceptance.
  bool fill_slot(std::size_t generation, std::size_t slot, double epsilon,
                 const std::atomic<bool>& stop, SyntheticData& scratch, SlotOutcome& outcome) const {
    auto rng = make_stream(options_.seed, {generation, slot});
    const auto horizon = observed_.horizon();
    while (true) {
      if (stop.load(std::memory_order_relaxed) || outcome.attempts >= options_.proposal_budget) {
        return false;
      }
      ++outcome.attempts;
      const std::size_t m = draw_model(rng);
      const auto& model = models_[m];
      const auto& proposal = proposals_[m];
      ParameterPoint theta = proposal ? proposal->sample(rng) : prior_sample(model.prior, rng);
      const double prior = prior_density(model.prior, theta);
      if (prior <= 0.0) {
        continue;
      }
      if (zero_gate_) {
        if (!simulate_with_zero_count(model.spec, theta, horizon, *zero_gate_, rng, scratch)) continue;
      } else {
        simulate_into(model.spec, theta, horizon, rng, scratch);
      }
      const double d = evaluator_(scratch);
      if (d < epsilon) {
        outcome.particle.theta = std::move(theta);
        outcome.particle.distance = d;
        outcome.particle.prior_density = prior;
        outcome.particle.proposal_density = proposal ? proposal->density(outcome.particle.theta) : prior;
        outcome.particle.model = m;
        return true;
      }
    }
  }

  std::vector<Particle> propose(std::size_t generation, double epsilon, std::uint64_t& attempts) const {
    const std::size_t slots = options_.particles;
    std::vector<SlotOutcome> outcomes(slots);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::atomic<bool> exhausted{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto work = [&] {
      SyntheticData scratch;
      try {
        while (!stop.load(std::memory_order_relaxed)) {
          const std::size_t slot = next.fetch_add(1);
          if (slot >= slots) {
            return;
          }
          if (!fill_slot(generation, slot, epsilon, stop, scratch, outcomes[slot])) {
            exhausted = true;
            stop = true;
            return;
          }
        }
      } catch (...) {
        const std::lock_guard lock{failure_mutex};
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    };

    const std::size_t workers = std::min(options_.workers, slots);
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(work);
      }
    }
    if (failure) {
      std::rethrow_exception(failure);
    }
    if (exhausted) {
      throw BudgetExhausted{};
    }
    attempts = 0;
    std::vector<Particle> accepted;
    accepted.reserve(2 * slots);
    for (auto& outcome : outcomes) {
      attempts += outcome.attempts;
      accepted.push_back(std::move(outcome.particle));
    }
    return accepted;
  }

  Population reweight(std::vector<Particle> pool, double previous_epsilon, std::size_t generation) const {
    std::vector<double> distances(pool.size());
    std::vector<double> ratios(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      distances[i] = pool[i].distance;
      ratios[i] = pool[i].prior_density / pool[i].proposal_density;
    }
    const auto selection = select_epsilon(distances, ratios, options_.particles, previous_epsilon);
    double total = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      pool[i].weight = distances[i] <= selection.epsilon ? ratios[i] : 0.0;
      total += pool[i].weight;
    }
    double squares = 0.0;
    for (auto& particle : pool) {
      particle.weight /= total;
      squares += particle.weight * particle.weight;
    }
    Population population;
    population.particles = std::move(pool);
    population.epsilon = selection.epsilon;
    population.generation = generation;
    population.ess = 1.0 / squares;
    return population;
  }

  [[nodiscard]] std::vector<double> model_probabilities(const Population& population) const {
    std::vector<double> probabilities(models_.size(), 0.0);
    for (const auto& particle : population.particles) {
      probabilities[particle.model] += particle.weight;
    }
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (total > 0.0) {
      for (auto& p : probabilities) p /= total;
    }
    return probabilities;
  }

  // Diagonal bandwidth with standard deviation 5% of each prior range.
  [[nodiscard]] static Eigen::MatrixXd prior_bandwidth(const PriorBox& prior) {
    Eigen::MatrixXd bandwidth = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(prior.dimension()),
                                                      static_cast<Eigen::Index>(prior.dimension()));
    for (std::size_t i = 0; i < prior.dimension(); ++i) {
      const double sd = 0.05 * prior.width(i);
      bandwidth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = sd * sd;
    }
    return bandwidth;
  }

  void refit(const Population& population, std::vector<std::string>& log) {
    for (std::size_t m = 0; m < models_.size(); ++m) {
      std::vector<ParameterPoint> centers;
      std::vector<double> weights;
      for (const auto& particle : population.particles) {
        if (particle.model == m && particle.weight > 0.0) {
          centers.push_back(particle.theta);
          weights.push_back(particle.weight);
        }
      }
      const std::string where = "generation " + std::to_string(population.generation) + ", model '" +
                                (models_[m].name.empty() ? std::to_string(m) : models_[m].name) + "': ";
      if (centers.empty()) {
        proposals_[m].reset();
        log.push_back(where + "no surviving particles, proposing from the prior");
        continue;
      }
      const bool distinct = std::any_of(centers.begin(), centers.end(),
                                        [&](const ParameterPoint& c) { return c != centers.front(); });
      if (!distinct) {
        proposals_[m].emplace(centers, weights, prior_bandwidth(models_[m].prior));
        log.push_back(where + "fewer than two distinct particles, using a prior-range bandwidth");
        continue;
      }
      proposals_[m].emplace(fit_kde(centers, weights));
      if (proposals_[m]->regularized()) {
        log.push_back(where + "singular bandwidth regularized");
      }
    }
  }

  std::vector<ModelDefinition> models_;
  std::vector<double> model_prior_;
  std::vector<double> model_cumulative_;
  SyntheticData observed_;
  DistanceEvaluator evaluator_;
  // Lets a simulation stop as soon as the mixed distance must reject it.
  std::optional<std::size_t> zero_gate_;
  SamplerOptions options_;
  std::vector<std::optional<KdeProposal>> proposals_;
};

/// Fits one model to observed data.
inline FitResult run_smc(const LossModelSpec& model, const PriorBox& prior, const SyntheticData& observed,
                         const DistanceSpec& distance, const SamplerOptions& options) {
  if (options.particles < 10) {
    throw std::invalid_argument("run_smc: need at least 10 particles");
  }
  PopulationSampler sampler{{ModelDefinition{model, prior, "model"}}, {1.0}, observed, distance, options};
  return sampler.run();
}

}  // namespace abcloss

#endif
