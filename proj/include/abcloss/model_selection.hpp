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

#ifndef ABCLOSS_MODEL_SELECTION_HPP
#define ABCLOSS_MODEL_SELECTION_HPP

#include <abcloss/smc.hpp>

#include <cstddef>
#include <stdexcept>
#include <vector>

/**
 * \file
 * \brief Posterior model probabilities by rejection sampling or by the population sampler.
 *
 * A particle carries a model label next to its parameters. The model of every
 * proposal is drawn from the model prior, never from the current posterior
 * estimate, and each model keeps its own kernel density proposal.
 */

namespace abcloss {

struct ModelEnsemble {
  std::vector<ModelDefinition> models;
  /// Prior model probabilities; empty means uniform.
  std::vector<double> model_prior;
};

struct SelectionResult {
  FitResult fit;
  /// Posterior model probabilities per generation.
  std::vector<std::vector<double>> model_probabilities;

  [[nodiscard]] const std::vector<double>& final_probabilities() const { return model_probabilities.back(); }

  /// Particles of model `m` in the final population.
  [[nodiscard]] Population model_population(std::size_t m) const {
    Population out;
    out.epsilon = fit.population.epsilon;
    out.generation = fit.population.generation;
    for (const auto& particle : fit.population.particles) {
      if (particle.model == m) out.particles.push_back(particle);
    }
    return out;
  }
};

namespace detail {

inline void check_ensemble(const ModelEnsemble& ensemble, bool allow_single) {
  if (ensemble.models.empty() || (!allow_single && ensemble.models.size() < 2)) {
    throw std::invalid_argument("model selection: the ensemble needs at least two models");
  }
}

}  // namespace detail

/// Rejection sampling of (model, parameter) pairs; probabilities are acceptance shares.
inline SelectionResult run_ar_selection(const ModelEnsemble& ensemble, const SyntheticData& observed,
                                        const DistanceSpec& distance, double epsilon, const SamplerOptions& options) {
  detail::check_ensemble(ensemble, true);
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("run_ar_selection: epsilon must be > 0 (or infinite)");
  }
  PopulationSampler sampler{ensemble.models, ensemble.model_prior, observed, distance, options};
  SelectionResult result;
  result.fit = sampler.run_rejection(epsilon);
  result.model_probabilities = result.fit.model_probability_trace;
  return result;
}

/// Population-sampler model choice. A single-model ensemble reproduces `run_smc` exactly.
inline SelectionResult run_smc_selection(const ModelEnsemble& ensemble, const SyntheticData& observed,
                                         const DistanceSpec& distance, const SamplerOptions& options) {
  detail::check_ensemble(ensemble, true);
  if (options.particles < 10) {
    throw std::invalid_argument("run_smc_selection: need at least 10 particles");
  }
  PopulationSampler sampler{ensemble.models, ensemble.model_prior, observed, distance, options};
  SelectionResult result;
  result.fit = sampler.run();
  result.model_probabilities = result.fit.model_probability_trace;
  return result;
}

}  // namespace abcloss

#endif
