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
#ifndef ABC_LOSS_CONFIG_HPP
#define ABC_LOSS_CONFIG_HPP

#include <abcloss/distances.hpp>
#include <abcloss/loss_models.hpp>
#include <abcloss/smc.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * \file
 * \brief Run configuration documents for the command line tool.
 *
 * A configuration is a JSON object:
 *
 * \code{.json}
 * {
 *   "model": {
 *     "name": "geom-exp",
 *     "frequency": "geometric",
 *     "severity": "exponential",
 *     "summary": "sum",
 *     "prior": {"p": [0, 1], "delta": [0, 100]}
 *   },
 *   "distance": {"regime": "univariate-mixed"},
 *   "sampler": {"particles": 1000, "generations": 10, "seed": 1},
 *   "horizon": 100
 * }
 * \endcode
 *
 * Model choice uses "models" (an array of model objects) and an optional
 * "model_prior". Unknown keys are rejected so that typos do not pass silently.
 */

namespace abcloss::cli {

/// Raised for any configuration that cannot be run.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::vector<ModelDefinition> models;
  std::vector<double> model_prior;
  DistanceSpec distance;
  SamplerOptions sampler;
  /// Periods produced by `simulate`.
  std::size_t horizon = 100;
  /// Optional data path; the command line flag takes precedence.
  std::optional<std::string> data;
  /// The document as given, echoed into manifests.
  nlohmann::json source;

  [[nodiscard]] bool single_model() const { return models.size() == 1; }
};

namespace detail {

using nlohmann::json;

inline void allow_keys(const json& object, const std::string& where, std::initializer_list<const char*> keys) {
  if (!object.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : object.items()) {
    if (allowed.count(item.key()) == 0) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

inline std::string get_string(const json& object, const std::string& where, const char* key,
                              std::optional<std::string> fallback = std::nullopt) {
  if (!object.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing '" + key + "'");
  }
  if (!object.at(key).is_string()) {
    throw ConfigError(where + "." + key + ": expected a string");
  }
  return object.at(key).get<std::string>();
}

inline double get_number(const json& object, const std::string& where, const char* key, double fallback) {
  if (!object.contains(key)) return fallback;
  if (!object.at(key).is_number()) {
    throw ConfigError(where + "." + key + ": expected a number");
  }
  return object.at(key).get<double>();
}

inline std::uint64_t get_count(const json& object, const std::string& where, const char* key, std::uint64_t fallback,
                               std::uint64_t minimum) {
  if (!object.contains(key)) return fallback;
  const auto& value = object.at(key);
  if (!value.is_number_unsigned()) {
    throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  }
  const auto count = value.get<std::uint64_t>();
  if (count < minimum) {
    throw ConfigError(where + "." + key + ": must be >= " + std::to_string(minimum));
  }
  return count;
}

template <class F>
auto translate(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& error) {
    throw ConfigError(where + ": " + error.what());
  }
}

inline ModelDefinition parse_model(const json& object, const std::string& where, std::size_t index) {
  allow_keys(object, where,
             {"name", "frequency", "severity", "second_severity", "summary", "summary_constant", "observed_frequencies",
              "prior"});
  LossModelSpec spec;
  spec.frequency = translate(where + ".frequency", [&] { return parse_frequency_kind(get_string(object, where, "frequency", "poisson")); });
  spec.severity = translate(where + ".severity", [&] { return parse_severity_kind(get_string(object, where, "severity")); });
  if (object.contains("second_severity")) {
    spec.second_severity =
        translate(where + ".second_severity", [&] { return parse_severity_kind(get_string(object, where, "second_severity")); });
  }
  const auto summary = translate(where + ".summary", [&] { return parse_summary_kind(get_string(object, where, "summary", "sum")); });
  spec.summary = translate(where + ".summary_constant", [&] {
    switch (summary) {
      case SummaryKind::quota_share:
        if (!object.contains("summary_constant")) throw std::invalid_argument("quota-share needs a retention share");
        return SummaryOperator::quota_share(get_number(object, where, "summary_constant", 0.0));
      case SummaryKind::stop_loss:
        // Priority 1 when none is given.
        return SummaryOperator::stop_loss(get_number(object, where, "summary_constant", 1.0));
      case SummaryKind::bivariate_pair_of_sums:
        return SummaryOperator::bivariate_pair_of_sums();
      case SummaryKind::time_indexed_sum:
        return SummaryOperator::time_indexed_sum();
      case SummaryKind::sum:
        break;
    }
    return SummaryOperator::sum();
  });
  if (object.contains("observed_frequencies")) {
    if (!object.at("observed_frequencies").is_boolean()) {
      throw ConfigError(where + ".observed_frequencies: expected true or false");
    }
    if (object.at("observed_frequencies").get<bool>()) {
      // Filled from the data file's count columns when the data is loaded.
      spec.observed_frequencies = ObservedFrequencies{};
    }
  }
  translate(where, [&] {
    spec.check();
    return 0;
  });

  if (!object.contains("prior")) {
    throw ConfigError(where + ": missing 'prior'");
  }
  const auto& prior = object.at("prior");
  const auto names = spec.parameter_names();
  if (!prior.is_object()) {
    throw ConfigError(where + ".prior: expected an object of [low, high] pairs");
  }
  for (const auto& item : prior.items()) {
    if (std::find(names.begin(), names.end(), item.key()) == names.end()) {
      throw ConfigError(where + ".prior: '" + item.key() + "' is not a parameter of this model");
    }
  }
  std::vector<std::pair<double, double>> bounds;
  for (const auto& name : names) {
    if (!prior.contains(name)) {
      throw ConfigError(where + ".prior: missing bounds for '" + name + "'");
    }
    const auto& pair = prior.at(name);
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw ConfigError(where + ".prior." + name + ": expected [low, high]");
    }
    bounds.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  auto box = translate(where + ".prior", [&] { return PriorBox{names, bounds}; });
  const auto name = get_string(object, where, "name", "model" + std::to_string(index + 1));
  return ModelDefinition{std::move(spec), std::move(box), name};
}

inline DistanceSpec parse_distance(const json& object) {
  const std::string where = "distance";
  allow_keys(object, where, {"regime", "gamma_mode", "gamma", "aspect_ratio", "hilbert_order"});
  DistanceSpec spec;
  spec.regime = translate(where + ".regime", [&] { return parse_regime(get_string(object, where, "regime", "univariate-mixed")); });
  spec.gamma_mode = translate(where + ".gamma_mode", [&] { return parse_gamma_mode(get_string(object, where, "gamma_mode", "infinity")); });
  spec.gamma = get_number(object, where, "gamma", 0.0);
  if (object.contains("gamma") && !object.contains("gamma_mode")) {
    spec.gamma_mode = GammaMode::fixed;
  }
  if (object.contains("aspect_ratio")) {
    const auto& pair = object.at("aspect_ratio");
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw ConfigError(where + ".aspect_ratio: expected [H, V]");
    }
    spec.aspect_h = pair[0].get<double>();
    spec.aspect_v = pair[1].get<double>();
  }
  spec.hilbert_order = static_cast<unsigned>(get_count(object, where, "hilbert_order", kDefaultHilbertOrder, 1));
  translate(where, [&] {
    spec.check();
    return 0;
  });
  return spec;
}

inline SamplerOptions parse_sampler(const json& object) {
  const std::string where = "sampler";
  allow_keys(object, where, {"particles", "generations", "seed", "workers", "proposal_budget"});
  SamplerOptions options;
  options.particles = get_count(object, where, "particles", options.particles, 10);
  options.generations = get_count(object, where, "generations", options.generations, 1);
  options.seed = get_count(object, where, "seed", options.seed, 0);
  options.workers = get_count(object, where, "workers", options.workers, 1);
  options.proposal_budget = get_count(object, where, "proposal_budget", options.proposal_budget, 1);
  return options;
}

}  // namespace detail

/// Builds a run configuration from a parsed document.
inline RunConfig parse_config(const nlohmann::json& document) {
  detail::allow_keys(document, "config", {"model", "models", "model_prior", "distance", "sampler", "horizon", "data"});
  RunConfig config;
  config.source = document;
  if (document.contains("model") == document.contains("models")) {
    throw ConfigError("config: give exactly one of 'model' or 'models'");
  }
  if (document.contains("model")) {
    config.models.push_back(detail::parse_model(document.at("model"), "model", 0));
  } else {
    const auto& models = document.at("models");
    if (!models.is_array() || models.empty()) {
      throw ConfigError("models: expected a non-empty array");
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < models.size(); ++i) {
      config.models.push_back(detail::parse_model(models[i], "models[" + std::to_string(i) + "]", i));
      if (!names.insert(config.models.back().name).second) {
        throw ConfigError("models[" + std::to_string(i) + "]: duplicate model name '" + config.models.back().name + "'");
      }
    }
  }
  if (document.contains("model_prior")) {
    const auto& prior = document.at("model_prior");
    if (!prior.is_array() || prior.size() != config.models.size()) {
      throw ConfigError("model_prior: expected one probability per model");
    }
    double total = 0.0;
    for (const auto& p : prior) {
      if (!p.is_number() || !(p.get<double>() >= 0.0)) {
        throw ConfigError("model_prior: probabilities must be nonnegative numbers");
      }
      config.model_prior.push_back(p.get<double>());
      total += p.get<double>();
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("model_prior: probabilities must sum to 1");
    }
  }
  config.distance = detail::parse_distance(document.value("distance", nlohmann::json::object()));
  config.sampler = detail::parse_sampler(document.value("sampler", nlohmann::json::object()));
  config.horizon = detail::get_count(document, "config", "horizon", config.horizon, 1);
  if (document.contains("data")) {
    config.data = detail::get_string(document, "config", "data");
  }
  return config;
}

/// Reads and parses a configuration file.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in{path};
  if (!in) {
    throw ConfigError(path + ": cannot open configuration file");
  }
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& error) {
    throw ConfigError(path + ": " + error.what());
  }
  return parse_config(document);
}

/// Applies the ABC_LOSS_WORKERS override, if set.
inline void apply_environment(RunConfig& config) {
  const char* value = std::getenv("ABC_LOSS_WORKERS");
  if (value == nullptr || *value == '\0') {
    return;
  }
  char* end = nullptr;
  const unsigned long long workers = std::strtoull(value, &end, 10);
  if (*end != '\0' || workers < 1 || value[0] == '-') {
    throw ConfigError(std::string{"ABC_LOSS_WORKERS: expected a positive integer, got '"} + value + "'");
  }
  config.sampler.workers = static_cast<std::size_t>(workers);
}

}  // namespace abcloss::cli

#endif
