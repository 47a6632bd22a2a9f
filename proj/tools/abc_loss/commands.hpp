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
#ifndef ABC_LOSS_COMMANDS_HPP
#define ABC_LOSS_COMMANDS_HPP

#include <abcloss/distances.hpp>
#include <abcloss/loss_models.hpp>
#include <abcloss/model_selection.hpp>
#include <abcloss/random.hpp>
#include <abcloss/smc.hpp>
#include <abcloss/stats.hpp>

#include "config.hpp"
#include "io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

/**
 * \file
 * \brief The `simulate`, `fit`, `select` and `rerun` commands.
 *
 * Every command validates its configuration and data before it creates any
 * file, so a rejected run leaves nothing behind. Each run writes a manifest
 * from which `rerun` reproduces it exactly.
 */

namespace abcloss::cli {

#ifndef ABCLOSS_VERSION
#define ABCLOSS_VERSION "unknown"
#endif

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kCheckFailed = 1,
  kInvalidInput = 2,
  kStalled = 3,
  kOutputError = 4,
};

/// Arguments that, together with the configuration, fully determine a run.
struct RunRequest {
  std::string command;
  std::string data;
  std::string theta;
  std::string model;
  bool rejection = false;
  double epsilon = std::numeric_limits<double>::infinity();
};

namespace detail {

inline ParameterPoint parse_theta(const std::string& text, const std::vector<std::string>& names) {
  std::map<std::string, double> given;
  std::istringstream stream{text};
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--theta: expected name=value, found '" + item + "'");
    }
    const auto name = trim(item.substr(0, eq));
    const auto value_text = trim(item.substr(eq + 1));
    double value = 0.0;
    const auto result = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (value_text.empty() || result.ec != std::errc{} || result.ptr != value_text.data() + value_text.size()) {
      throw ConfigError("--theta: '" + name + "' has a non-numeric value '" + value_text + "'");
    }
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ConfigError("--theta: '" + name + "' is not a parameter of this model");
    }
    if (!given.emplace(name, value).second) {
      throw ConfigError("--theta: '" + name + "' given twice");
    }
  }
  ParameterPoint theta(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = given.find(names[i]);
    if (it == given.end()) {
      throw ConfigError("--theta: missing value for '" + names[i] + "'");
    }
    theta[static_cast<Eigen::Index>(i)] = it->second;
  }
  return theta;
}

/// Moves claim counts from the data into every model that asks for them.
inline void attach_frequencies(RunConfig& config, const DataSet& data) {
  for (auto& model : config.models) {
    if (!model.spec.uses_observed_frequencies()) continue;
    if (!data.frequencies) {
      throw ConfigError("model '" + model.name + "' uses observed frequencies but the data has no 'n' column");
    }
    if (model.spec.summary.bivariate() && data.frequencies->second.empty()) {
      throw ConfigError("model '" + model.name + "' needs the 'n2' column");
    }
    model.spec.observed_frequencies = *data.frequencies;
    if (!model.spec.summary.bivariate()) {
      model.spec.observed_frequencies->second.clear();
    }
  }
}

inline void ensure_directory(const std::string& path) {
  std::error_code error;
  std::filesystem::create_directories(path, error);
  if (error) {
    throw std::runtime_error(path + ": cannot create output directory: " + error.message());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out{path, std::ios::binary};
  out << text;
  if (!out) {
    throw std::runtime_error(path.string() + ": write failed");
  }
}

inline nlohmann::json traces_json(const FitResult& fit) {
  nlohmann::json out;
  out["epsilon"] = fit.epsilon_trace;
  out["ess"] = fit.ess_trace;
  out["acceptance_rate"] = fit.acceptance_rate_trace;
  out["proposals"] = fit.proposal_counts;
  out["seconds"] = fit.generation_seconds;
  return out;
}

inline nlohmann::json posterior_json(const Population& population, const std::vector<std::string>& names) {
  nlohmann::json out = nlohmann::json::object();
  std::vector<double> weights;
  for (const auto& particle : population.particles) weights.push_back(particle.weight);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) return out;
  for (auto& w : weights) w /= total;
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<double> values;
    for (const auto& particle : population.particles) values.push_back(particle.theta[static_cast<Eigen::Index>(j)]);
    out[names[j]] = {{"mean", stats::weighted_mean(values, weights)},
                     {"sd", stats::weighted_sd(values, weights)},
                     {"q05", stats::weighted_quantile(values, weights, 0.05)},
                     {"q50", stats::weighted_quantile(values, weights, 0.5)},
                     {"q95", stats::weighted_quantile(values, weights, 0.95)}};
  }
  return out;
}

/// Particles of a single-model fit, one named column per parameter.
inline std::string fit_particles_csv(const Population& population, const std::vector<std::string>& names) {
  std::ostringstream out;
  for (const auto& name : names) out << name << ',';
  out << "distance,weight\n";
  for (const auto& particle : population.particles) {
    for (Eigen::Index j = 0; j < particle.theta.size(); ++j) out << format_number(particle.theta[j]) << ',';
    out << format_number(particle.distance) << ',' << format_number(particle.weight) << '\n';
  }
  return out.str();
}

/// Particles of a model choice run; parameter columns are positional and blank past a model's dimension.
inline std::string selection_particles_csv(const Population& population, const std::vector<ModelDefinition>& models) {
  std::size_t width = 0;
  for (const auto& model : models) width = std::max(width, model.prior.dimension());
  std::ostringstream out;
  out << "model,distance,weight";
  for (std::size_t j = 1; j <= width; ++j) out << ",theta" << j;
  out << '\n';
  for (const auto& particle : population.particles) {
    out << models[particle.model].name << ',' << format_number(particle.distance) << ','
        << format_number(particle.weight);
    for (std::size_t j = 0; j < width; ++j) {
      out << ',';
      if (j < static_cast<std::size_t>(particle.theta.size())) {
        out << format_number(particle.theta[static_cast<Eigen::Index>(j)]);
      }
    }
    out << '\n';
  }
  return out.str();
}

inline std::string probabilities_csv(const FitResult& fit, const std::vector<ModelDefinition>& models) {
  std::ostringstream out;
  out << "generation,epsilon";
  for (const auto& model : models) out << ',' << model.name;
  out << '\n';
  for (std::size_t g = 0; g < fit.model_probability_trace.size(); ++g) {
    out << g + 1 << ',' << format_number(fit.epsilon_trace[g]);
    for (const double p : fit.model_probability_trace[g]) out << ',' << format_number(p);
    out << '\n';
  }
  return out.str();
}

inline nlohmann::json manifest_json(const RunRequest& request, const RunConfig& config, double seconds,
                                    const std::string& status) {
  nlohmann::json manifest;
  manifest["tool"] = "abc_loss";
  manifest["version"] = ABCLOSS_VERSION;
  manifest["command"] = request.command;
  manifest["config"] = config.source;
  nlohmann::json arguments = nlohmann::json::object();
  if (!request.data.empty()) arguments["data"] = std::filesystem::absolute(request.data).string();
  if (!request.theta.empty()) arguments["theta"] = request.theta;
  if (!request.model.empty()) arguments["model"] = request.model;
  if (request.rejection) {
    arguments["ar"] = true;
    arguments["epsilon"] = std::isfinite(request.epsilon) ? nlohmann::json(request.epsilon) : nlohmann::json("inf");
  }
  manifest["arguments"] = arguments;
  manifest["seed"] = config.sampler.seed;
  manifest["workers"] = config.sampler.workers;
  manifest["wall_seconds"] = seconds;
  manifest["status"] = status;
  return manifest;
}

inline double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// Validated inputs of a run, ready to execute.
struct PreparedRun {
  RunRequest request;
  RunConfig config;
  std::optional<DataSet> data;
};

/**
 * Checks a request against its configuration and loads the data.
 *
 * Throws ConfigError or DataError; nothing is written.
 */
inline PreparedRun prepare(RunRequest request, RunConfig config) {
  apply_environment(config);
  PreparedRun run{std::move(request), std::move(config), std::nullopt};
  auto& [req, cfg, data] = run;
  if (req.command == "simulate") {
    if (req.theta.empty()) throw ConfigError("simulate: --theta is required");
    return run;
  }
  if (req.data.empty()) {
    if (!cfg.data) throw ConfigError(req.command + ": no data file given (use --data or the 'data' key)");
    req.data = *cfg.data;
  }
  data = load_data(req.data);
  detail::attach_frequencies(cfg, *data);
  for (const auto& model : cfg.models) {
    if (model.spec.uses_observed_frequencies() && model.spec.observed_frequencies->first.size() < data->data.horizon()) {
      throw ConfigError("model '" + model.name + "': fewer claim counts than periods");
    }
    if (model.spec.summary.bivariate() != data->bivariate()) {
      throw ConfigError("model '" + model.name + "': " +
                        (data->bivariate() ? "bivariate data needs the bivariate-sum summary"
                                           : "the bivariate-sum summary needs x1,x2 columns"));
    }
  }
  detail::translate("distance", [&] {
    DistanceEvaluator check{data->data, cfg.distance};
    return 0;
  });
  if (req.command == "fit" && !cfg.single_model()) {
    throw ConfigError("fit: the configuration lists several models; use 'select'");
  }
  if (req.command == "select" && req.rejection && !(req.epsilon > 0.0)) {
    throw ConfigError("select: --epsilon must be > 0");
  }
  return run;
}

/// Simulates a data file from a fixed parameter vector.
inline int run_simulate(const PreparedRun& run, const std::string& out_path) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = run.config;
  const ModelDefinition* chosen = &cfg.models.front();
  if (!run.request.model.empty()) {
    const auto it = std::find_if(cfg.models.begin(), cfg.models.end(),
                                 [&](const ModelDefinition& m) { return m.name == run.request.model; });
    if (it == cfg.models.end()) throw ConfigError("simulate: no model named '" + run.request.model + "'");
    chosen = &*it;
  }
  // Counts are drawn from the frequency family, even for models fitted on observed counts.
  LossModelSpec spec = chosen->spec;
  spec.observed_frequencies.reset();
  const auto theta = detail::parse_theta(run.request.theta, spec.parameter_names());
  auto rng = make_stream(cfg.sampler.seed, {0x51a1});
  const auto data = detail::translate("simulate", [&] { return simulate(spec, theta, cfg.horizon, rng); });

  std::ostringstream text;
  write_data(text, data, true);
  const std::filesystem::path out{out_path};
  if (out.has_parent_path()) detail::ensure_directory(out.parent_path().string());
  detail::write_text(out, text.str());
  auto manifest = detail::manifest_json(run.request, cfg, detail::elapsed_since(start), "ok");
  detail::write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
  return kSuccess;
}

/// Runs the sampler and writes particles, traces and the manifest into `out_dir`.
inline int run_inference(const PreparedRun& run, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = run.config;
  const auto& req = run.request;
  const auto& observed = run.data->data;
  const bool selection = req.command == "select";
  const std::filesystem::path dir{out_dir};

  nlohmann::json summary;
  summary["command"] = req.command;
  summary["models"] = nlohmann::json::array();
  for (const auto& model : cfg.models) summary["models"].push_back({{"name", model.name}, {"parameters", model.prior.names()}});

  FitResult fit;
  std::string status = "ok";
  std::string stall_message;
  try {
    if (selection) {
      const ModelEnsemble ensemble{cfg.models, cfg.model_prior};
      fit = (req.rejection ? run_ar_selection(ensemble, observed, cfg.distance, req.epsilon, cfg.sampler)
                           : run_smc_selection(ensemble, observed, cfg.distance, cfg.sampler))
                .fit;
    } else {
      const auto& model = cfg.models.front();
      fit = run_smc(model.spec, model.prior, observed, cfg.distance, cfg.sampler);
    }
  } catch (const StallError& error) {
    fit = error.partial();
    status = "stalled";
    stall_message = error.what();
  }

  detail::ensure_directory(out_dir);
  summary["status"] = status;
  summary["traces"] = detail::traces_json(fit);
  summary["log"] = fit.log;
  if (status == "stalled") {
    summary["error"] = stall_message;
  } else {
    summary["epsilon"] = fit.population.epsilon;
    summary["particles"] = fit.population.particles.size();
    if (selection) {
      summary["model_probabilities"] = nlohmann::json::object();
      summary["posterior"] = nlohmann::json::object();
      const auto& final_probabilities = fit.model_probability_trace.back();
      for (std::size_t m = 0; m < cfg.models.size(); ++m) {
        Population part;
        for (const auto& particle : fit.population.particles) {
          if (particle.model == m) part.particles.push_back(particle);
        }
        summary["model_probabilities"][cfg.models[m].name] = final_probabilities[m];
        summary["posterior"][cfg.models[m].name] = detail::posterior_json(part, cfg.models[m].prior.names());
      }
      detail::write_text(dir / "particles.csv", detail::selection_particles_csv(fit.population, cfg.models));
    } else {
      summary["posterior"] = detail::posterior_json(fit.population, cfg.models.front().prior.names());
      detail::write_text(dir / "particles.csv", detail::fit_particles_csv(fit.population, cfg.models.front().prior.names()));
    }
  }
  if (selection) {
    detail::write_text(dir / "model_probabilities.csv", detail::probabilities_csv(fit, cfg.models));
  }
  detail::write_text(dir / "summary.json", summary.dump(2) + "\n");
  const auto manifest = detail::manifest_json(req, cfg, detail::elapsed_since(start), status);
  detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  if (status == "stalled") {
    std::cerr << "abc_loss: " << stall_message << "; traces of completed generations are in "
              << (dir / "summary.json").string() << "\n";
    return kStalled;
  }
  return kSuccess;
}

/// Runs a prepared request, writing to `out` (a file for simulate, a directory otherwise).
inline int execute(const PreparedRun& run, const std::string& out) {
  if (run.request.command == "simulate") return run_simulate(run, out);
  return run_inference(run, out);
}

/// Rebuilds the request and configuration recorded in a manifest.
inline std::pair<RunRequest, RunConfig> from_manifest(const std::string& path) {
  std::ifstream in{path};
  if (!in) throw ConfigError(path + ": cannot open manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& error) {
    throw ConfigError(path + ": " + error.what());
  }
  if (!manifest.is_object() || !manifest.contains("command") || !manifest.contains("config")) {
    throw ConfigError(path + ": not a run manifest");
  }
  RunRequest request;
  request.command = manifest.at("command").get<std::string>();
  const auto arguments = manifest.value("arguments", nlohmann::json::object());
  request.data = arguments.value("data", "");
  request.theta = arguments.value("theta", "");
  request.model = arguments.value("model", "");
  request.rejection = arguments.value("ar", false);
  if (arguments.contains("epsilon")) {
    const auto& e = arguments.at("epsilon");
    request.epsilon = e.is_string() ? std::numeric_limits<double>::infinity() : e.get<double>();
  }
  auto config = parse_config(manifest.at("config"));
  // The recorded worker count is informational; results do not depend on it.
  if (manifest.contains("workers")) config.sampler.workers = manifest.at("workers").get<std::size_t>();
  return {std::move(request), std::move(config)};
}

}  // namespace abcloss::cli

#endif
