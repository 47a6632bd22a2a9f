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
/**
 * \file
 * \brief Command-line front end: simulate, fit, select, verify and rerun.
 */

#include "abc_loss/commands.hpp"
#include "abc_loss/verify.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <string>

namespace {

using namespace abcloss::cli;

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& error) {
    std::cerr << "abc_loss: " << error.what() << "\n";
    return kInvalidInput;
  } catch (const DataError& error) {
    std::cerr << "abc_loss: " << error.what() << "\n";
    return kInvalidInput;
  } catch (const std::invalid_argument& error) {
    std::cerr << "abc_loss: " << error.what() << "\n";
    return kInvalidInput;
  } catch (const std::ios_base::failure& error) {
    std::cerr << "abc_loss: " << error.what() << "\n";
    return kOutputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate Bayesian computation for compound loss models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ABCLOSS_VERSION);

  RunRequest request;
  std::string config_path;
  std::string out;

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic data file from fixed parameters");
  simulate->add_option("--config", config_path, "Run configuration (JSON)")->required();
  simulate->add_option("--theta", request.theta, "Parameters as name=value,...")->required();
  simulate->add_option("--out", out, "Output data file")->required();
  simulate->add_option("--model", request.model, "Model name when the configuration lists several");

  auto* fit = app.add_subcommand("fit", "Run the sequential sampler for one model");
  fit->add_option("--config", config_path, "Run configuration (JSON)")->required();
  fit->add_option("--data", request.data, "Observed data file")->required();
  fit->add_option("--out", out, "Output directory")->required();

  auto* select = app.add_subcommand("select", "Compare models by their posterior probabilities");
  select->add_option("--config", config_path, "Run configuration (JSON)")->required();
  select->add_option("--data", request.data, "Observed data file")->required();
  select->add_option("--out", out, "Output directory")->required();
  select->add_flag("--ar", request.rejection, "Use one round of rejection sampling");
  auto* epsilon = select->add_option("--epsilon", request.epsilon, "Tolerance for --ar");

  std::string suite;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t particles = 0;
  std::size_t workers = 1;
  auto* verify = app.add_subcommand("verify", "Run a check suite against exact references");
  verify->add_option("--suite", suite, "Suite name")->required()->check(CLI::IsMember(verify_suites()));
  verify->add_option("--out", out, "Report directory")->required();
  verify->add_option("--seeds", seeds, "Seeds for the stochastic studies")->delimiter(',');
  verify->add_option("--particles", particles, "Particle count override (default 1000)");
  verify->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  std::string manifest;
  auto* rerun = app.add_subcommand("rerun", "Repeat a run recorded in a manifest");
  rerun->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();
  rerun->add_option("--out", out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? kSuccess : kInvalidInput;
  }

  return guarded([&] {
    if (verify->parsed()) {
      abcloss::suites::SuiteOptions options;
      options.seeds = seeds;
      RunConfig probe;
      probe.sampler.workers = workers;
      apply_environment(probe);
      options.workers = probe.sampler.workers;
      return run_verify(suite, out, options, particles);
    }
    if (rerun->parsed()) {
      auto [recorded, config] = from_manifest(manifest);
      return execute(prepare(std::move(recorded), std::move(config)), out);
    }
    if (select->parsed() && request.rejection && epsilon->count() == 0) {
      throw ConfigError("--ar needs --epsilon");
    }
    if (!request.rejection && epsilon->count() > 0) {
      throw ConfigError("--epsilon is only used with --ar");
    }
    request.command = simulate->parsed() ? "simulate" : fit->parsed() ? "fit" : "select";
    return execute(prepare(request, load_config(config_path)), out);
  });
}
