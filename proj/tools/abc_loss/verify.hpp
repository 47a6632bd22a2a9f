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
#ifndef ABC_LOSS_VERIFY_HPP
#define ABC_LOSS_VERIFY_HPP

#include "commands.hpp"
#include "suites.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

/**
 * \file
 * \brief The `verify` command: runs a named check suite and writes its report.
 */

namespace abcloss::cli {

/// Suite names accepted by `verify`.
inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names{"geom-exp", "distances", "hilbert", "selection"};
  return names;
}

/// Runs one suite. `particles` of zero keeps each study's default.
inline std::vector<suites::Report> run_suite(const std::string& name, const suites::SuiteOptions& options,
                                             std::size_t particles) {
  const std::size_t k = particles == 0 ? 1000 : particles;
  if (name == "geom-exp") return {suites::geom_exp_agreement(options, k)};
  if (name == "distances") return {suites::distance_properties()};
  if (name == "hilbert") return {suites::hilbert_properties()};
  if (name == "selection") {
    return {suites::individual_model_evidence(options, k), suites::aggregate_model_evidence(options, k)};
  }
  throw ConfigError("unknown suite '" + name + "'");
}

inline nlohmann::json report_json(const std::vector<suites::Report>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& report : reports) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& check : report.checks) {
      checks.push_back({{"name", check.name}, {"passed", check.passed}, {"detail", check.detail}});
    }
    out.push_back({{"title", report.title}, {"passed", report.passed}, {"checks", checks}});
  }
  return out;
}

inline std::string report_text(const std::vector<suites::Report>& reports) {
  std::ostringstream out;
  for (const auto& report : reports) {
    out << (report.passed ? "PASS " : "FAIL ") << report.title << "\n";
    for (const auto& check : report.checks) {
      out << "  " << (check.passed ? "ok   " : "FAIL ") << check.name << ": " << check.detail << "\n";
    }
  }
  return out.str();
}

/// Runs `suite` and writes report.json, report.txt and manifest.json into `out_dir`.
inline int run_verify(const std::string& suite, const std::string& out_dir, suites::SuiteOptions options,
                      std::size_t particles) {
  if (std::find(verify_suites().begin(), verify_suites().end(), suite) == verify_suites().end()) {
    throw ConfigError("unknown suite '" + suite + "'");
  }
  const auto start = std::chrono::steady_clock::now();
  options.progress = &std::cerr;
  const auto reports = run_suite(suite, options, particles);
  bool passed = true;
  for (const auto& report : reports) passed = passed && report.passed;

  const std::filesystem::path dir{out_dir};
  detail::ensure_directory(out_dir);
  detail::write_text(dir / "report.json", report_json(reports).dump(2) + "\n");
  const auto text = report_text(reports);
  detail::write_text(dir / "report.txt", text);
  nlohmann::json manifest{{"tool", "abc_loss"},
                          {"version", ABCLOSS_VERSION},
                          {"command", "verify"},
                          {"suite", suite},
                          {"seeds", options.seeds},
                          {"particles", particles},
                          {"workers", options.workers},
                          {"wall_seconds", detail::elapsed_since(start)},
                          {"status", passed ? "passed" : "failed"}};
  detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << text;
  return passed ? kSuccess : kCheckFailed;
}

}  // namespace abcloss::cli

#endif
