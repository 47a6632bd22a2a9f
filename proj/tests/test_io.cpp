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
#include <gtest/gtest.h>

#include <abcloss/oracles.hpp>

#include "abc_loss/commands.hpp"
#include "abc_loss/config.hpp"
#include "abc_loss/io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace abcloss;
using namespace abcloss::cli;
namespace fs = std::filesystem;

DataSet parse(const std::string& text) {
  std::istringstream in{text};
  return parse_data(in, "data.csv");
}

std::string data_error(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& error) {
    return error.what();
  }
  return "";
}

TEST(LoadData, ThreeRowUnivariateFile) {
  const auto data = parse("period,x\n1,0\n2,2.5\n3,0\n");
  EXPECT_EQ(data.data.horizon(), 3U);
  EXPECT_FALSE(data.frequencies.has_value());
  const auto& part = std::get<PartitionedUnivariate>(data.partitioned);
  EXPECT_EQ(part.zero_count, 2U);
  EXPECT_EQ(part.positives, std::vector<double>{2.5});
}

TEST(LoadData, CountColumnEnablesObservedFrequencies) {
  const auto data = parse("period,x,n\n1,0,0\n2,2.5,3\n3,0,1\n");
  ASSERT_TRUE(data.frequencies.has_value());
  EXPECT_EQ(data.frequencies->first, (std::vector<ClaimCount>{0, 3, 1}));
  EXPECT_TRUE(data.frequencies->second.empty());
}

TEST(LoadData, BivariateFileHasFourWayCounts) {
  const auto data = parse("period,x1,x2\n1,0,0\n2,1,0\n3,0,2\n4,3,4\n5,5,6\n");
  const auto& part = std::get<PartitionedBivariate>(data.partitioned);
  EXPECT_EQ(part.both_zero, 1U);
  EXPECT_EQ(part.first_only, 1U);
  EXPECT_EQ(part.second_only, 1U);
  EXPECT_EQ(part.both_positive, 2U);
  EXPECT_EQ(part.first_only_values, std::vector<double>{1.0});
  EXPECT_EQ(part.second_only_values, std::vector<double>{2.0});
}

TEST(LoadData, ColumnOrderAndWhitespaceAreFree) {
  const auto data = parse("x , period\n 1.5 , 1\n0,2\n");
  EXPECT_EQ(data.data.values, (std::vector<double>{1.5, 0.0}));
}

TEST(LoadData, SchemaErrorsNameTheRowAndColumn) {
  EXPECT_NE(data_error("period,n\n1,0\n").find("missing column 'x'"), std::string::npos);
  EXPECT_NE(data_error("x\n1\n").find("missing column 'period'"), std::string::npos);
  EXPECT_NE(data_error("period,x\n1,0\n3,1\n").find("row 2, column 'period'"), std::string::npos);
  EXPECT_NE(data_error("period,x\n1,0\n2,-1\n").find("row 2, column 'x'"), std::string::npos);
  EXPECT_NE(data_error("period,x\n1,abc\n").find("row 1, column 'x'"), std::string::npos);
  EXPECT_NE(data_error("period,x,n\n1,0,0\n2,1,1.5\n").find("row 2, column 'n'"), std::string::npos);
  EXPECT_NE(data_error("period,x,n\n1,0,-2\n").find("row 1, column 'n'"), std::string::npos);
  EXPECT_NE(data_error("period,x,n\n1,4,0\n").find("row 1, column 'x'"), std::string::npos);
  EXPECT_NE(data_error("period,x,y\n1,0,0\n").find("unknown column 'y'"), std::string::npos);
  EXPECT_NE(data_error("period,x,x\n1,0,0\n").find("duplicate"), std::string::npos);
  EXPECT_NE(data_error("period,x\n1,0,0\n").find("row 1"), std::string::npos);
  EXPECT_NE(data_error("period,x\n").find("no data rows"), std::string::npos);
  EXPECT_NE(data_error("").find("header"), std::string::npos);
}

TEST(LoadData, WriteThenReadRoundTrips) {
  SyntheticData data;
  data.values = {0.0, 1.0 / 3.0, 1e-300, 12345.678};
  data.counts = {{0, 0}, {1, 0}, {2, 0}, {7, 0}};
  std::ostringstream out;
  write_data(out, data, true);
  const auto back = parse(out.str());
  EXPECT_EQ(back.data.values, data.values);
  ASSERT_TRUE(back.frequencies.has_value());
  EXPECT_EQ(back.frequencies->first, (std::vector<ClaimCount>{0, 1, 2, 7}));
}

nlohmann::json geom_exp_config() {
  return nlohmann::json::parse(R"({
    "model": {"name": "g", "frequency": "geometric", "severity": "exponential",
              "prior": {"p": [0, 1], "delta": [0, 100]}},
    "sampler": {"particles": 300, "generations": 8, "seed": 3},
    "horizon": 100
  })");
}

std::string config_error(const nlohmann::json& document) {
  try {
    parse_config(document);
  } catch (const ConfigError& error) {
    return error.what();
  }
  return "";
}

TEST(Config, ParsesAValidDocument) {
  const auto config = parse_config(geom_exp_config());
  ASSERT_EQ(config.models.size(), 1U);
  EXPECT_EQ(config.models[0].prior.names(), (std::vector<std::string>{"p", "delta"}));
  EXPECT_EQ(config.sampler.particles, 300U);
  EXPECT_EQ(config.sampler.seed, 3U);
  EXPECT_EQ(config.horizon, 100U);
  EXPECT_EQ(config.distance.regime, Regime::univariate_mixed);
}

TEST(Config, RejectsBadDocuments) {
  auto unknown = geom_exp_config();
  unknown["sampler"]["particle"] = 10;
  EXPECT_NE(config_error(unknown).find("particle"), std::string::npos);

  auto missing = geom_exp_config();
  missing["model"]["prior"].erase("delta");
  EXPECT_NE(config_error(missing).find("delta"), std::string::npos);

  auto extra = geom_exp_config();
  extra["model"]["prior"]["lambda"] = {0, 1};
  EXPECT_NE(config_error(extra).find("lambda"), std::string::npos);

  auto empty_box = geom_exp_config();
  empty_box["model"]["prior"]["p"] = {1, 0};
  EXPECT_FALSE(config_error(empty_box).empty());

  auto few = geom_exp_config();
  few["sampler"]["particles"] = 5;
  EXPECT_FALSE(config_error(few).empty());

  auto family = geom_exp_config();
  family["model"]["severity"] = "pareto";
  EXPECT_NE(config_error(family).find("pareto"), std::string::npos);

  auto both = geom_exp_config();
  both["models"] = nlohmann::json::array({both["model"]});
  EXPECT_FALSE(config_error(both).empty());
}

TEST(Config, ModelPriorMustBeADistribution) {
  auto document = geom_exp_config();
  auto second = document["model"];
  second["name"] = "h";
  document["models"] = nlohmann::json::array({document["model"], second});
  document.erase("model");
  EXPECT_EQ(config_error(document), "");
  document["model_prior"] = {0.7, 0.7};
  EXPECT_FALSE(config_error(document).empty());
  document["model_prior"] = {0.25, 0.75};
  EXPECT_EQ(parse_config(document).model_prior, (std::vector<double>{0.25, 0.75}));
  document["models"][1]["name"] = "g";
  EXPECT_NE(config_error(document).find("g"), std::string::npos);
}

TEST(Config, EnvironmentOverridesWorkers) {
  auto config = parse_config(geom_exp_config());
  ::setenv("ABC_LOSS_WORKERS", "3", 1);
  apply_environment(config);
  EXPECT_EQ(config.sampler.workers, 3U);
  ::setenv("ABC_LOSS_WORKERS", "zero", 1);
  EXPECT_THROW(apply_environment(config), ConfigError);
  ::unsetenv("ABC_LOSS_WORKERS");
}

TEST(Theta, ParsesNamedValuesInAnyOrder) {
  const auto theta = cli::detail::parse_theta("delta=5, p=0.8", {"p", "delta"});
  EXPECT_DOUBLE_EQ(theta[0], 0.8);
  EXPECT_DOUBLE_EQ(theta[1], 5.0);
  EXPECT_THROW(cli::detail::parse_theta("p=0.8", {"p", "delta"}), ConfigError);
  EXPECT_THROW(cli::detail::parse_theta("p=0.8,delta=5,q=1", {"p", "delta"}), ConfigError);
  EXPECT_THROW(cli::detail::parse_theta("p=x,delta=5", {"p", "delta"}), ConfigError);
}

// End-to-end runs of the binary.

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string{"abc_loss_"} + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& arguments) const {
    const std::string command = std::string{ABC_LOSS_BINARY} + " " + arguments + " > " + (dir_ / "stdout").string() +
                                " 2> " + (dir_ / "stderr").string();
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write_config(const nlohmann::json& document, const std::string& name = "config.json") const {
    const auto path = dir_ / name;
    std::ofstream{path} << document.dump(2);
    return path;
  }

  static std::string slurp(const fs::path& path) {
    std::ifstream in{path};
    std::stringstream text;
    text << in.rdbuf();
    return text.str();
  }

  fs::path dir_;
};

TEST_F(Cli, SimulateThenFitMatchesTheExactPosterior) {
  const auto config = write_config(geom_exp_config());
  const auto data = dir_ / "data.csv";
  ASSERT_EQ(run("simulate --config " + config.string() + " --theta p=0.8,delta=5 --out " + data.string()), 0);
  EXPECT_TRUE(fs::exists(data.string() + ".manifest.json"));
  ASSERT_EQ(run("fit --config " + config.string() + " --data " + data.string() + " --out " + (dir_ / "fit").string()), 0);

  const auto loaded = load_data(data.string());
  EXPECT_EQ(loaded.data.horizon(), 100U);
  const auto grid = oracles::grid_posterior_geom_exp(std::get<PartitionedUnivariate>(loaded.partitioned), {},
                                                     PriorBox{{"p", "delta"}, {{0.0, 1.0}, {0.0, 100.0}}});
  const auto summary = nlohmann::json::parse(slurp(dir_ / "fit" / "summary.json"));
  EXPECT_EQ(summary.at("status"), "ok");
  EXPECT_NEAR(summary.at("posterior").at("p").at("mean").get<double>(), grid.mean_p, 0.05);
  EXPECT_NEAR(summary.at("posterior").at("delta").at("mean").get<double>(), grid.mean_delta, 1.0);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in{path};
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream fields{line};
    std::string field;
    while (std::getline(fields, field, ',')) row.push_back(field);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(row);
  }
  return rows;
}

class CliFit : public Cli {
 protected:
  void SetUp() override {
    Cli::SetUp();
    auto document = geom_exp_config();
    document["sampler"]["particles"] = 100;
    document["sampler"]["generations"] = 3;
    config_ = write_config(document);
    data_ = dir_ / "data.csv";
    ASSERT_EQ(run("simulate --config " + config_.string() + " --theta p=0.8,delta=5 --out " + data_.string()), 0);
  }
  std::string fit_into(const std::string& name) {
    return "fit --config " + config_.string() + " --data " + data_.string() + " --out " + (dir_ / name).string();
  }
  fs::path config_;
  fs::path data_;
};

TEST_F(CliFit, RepeatedRunsAreByteIdentical) {
  ASSERT_EQ(run(fit_into("a")), 0);
  ASSERT_EQ(run(fit_into("b")), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "particles.csv"), slurp(dir_ / "b" / "particles.csv"));
  ::setenv("ABC_LOSS_WORKERS", "4", 1);
  const int status = run(fit_into("c"));
  ::unsetenv("ABC_LOSS_WORKERS");
  ASSERT_EQ(status, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "particles.csv"), slurp(dir_ / "c" / "particles.csv"));
}

TEST_F(CliFit, ParticlesFileMatchesThePopulation) {
  ASSERT_EQ(run(fit_into("a")), 0);
  const auto rows = read_csv(dir_ / "a" / "particles.csv");
  ASSERT_GE(rows.size(), 2U);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"p", "delta", "distance", "weight"}));
  const auto summary = nlohmann::json::parse(slurp(dir_ / "a" / "summary.json"));
  EXPECT_EQ(rows.size() - 1, summary.at("particles").get<std::size_t>());
  double total = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) total += std::stod(rows[i][3]);
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST_F(CliFit, ManifestRerunReproducesTheRun) {
  ASSERT_EQ(run(fit_into("a")), 0);
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "a" / "manifest.json"));
  EXPECT_EQ(manifest.at("seed"), 3);
  EXPECT_EQ(manifest.at("command"), "fit");
  EXPECT_TRUE(manifest.contains("version"));
  EXPECT_TRUE(manifest.contains("wall_seconds"));
  ASSERT_EQ(run("rerun --manifest " + (dir_ / "a" / "manifest.json").string() + " --out " + (dir_ / "b").string()), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "particles.csv"), slurp(dir_ / "b" / "particles.csv"));
}

TEST_F(CliFit, MalformedConfigLeavesNoOutput) {
  std::ofstream{dir_ / "broken.json"} << "{\"model\": ";
  const auto out = dir_ / "out";
  EXPECT_EQ(run("fit --config " + (dir_ / "broken.json").string() + " --data " + data_.string() + " --out " + out.string()),
            kInvalidInput);
  EXPECT_FALSE(fs::exists(out));

  auto document = geom_exp_config();
  document["model"]["prior"].erase("p");
  const auto missing = write_config(document, "missing.json");
  EXPECT_EQ(run("fit --config " + missing.string() + " --data " + data_.string() + " --out " + out.string()), kInvalidInput);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_NE(slurp(dir_ / "stderr").find("'p'"), std::string::npos);

  std::ofstream{dir_ / "bad.csv"} << "period,x\n1,0\n2,-3\n";
  EXPECT_EQ(run("fit --config " + config_.string() + " --data " + (dir_ / "bad.csv").string() + " --out " + out.string()),
            kInvalidInput);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_NE(slurp(dir_ / "stderr").find("row 2, column 'x'"), std::string::npos);
}

TEST_F(CliFit, StallExitsNonzeroAndKeepsTraces) {
  auto document = geom_exp_config();
  document["sampler"]["particles"] = 10;
  document["sampler"]["proposal_budget"] = 3;
  const auto config = write_config(document, "stall.json");
  const auto out = dir_ / "stall";
  EXPECT_EQ(run("fit --config " + config.string() + " --data " + data_.string() + " --out " + out.string()), kStalled);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary.at("status"), "stalled");
  EXPECT_TRUE(summary.at("traces").contains("epsilon"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST_F(CliFit, SelectWritesModelProbabilities) {
  auto document = geom_exp_config();
  auto second = document["model"];
  second["name"] = "poisson";
  second["frequency"] = "poisson";
  second["prior"] = {{"lambda", {0, 10}}, {"delta", {0, 100}}};
  document["models"] = nlohmann::json::array({document["model"], second});
  document.erase("model");
  document["sampler"]["particles"] = 100;
  document["sampler"]["generations"] = 3;
  const auto config = write_config(document, "select.json");
  for (const std::string mode : {"", " --ar --epsilon 30"}) {
    const auto out = dir_ / (mode.empty() ? "smc" : "ar");
    ASSERT_EQ(run("select --config " + config.string() + " --data " + data_.string() + " --out " + out.string() + mode), 0)
        << slurp(dir_ / "stderr");
    const auto rows = read_csv(out / "model_probabilities.csv");
    ASSERT_GE(rows.size(), 2U);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"generation", "epsilon", "g", "poisson"}));
    const double total = std::stod(rows.back()[2]) + std::stod(rows.back()[3]);
    EXPECT_NEAR(total, 1.0, 1e-9);
    const auto particles = read_csv(out / "particles.csv");
    double weight = 0.0;
    for (std::size_t i = 1; i < particles.size(); ++i) weight += std::stod(particles[i][2]);
    EXPECT_NEAR(weight, 1.0, 1e-9);
  }
  EXPECT_EQ(run("select --config " + config.string() + " --data " + data_.string() + " --out " +
                (dir_ / "x").string() + " --ar"),
            kInvalidInput);
}

TEST_F(Cli, UsageErrorsExitWithInvalidInput) {
  EXPECT_EQ(run(""), kInvalidInput);
  EXPECT_EQ(run("fit --config nowhere.json"), kInvalidInput);
  EXPECT_EQ(run("verify --suite nonsense --out " + (dir_ / "v").string()), kInvalidInput);
  EXPECT_EQ(run("fit --config nowhere.json --data nowhere.csv --out " + (dir_ / "o").string()), kInvalidInput);
  EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(Cli, VerifyWritesAReport) {
  const auto out = dir_ / "hilbert";
  ASSERT_EQ(run("verify --suite hilbert --out " + out.string()), 0);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  ASSERT_EQ(report.size(), 1U);
  EXPECT_TRUE(report[0].at("passed").get<bool>());
  EXPECT_EQ(report[0].at("checks").size(), 5U);
  EXPECT_TRUE(fs::exists(out / "report.txt"));
}

}  // namespace
