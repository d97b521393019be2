// Copyright 2026 The qfpe Authors
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

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qfpe/cli.hpp"

namespace qfpe {
namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
  io::Json json() const { return io::Json::parse(out); }
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "qfpe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string config(const std::string& name) { return std::string(QFPE_SOURCE_DIR) + "/configs/" + name; }

/// Writes text to a fresh file in the temp directory and returns its path.
std::string temp_file(const std::string& name, const std::string& text) {
  const auto path = (std::filesystem::temp_directory_path() / ("qfpe_cli_" + name)).string();
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(CliCheck, QuantumOpticalIsShiftButNotTranslationCovariant) {
  const CliRun r = run({"check", "--config", config("quantum_optical.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = r.json();
  EXPECT_TRUE(j["cp"]["ok"].get<bool>());
  EXPECT_TRUE(j["shift_covariant"]["ok"].get<bool>());
  EXPECT_TRUE(j["translation_covariant"]["violated"].get<std::string>().empty() == false);
  EXPECT_TRUE(j["violations"].empty());
  EXPECT_EQ(j["family"], "quantum_optical");
}

TEST(CliCheck, QbmIsTranslationButNotShiftCovariant) {
  const CliRun r = run({"check", "--config", config("qbm.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = r.json();
  EXPECT_TRUE(j["cp"]["ok"].get<bool>());
  EXPECT_TRUE(j["translation_covariant"]["ok"].get<bool>());
  EXPECT_TRUE(j["shift_covariant"]["violated"].get<std::string>().empty() == false);
}

TEST(CliCheck, FlatCoefficientsOnTheBoundary) {
  const CliRun r = run({"check", "--config", config("coefficients.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(r.json()["cp"]["ok"].get<bool>());
}

TEST(CliCheck, NonCpCoefficientsExitOne) {
  const auto path = temp_file("noncp.json", R"({"D_xx": 0.01, "D_pp": 0.01, "gamma": 1.0})");
  const CliRun r = run({"check", "--config", path});
  EXPECT_EQ(r.code, cli::kExitViolation);
  const auto j = r.json();
  EXPECT_TRUE(j["cp"]["violated"].get<std::string>().empty() == false);
  EXPECT_EQ(j["violations"][0], "cp");
}

TEST(CliCheck, MalformedConfigNamesTheField) {
  const auto path = temp_file("bad.json", R"({"generator": {"family": "quantum_optical", "eta": "fast",
    "context": {"beta": 1.0, "omega": 1.0}}, "basis": {"kind": "fock", "dim": 10}})");
  const CliRun r = run({"check", "--config", path});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("eta"), std::string::npos) << r.err;

  const auto syntax = temp_file("syntax.json", "{\"D_xx\": ");
  EXPECT_EQ(run({"check", "--config", syntax}).code, cli::kExitUsage);
  EXPECT_EQ(run({"check", "--config", "/nonexistent/qfpe.json"}).code, cli::kExitUsage);
}

TEST(CliEvolve, EmptyTimeGrid) {
  const auto path = temp_file("empty_grid.json", R"({"generator": {"family": "quantum_optical", "eta": 1.0,
    "context": {"beta": 1.0, "omega": 1.0}}, "basis": {"kind": "fock", "dim": 8}, "evolve": {"times": []}})");
  const CliRun r = run({"evolve", "--config", path});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = r.json();
  EXPECT_EQ(j["summary"]["samples"], 0);
  EXPECT_TRUE(j["summary"]["final"].is_null());
}

TEST(CliEvolve, ZeroTemperatureRateAndCsv) {
  const auto out = (std::filesystem::temp_directory_path() / "qfpe_cli_qo.json").string();
  const CliRun r = run({"evolve", "--config", config("qo_zero_temperature.json"), "--out", out});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = io::Json::parse(slurp(out));
  EXPECT_NEAR(j["summary"]["rate"].get<double>(), 0.5, 5e-4);

  const std::string csv = slurp(cli::csv_path_for(out));
  std::istringstream lines(csv);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(header.rfind("time,N,", 0), 0u) << header;
  EXPECT_EQ(first.find(';'), std::string::npos);
  int rows = 1;
  for (std::string l; std::getline(lines, l);) rows += !l.empty();
  EXPECT_EQ(rows, 41);
}

TEST(CliEvolve, KineticQbmReachesEquipartition) {
  const CliRun r = run({"evolve", "--config", config("kinetic_qbm.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto s = r.json()["summary"];
  EXPECT_NEAR(s["final"]["kinetic_energy"].get<double>(), 0.5, 0.005);
  EXPECT_LE(s["max_leakage"].get<double>(), 1e-6);
}

TEST(CliGamma, ConstantProfileClosedForm) {
  const auto path = temp_file("gamma.json", R"({"gas": {"m": 0.5, "z": 1.0, "n": 1.0, "beta": 1.0,
    "t_matrix": {"kind": "constant", "params": {"t0": 1.0}}}})");
  const CliRun r = run({"gamma", "--config", path});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  constexpr double pi = std::numbers::pi;
  const double expect = 128.0 * pi * pi * pi / 3.0 * std::pow(0.5, 4);
  const auto j = r.json();
  EXPECT_NEAR(j["gamma"].get<double>(), expect, 1e-8 * expect);
  EXPECT_NEAR(j["D_pp"].get<double>(), 2.0 * expect, 1e-8 * expect);
}

TEST(CliGamma, ZeroCouplingAndBundledGas) {
  const auto path = temp_file("gamma0.json", R"({"gas": {"m": 0.5, "z": 1.0, "n": 1.0, "beta": 1.0,
    "t_matrix": {"kind": "constant", "params": {"t0": 0.0}}}})");
  const CliRun r = run({"gamma", "--config", path});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.json()["gamma"].get<double>(), 0.0);
  EXPECT_EQ(run({"gamma", "--config", config("gas.json")}).code, cli::kExitOk);
}

TEST(CliQlbe, BundledConfigHasNoViolations) {
  const CliRun r = run({"qlbe", "--config", config("qlbe.json"), "--lattice", "30,0.1"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = r.json();
  EXPECT_TRUE(j["violations"].empty());
  EXPECT_LE(j["translation_defect"].get<double>(), 1e-12);
}

TEST(CliSteady, QuantumOpticalKernel) {
  const CliRun r = run({"steady", "--config", config("quantum_optical.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto st = r.json()["stationary"];
  EXPECT_EQ(st["kernel_dimension"], 1);
  EXPECT_LE(st["gibbs_residual"].get<double>(), 1e-8);
}

TEST(CliCovariance, QuantumOpticalPhase) {
  const CliRun r = run({"covariance", "--config", config("quantum_optical.json"), "--seed", "4"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(r.json()["violations"].empty());
}

TEST(CliDeterminism, RepeatedRunsAreByteIdentical) {
  for (const auto& cmd : {"check", "evolve", "covariance"}) {
    const auto cfg = std::string(cmd) == "evolve" ? config("qo_zero_temperature.json") : config("quantum_optical.json");
    const CliRun a = run({cmd, "--config", cfg, "--seed", "17"});
    const CliRun b = run({cmd, "--config", cfg, "--seed", "17"});
    EXPECT_EQ(a.code, b.code);
    EXPECT_EQ(a.out, b.out) << cmd;
  }
}

TEST(CliReport, StampsVersionSeedAndHash) {
  const auto j = run({"check", "--config", config("qbm.json"), "--seed", "9"}).json();
  EXPECT_EQ(j["version"], cli::kVersion);
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
  // flag overrides change the effective config and so the hash
  const auto k = run({"check", "--config", config("qbm.json"), "--seed", "9", "--fock-dim", "12"}).json();
  EXPECT_NE(j["config_hash"], k["config_hash"]);
}

TEST(CliFlags, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"check", "--config", config("qlbe.json"), "--lattice", "30"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"check", "--config", config("qlbe.json"), "--lattice", "-3,0.1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"check", "--config", config("qbm.json"), "--fock-dim", "0"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"check", "--config", config("qbm.json"), "--bogus"}).code, cli::kExitUsage);
}

TEST(CliCsv, SeventeenSignificantDigits) {
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_double(1.0), "1");
  EXPECT_EQ(io::format_double(-2.5e-20), "-2.4999999999999999e-20");
  io::CsvWriter w({"a", "b"});
  w.row({1.0 / 3.0, 2.0});
  EXPECT_EQ(w.str(), "a,b\n0.33333333333333331,2\n");
}

}  // namespace
}  // namespace qfpe
