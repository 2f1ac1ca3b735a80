// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "wetlearn/errors.hpp"
#include "wetlearn/experiment.hpp"

namespace wet {
namespace {

namespace fs = std::filesystem;

Settings parse(const std::string& text) {
  std::istringstream in(text);
  return parseSettings(in, "run.cfg");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wetlearn-test-" + name);
  fs::remove_all(dir);
  return dir;
}

// (label, B, N, metric) -> (mean, stderr, trials)
using CsvTable = std::map<std::string, std::vector<double>>;

CsvTable readCsv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) continue;
    t[f[0] + "," + f[1] + "," + f[2] + "," + f[3]] = {std::stod(f[4]), std::stod(f[5]), std::stod(f[6])};
  }
  return t;
}

TEST(Settings, EmptyConfigGivesReferenceSetup) {
  RunOptions run;
  const SimConfig c = resolveConfig(parse(""), &run);
  EXPECT_EQ(c.channel.mT, 4);
  EXPECT_EQ(c.channel.mR, 2);
  EXPECT_DOUBLE_EQ(c.channel.ricianFactorDb, 5.0);
  EXPECT_DOUBLE_EQ(c.channel.pathLossDb, 40.0);
  EXPECT_DOUBLE_EQ(c.channel.elementSpacingOverWavelength, 0.5);
  EXPECT_DOUBLE_EQ(c.channel.arrivalAngleDeg, 30.0);
  EXPECT_DOUBLE_EQ(c.power, 1.0);
  EXPECT_EQ(c.trials, 50);
  EXPECT_EQ(c.scheme, Scheme::Quantization);
  EXPECT_FALSE(run.preset.has_value());
}

TEST(Settings, ParsesKeysCommentsAndAliases) {
  RunOptions run;
  const SimConfig c = resolveConfig(parse("# comment\n"
                                          "scheme = comparison\n"
                                          "B = 1   # trailing\n"
                                          "N=100\n"
                                          "\n"
                                          "prune-keep = 32\n"
                                          "power_dbm = 20\n"
                                          "mT = 6\n"
                                          "threads = 3\n"),
                                    &run);
  EXPECT_EQ(c.scheme, Scheme::Comparison);
  EXPECT_EQ(c.B, 1);
  EXPECT_EQ(c.N, 100);
  EXPECT_EQ(c.pruneKeep, 32);
  EXPECT_NEAR(c.power, 0.1, 1e-15);
  EXPECT_EQ(c.channel.mT, 6);
  EXPECT_EQ(run.threads, 3);
}

TEST(Settings, InfiniteB) {
  EXPECT_FALSE(resolveConfig(parse("B = inf")).B.has_value());
  EXPECT_FALSE(parseB("inf").has_value());
  EXPECT_EQ(parseB("7"), 7);
  EXPECT_THROW(parseB("0"), ConfigError);
  EXPECT_THROW(parseB("two"), ConfigError);
}

TEST(Settings, ErrorsNameTheLine) {
  try {
    resolveConfig(parse("N = 10\nB = 0\n"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos) << e.what();
  }
  try {
    resolveConfig(parse("N = 10\n\nbogus = 1\n"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("just words\n"), ConfigError);
  EXPECT_THROW(resolveConfig(parse("N = ten")), ConfigError);
  EXPECT_THROW(resolveConfig(parse("robust = maybe")), ConfigError);
  EXPECT_THROW(resolveConfig(parse("scheme = comparison\nB = inf")), ConfigError);
  EXPECT_THROW(readSettingsFile("/nonexistent/run.cfg"), IoError);
}

TEST(Settings, DbmConversion) {
  EXPECT_DOUBLE_EQ(dbmToWatts(30.0), 1.0);
  EXPECT_NEAR(dbmToWatts(0.0), 1e-3, 1e-18);
}

TEST(Presets, KnownNamesBuild) {
  const SimConfig base;
  for (const auto& name : presetNames()) {
    const ExperimentPreset p = makePreset(name, base);
    EXPECT_FALSE(p.cases.empty()) << name;
    EXPECT_FALSE(p.grid.empty()) << name;
    for (const auto& c : p.cases) EXPECT_NO_THROW(c.config.validate()) << name << " " << c.label;
  }
  EXPECT_THROW(makePreset("fig99", base), ConfigError);
}

TEST(Presets, CaseLayout) {
  const SimConfig base;
  const ExperimentPreset fig7 = makePreset("fig7", base);
  ASSERT_EQ(fig7.cases.size(), 5U);
  EXPECT_EQ(fig7.cases.back().config.scheme, Scheme::RandomBeam);
  EXPECT_EQ(fig7.grid.back(), 100);

  const ExperimentPreset fig5 = makePreset("fig5", base, 30);
  EXPECT_FALSE(fig5.cases[4].config.B.has_value());
  EXPECT_EQ(fig5.grid.back(), 30);

  const ExperimentPreset fig10 = makePreset("fig10", base);
  ASSERT_EQ(fig10.cases.size(), 3U);
  EXPECT_EQ(fig10.cases[1].config.pruneKeep, 32);
  EXPECT_EQ(fig10.cases[2].config.pruneKeep, 48);
  EXPECT_NE(fig10.cases[1].label, fig10.cases[2].label);

  const ExperimentPreset fig9 = makePreset("fig9", base);
  EXPECT_EQ(fig9.axis, SweepAxis::B);
  EXPECT_EQ(fig9.grid, (std::vector<int>{10, 15}));
  EXPECT_EQ(fig9.cases.size(), 20U);
}

TEST(Csv, FormatNumber) {
  EXPECT_EQ(formatNumber(0.5), "0.5");
  EXPECT_EQ(formatNumber(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(formatNumber(1e-12), "1e-12");
  EXPECT_EQ(formatNumber(std::nan("")), "nan");
}

TEST(Csv, HeaderAndRows) {
  SimConfig c;
  c.N = 3;
  c.trials = 2;
  CaseResult r{{"quantization", c}, {}, 0.0};
  r.aggregate.normError = {{3, 0.25, 0.125, 2}};
  r.aggregate.gainDb = {{3, 5.5, 0.0, 2}};
  std::ostringstream out;
  writeCsv(out, {r});
  EXPECT_EQ(out.str(),
            "scheme,B,N,metric,mean,stderr,trials\n"
            "quantization,2,3,norm_error,0.25,0.125,2\n"
            "quantization,2,3,gain_db,5.5,0,2\n");
}

TEST(RunExperiment, RerunIsByteIdentical) {
  SimConfig c;
  c.scheme = Scheme::Comparison;
  c.B = 2;
  c.N = 12;
  c.trials = 3;
  RunOptions a;
  a.outDir = scratch("rerun-a");
  a.dumpDebug = true;
  RunOptions b = a;
  b.outDir = scratch("rerun-b");
  b.threads = 2;
  const ExperimentResult ra = runExperiment(customPreset(c), a);
  const ExperimentResult rb = runExperiment(customPreset(c), b);
  EXPECT_EQ(ra.csv.filename(), "custom_1.csv");
  EXPECT_EQ(slurp(ra.csv), slurp(rb.csv));
  EXPECT_EQ(slurp(*ra.debug), slurp(*rb.debug));
  ASSERT_TRUE(ra.plot.has_value());
  EXPECT_NE(slurp(*ra.plot).find("custom_1.csv"), std::string::npos);
}

TEST(RunExperiment, MatchesGoldenCurves) {
  SimConfig base;
  base.trials = 4;
  base.seed = 1;
  base.channel.rngSeed = 1;
  RunOptions run;
  run.outDir = scratch("golden");
  run.writePlot = false;
  const ExperimentResult r = runExperiment(makePreset("fig7", base, 20), run);
  const CsvTable got = readCsv(slurp(r.csv));
  const CsvTable want = readCsv(slurp(fs::path(WETLEARN_GOLDEN_DIR) / "fig7_1.csv"));
  ASSERT_EQ(got.size(), want.size());
  for (const auto& [key, w] : want) {
    const auto it = got.find(key);
    ASSERT_NE(it, got.end()) << key;
    EXPECT_NEAR(it->second[0], w[0], 1e-6 * (1.0 + std::abs(w[0]))) << key;
    EXPECT_NEAR(it->second[1], w[1], 1e-6 * (1.0 + std::abs(w[1]))) << key;
    EXPECT_EQ(it->second[2], w[2]) << key;
  }
}

TEST(RunExperiment, InfiniteResolutionCurveReachesZero) {
  SimConfig base;
  base.trials = 5;
  ExperimentPreset p = makePreset("fig5", base, 20);
  std::erase_if(p.cases, [](const ExperimentCase& c) { return c.config.B.has_value(); });
  ASSERT_EQ(p.cases.size(), 1U);
  RunOptions run;
  run.outDir = scratch("fig5");
  const CsvTable t = readCsv(slurp(runExperiment(p, run).csv));
  EXPECT_LE(t.at(p.cases[0].label + ",inf,16,norm_error")[0], 1e-6);
  EXPECT_GT(t.at(p.cases[0].label + ",inf,10,norm_error")[0], 1e-3);
}

TEST(RunExperiment, GainVersusResolution) {
  SimConfig base;
  base.trials = 20;
  RunOptions run;
  run.outDir = scratch("fig9");
  const ExperimentPreset p = makePreset("fig9", base);
  const CsvTable t = readCsv(slurp(runExperiment(p, run).csv));
  const auto q1 = t.at("quantization,1,15,gain_db");
  const auto q10 = t.at("quantization,10,15,gain_db");
  const auto c1 = t.at("comparison,1,15,gain_db");
  const auto c10 = t.at("comparison,10,15,gain_db");
  const auto c3 = t.at("comparison,3,15,gain_db");
  // quantization improves clearly with B
  EXPECT_GT(q10[0] - q1[0], 2.0 * std::hypot(q1[1], q10[1]));
  // comparison improves less, and is flat once a few comparisons are sent
  EXPECT_LT(c10[0] - c1[0], q10[0] - q1[0]);
  EXPECT_LT(std::abs(c10[0] - c3[0]), std::hypot(c3[1], c10[1]));
}

}  // namespace
}  // namespace wet
