// SPDX-License-Identifier: Apache-2.0
//
// Configuration parsing, figure presets and CSV/plot emission.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wetlearn/sim.hpp"

namespace wet {

/// Flat key=value settings. Keys use snake_case; '-' is accepted as '_'.
struct Settings {
  std::map<std::string, std::string> values;
  std::map<std::string, std::string> origin;  ///< key -> "file:line" or "--flag"

  void set(const std::string& key, const std::string& value, const std::string& where);
  bool has(const std::string& key) const { return values.count(key) != 0; }
};

/// Reads a key=value file ('#' starts a comment). Throws IoError when the
/// file cannot be read and ConfigError with "path:line" on malformed lines.
Settings readSettingsFile(const std::filesystem::path& path);
Settings parseSettings(std::istream& in, const std::string& name);

/// Run-level options that do not belong to a single simulation.
struct RunOptions {
  std::optional<std::string> preset;
  int threads = 1;
  std::filesystem::path outDir = ".";
  bool dumpDebug = false;
  bool writePlot = true;
};

/// Applies settings over the defaults. Unknown keys and malformed values
/// throw ConfigError naming the offending key and its origin.
SimConfig resolveConfig(const Settings& settings, RunOptions* run = nullptr);

/// "inf" or a positive integer.
std::optional<int> parseB(const std::string& text);

/// dBm to watts.
double dbmToWatts(double dbm);

struct ExperimentCase {
  std::string label;  ///< CSV scheme column
  SimConfig config;
};

enum class SweepAxis { N, B };

struct ExperimentPreset {
  std::string name;
  std::string title;
  SweepAxis axis = SweepAxis::N;
  std::vector<int> grid;  ///< N values reported for every case
  std::vector<ExperimentCase> cases;
  bool plotsError = true;
  bool plotsGain = true;
};

std::vector<std::string> presetNames();

/// Builds a named preset on top of `base` (channel, seed, trials and, when
/// `overrideN` is set, the largest N). Throws ConfigError for unknown names.
ExperimentPreset makePreset(const std::string& name, const SimConfig& base, std::optional<int> overrideN = {});

/// Single-case experiment from a fully resolved config.
ExperimentPreset customPreset(const SimConfig& config);

struct CaseResult {
  ExperimentCase experimentCase;
  Aggregate aggregate;
  double chiStarDb = 0.0;  ///< mean over successful trials
};

struct ExperimentResult {
  ExperimentPreset preset;
  std::vector<CaseResult> cases;
  std::filesystem::path csv;
  std::optional<std::filesystem::path> plot;
  std::optional<std::filesystem::path> debug;
  int failedTrials = 0;
};

/// Runs every case and writes `<preset>_<seed>.csv` (plus the plot script
/// and debug dump when requested). Throws IoError.
ExperimentResult runExperiment(const ExperimentPreset& preset, const RunOptions& run);

/// 9 significant digits, '.' decimal point regardless of locale.
std::string formatNumber(double value);

void writeCsv(std::ostream& out, const std::vector<CaseResult>& cases);
void writePlotScript(std::ostream& out, const ExperimentPreset& preset, const std::string& csvName);

}  // namespace wet
