// SPDX-License-Identifier: Apache-2.0
#include "wetlearn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "wetlearn/errors.hpp"

namespace wet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalizeKey(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

[[noreturn]] void bad(const Settings& s, const std::string& key, const std::string& why) {
  const auto it = s.origin.find(key);
  const std::string where = it == s.origin.end() ? key : it->second;
  throw ConfigError(where + ": " + key + " " + why);
}

template <typename T>
T parseNumber(const Settings& s, const std::string& key) {
  const std::string& text = s.values.at(key);
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) bad(s, key, "expects a number, got '" + text + "'");
  return value;
}

bool parseBool(const Settings& s, const std::string& key) {
  const std::string& v = s.values.at(key);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad(s, key, "expects a boolean, got '" + v + "'");
}

Scheme parseScheme(const Settings& s, const std::string& key) {
  const std::string& v = s.values.at(key);
  if (v == "quantization") return Scheme::Quantization;
  if (v == "comparison") return Scheme::Comparison;
  if (v == "random") return Scheme::RandomBeam;
  bad(s, key, "must be quantization, comparison or random, got '" + v + "'");
}

std::string bLabel(const SimConfig& c) {
  if (c.scheme == Scheme::RandomBeam) return "-";
  return c.B ? std::to_string(*c.B) : "inf";
}

std::string caseLabel(const SimConfig& c) {
  std::string label = schemeName(c.scheme);
  if (c.pruneKeep) label += "-keep" + std::to_string(*c.pruneKeep);
  if (c.alpha > 0.0) label += "-alpha" + formatNumber(c.alpha);
  if (c.robust) label += "-robust";
  return label;
}

std::vector<int> rangeGrid(int n) {
  std::vector<int> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = i + 1;
  return g;
}

ExperimentCase makeCase(SimConfig c) {
  c.validate();
  return {caseLabel(c), std::move(c)};
}

SimConfig with(const SimConfig& base, Scheme scheme, std::optional<int> B) {
  SimConfig c = base;
  c.scheme = scheme;
  c.B = B;
  c.pruneKeep.reset();
  c.alpha = 0.0;
  c.robust = false;
  return c;
}

nlohmann::json intervalJson(const std::string& label, const TrialRecord& r, const IntervalRecord& ir) {
  nlohmann::json j;
  j["case"] = label;
  j["trial"] = r.trial;
  j["interval"] = ir.n;
  j["planes"] = ir.planeCount;
  j["planes_added"] = ir.planesAdded;
  j["planes_pruned"] = ir.planesPruned;
  j["newton_iterations"] = ir.newtonIterations;
  j["kkt_residual"] = ir.kktResidual;
  j["min_margin"] = std::isfinite(ir.minMargin) ? nlohmann::json(ir.minMargin) : nlohmann::json(nullptr);
  j["feedback"] = ir.feedback.bits();
  j["norm_error"] = std::isnan(ir.normError) ? nlohmann::json(nullptr) : nlohmann::json(ir.normError);
  j["gain_db"] = ir.gainDb;
  j["truth_contained"] = ir.truthContained;
  return j;
}

}  // namespace

void Settings::set(const std::string& key, const std::string& value, const std::string& where) {
  const std::string k = normalizeKey(key);
  values[k] = value;
  origin[k] = where;
}

Settings parseSettings(std::istream& in, const std::string& name) {
  Settings s;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = name + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": missing key");
    s.set(key, trim(line.substr(eq + 1)), where);
  }
  return s;
}

Settings readSettingsFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  return parseSettings(in, path.string());
}

std::optional<int> parseB(const std::string& text) {
  if (text == "inf" || text == "infinity") return std::nullopt;
  int b = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, b);
  if (ec != std::errc() || ptr != end) throw ConfigError("B must be a positive integer or 'inf', got '" + text + "'");
  if (b < 1) throw ConfigError("B must be at least 1, got " + text);
  return b;
}

double dbmToWatts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

SimConfig resolveConfig(const Settings& s, RunOptions* run) {
  static const std::set<std::string> known = {
      "preset",     "scheme",           "b",          "n",           "trials",         "seed",
      "alpha",      "prune_keep",       "threads",    "out_dir",     "dump_debug",     "robust",
      "mt",         "mr",               "rician_factor_db", "path_loss_db", "spacing", "angle_deg",
      "power_dbm",  "tm",               "tf",         "noisy_reference", "relax_cadence", "augmented_pruning",
      "plot"};
  // Keys are case-insensitive so files may spell mT/mR as in the literature.
  Settings l;
  for (const auto& [key, value] : s.values) {
    std::string lower = key;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (!known.count(lower)) bad(s, key, "is not a recognized setting");
    l.values[lower] = value;
    l.origin[lower] = s.origin.at(key);
  }
  auto lhas = [&](const char* k) { return l.has(k); };

  SimConfig c;
  if (lhas("scheme")) c.scheme = parseScheme(l, "scheme");
  if (lhas("b")) {
    try {
      c.B = parseB(l.values.at("b"));
    } catch (const ConfigError& e) {
      throw ConfigError(l.origin.at("b") + ": " + e.what());
    }
  }
  if (lhas("n")) c.N = parseNumber<int>(l, "n");
  if (lhas("trials")) c.trials = parseNumber<int>(l, "trials");
  if (lhas("seed")) c.seed = parseNumber<std::uint64_t>(l, "seed");
  if (lhas("alpha")) c.alpha = parseNumber<double>(l, "alpha");
  if (lhas("prune_keep")) {
    const int keep = parseNumber<int>(l, "prune_keep");
    if (keep > 0) c.pruneKeep = keep;
    else if (keep < 0) bad(l, "prune_keep", "must be positive (0 disables pruning)");
  }
  if (lhas("robust")) c.robust = parseBool(l, "robust");
  if (lhas("mt")) c.channel.mT = parseNumber<int>(l, "mt");
  if (lhas("mr")) c.channel.mR = parseNumber<int>(l, "mr");
  if (lhas("rician_factor_db")) c.channel.ricianFactorDb = parseNumber<double>(l, "rician_factor_db");
  if (lhas("path_loss_db")) c.channel.pathLossDb = parseNumber<double>(l, "path_loss_db");
  if (lhas("spacing")) c.channel.elementSpacingOverWavelength = parseNumber<double>(l, "spacing");
  if (lhas("angle_deg")) c.channel.arrivalAngleDeg = parseNumber<double>(l, "angle_deg");
  if (lhas("power_dbm")) c.power = dbmToWatts(parseNumber<double>(l, "power_dbm"));
  if (lhas("tm")) c.tm = parseNumber<double>(l, "tm");
  if (lhas("tf")) c.tf = parseNumber<double>(l, "tf");
  if (lhas("noisy_reference")) c.noisyReference = parseBool(l, "noisy_reference");
  if (lhas("augmented_pruning")) c.augmentedPruningMetric = parseBool(l, "augmented_pruning");
  if (lhas("relax_cadence")) {
    const std::string& v = l.values.at("relax_cadence");
    if (v == "every") c.relaxCadence = RelaxCadence::EveryInterval;
    else if (v == "on-demand" || v == "on_demand") c.relaxCadence = RelaxCadence::OnDemand;
    else bad(l, "relax_cadence", "must be every or on-demand, got '" + v + "'");
  }
  c.channel.rngSeed = c.seed;

  if (run) {
    if (lhas("preset")) run->preset = l.values.at("preset");
    if (lhas("threads")) run->threads = parseNumber<int>(l, "threads");
    if (lhas("out_dir")) run->outDir = l.values.at("out_dir");
    if (lhas("dump_debug")) run->dumpDebug = parseBool(l, "dump_debug");
    if (lhas("plot")) run->writePlot = parseBool(l, "plot");
    if (run->threads < 1) bad(l, "threads", "must be at least 1");
  }

  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

std::vector<std::string> presetNames() {
  return {"fig4", "fig5", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13"};
}

ExperimentPreset makePreset(const std::string& name, const SimConfig& base, std::optional<int> overrideN) {
  ExperimentPreset p;
  p.name = name;
  SimConfig b = base;
  b.N = overrideN.value_or(100);
  const int m2 = b.channel.mT * b.channel.mT;

  auto learningCases = [&](std::initializer_list<std::optional<int>> bs, bool withRandom) {
    for (const auto& B : bs) {
      p.cases.push_back(makeCase(with(b, Scheme::Quantization, B)));
      if (B) p.cases.push_back(makeCase(with(b, Scheme::Comparison, B)));
    }
    if (withRandom) p.cases.push_back(makeCase(with(b, Scheme::RandomBeam, 2)));
  };

  if (name == "fig4" || name == "fig7") {
    learningCases({1, 2}, name == "fig7");
    p.title = name == "fig4" ? "Normalized error versus N, B = 1 and 2" : "Beamforming gain versus N, B = 1 and 2";
    p.plotsGain = name == "fig7";
    p.plotsError = name == "fig4";
  } else if (name == "fig5" || name == "fig8") {
    learningCases({4, 10, std::nullopt}, name == "fig8");
    p.title = name == "fig5" ? "Normalized error versus N, B = 4, 10 and inf"
                             : "Beamforming gain versus N, B = 4, 10 and inf";
    p.plotsGain = name == "fig8";
    p.plotsError = name == "fig5";
  } else if (name == "fig9") {
    p.axis = SweepAxis::B;
    b.N = overrideN.value_or(15);
    for (int B = 1; B <= 10; ++B) {
      p.cases.push_back(makeCase(with(b, Scheme::Quantization, B)));
      p.cases.push_back(makeCase(with(b, Scheme::Comparison, B)));
    }
    p.grid = {std::min(10, b.N), b.N};
    p.grid.erase(std::unique(p.grid.begin(), p.grid.end()), p.grid.end());
    p.title = "Beamforming gain versus B";
    p.plotsError = false;
  } else if (name == "fig10" || name == "fig11") {
    for (std::optional<int> keep : {std::optional<int>{}, std::optional<int>{2 * m2}, std::optional<int>{3 * m2}}) {
      SimConfig c = with(b, Scheme::Quantization, 2);
      c.pruneKeep = keep;
      p.cases.push_back(makeCase(c));
    }
    p.title = name == "fig10" ? "Normalized error with cutting plane pruning"
                              : "Beamforming gain with cutting plane pruning";
    p.plotsGain = name == "fig11";
    p.plotsError = name == "fig10";
  } else if (name == "fig12" || name == "fig13") {
    for (Scheme s : {Scheme::Quantization, Scheme::Comparison}) {
      p.cases.push_back(makeCase(with(b, s, 2)));
      SimConfig noisy = with(b, s, 2);
      noisy.alpha = 0.01;
      p.cases.push_back(makeCase(noisy));
      noisy.robust = true;
      p.cases.push_back(makeCase(noisy));
    }
    p.title = name == "fig12" ? "Normalized error under measurement errors"
                              : "Beamforming gain under measurement errors";
    p.plotsGain = name == "fig13";
    p.plotsError = name == "fig12";
  } else {
    std::string names;
    for (const auto& n : presetNames()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + names + ")");
  }
  if (p.grid.empty()) p.grid = rangeGrid(b.N);
  return p;
}

ExperimentPreset customPreset(const SimConfig& config) {
  ExperimentPreset p;
  p.name = "custom";
  p.title = std::string(schemeName(config.scheme)) + " run";
  p.cases.push_back(makeCase(config));
  p.grid = rangeGrid(config.N);
  p.plotsError = config.scheme != Scheme::RandomBeam;
  return p;
}

std::string formatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void writeCsv(std::ostream& out, const std::vector<CaseResult>& cases) {
  out << "scheme,B,N,metric,mean,stderr,trials\n";
  auto emit = [&](const CaseResult& r, const char* metric, const std::vector<CurvePoint>& pts) {
    for (const auto& p : pts) {
      out << r.experimentCase.label << ',' << bLabel(r.experimentCase.config) << ',' << p.N << ',' << metric << ','
          << formatNumber(p.mean) << ',' << formatNumber(p.stdError) << ',' << p.trials << '\n';
    }
  };
  for (const auto& r : cases) {
    emit(r, "norm_error", r.aggregate.normError);
    emit(r, "gain_db", r.aggregate.gainDb);
  }
}

void writePlotScript(std::ostream& out, const ExperimentPreset& preset, const std::string& csvName) {
  out << "# gnuplot script; run from the directory holding " << csvName << "\n";
  out << "set datafile separator ','\n";
  out << "set key outside right\n";
  out << "set grid\n";
  const std::string stem = csvName.substr(0, csvName.rfind('.'));

  auto series = [&](const char* metric, int xcol) {
    std::string cmd;
    for (const auto& c : preset.cases) {
      const std::string b = bLabel(c.config);
      if (preset.axis == SweepAxis::B) continue;
      if (!cmd.empty()) cmd += ", \\\n     ";
      cmd += "'< grep \"^" + c.label + "," + b + ",[0-9]*," + metric + ",\" " + csvName + "' using " +
             std::to_string(xcol) + ":5 with lines title '" + c.label + " B=" + b + "'";
    }
    if (preset.axis == SweepAxis::B) {
      for (const char* scheme : {"quantization", "comparison"}) {
        for (int n : preset.grid) {
          if (!cmd.empty()) cmd += ", \\\n     ";
          cmd += "'< grep \"^" + std::string(scheme) + ",[0-9]*," + std::to_string(n) + "," + metric + ",\" " +
                 csvName + "' using 2:5 with linespoints title '" + scheme + " N=" + std::to_string(n) + "'";
        }
      }
    }
    return cmd;
  };

  const std::string xlabel = preset.axis == SweepAxis::B ? "B (feedback bits per interval)" : "N (feedback intervals)";
  if (preset.plotsError) {
    out << "\nset terminal pngcairo size 900,600\n";
    out << "set output '" << stem << "_error.png'\n";
    out << "set title '" << preset.title << "'\n";
    out << "set xlabel '" << xlabel << "'\nset ylabel 'normalized error'\nset logscale y\n";
    out << "plot " << series("norm_error", 3) << "\n";
    out << "unset logscale y\n";
  }
  if (preset.plotsGain) {
    out << "\nset terminal pngcairo size 900,600\n";
    out << "set output '" << stem << "_gain.png'\n";
    out << "set title '" << preset.title << "'\n";
    out << "set xlabel '" << xlabel << "'\nset ylabel 'beamforming gain (dB)'\n";
    out << "plot " << series("gain_db", 3) << "\n";
  }
}

ExperimentResult runExperiment(const ExperimentPreset& preset, const RunOptions& run) {
  if (preset.cases.empty()) throw ConfigError("preset has no cases");
  ExperimentResult result;
  result.preset = preset;
  const std::uint64_t seed = preset.cases.front().config.seed;
  const std::string stem = preset.name + "_" + std::to_string(seed);

  std::error_code ec;
  std::filesystem::create_directories(run.outDir, ec);
  if (ec) throw IoError("cannot create output directory " + run.outDir.string() + ": " + ec.message());

  std::ofstream debug;
  if (run.dumpDebug) {
    result.debug = run.outDir / (stem + "_debug.jsonl");
    debug.open(*result.debug);
    if (!debug) throw IoError("cannot write " + result.debug->string());
  }

  for (const auto& c : preset.cases) {
    const std::vector<TrialRecord> records = runMonteCarlo(c.config, run.threads);
    CaseResult r{c, aggregate(records, preset.grid), 0.0};
    int ok = 0;
    for (const auto& rec : records) {
      if (rec.failed) continue;
      r.chiStarDb += rec.chiStarDb;
      ++ok;
    }
    r.chiStarDb /= std::max(ok, 1);
    result.failedTrials += r.aggregate.failedTrials;
    if (debug.is_open()) {
      for (const auto& rec : records) {
        for (const auto& ir : rec.intervals) debug << intervalJson(c.label, rec, ir).dump() << '\n';
      }
    }
    result.cases.push_back(std::move(r));
  }

  result.csv = run.outDir / (stem + ".csv");
  std::ofstream csv(result.csv, std::ios::binary);
  if (!csv) throw IoError("cannot write " + result.csv.string());
  writeCsv(csv, result.cases);
  if (!csv) throw IoError("failed writing " + result.csv.string());

  if (run.writePlot) {
    result.plot = run.outDir / (stem + ".gp");
    std::ofstream gp(*result.plot, std::ios::binary);
    if (!gp) throw IoError("cannot write " + result.plot->string());
    writePlotScript(gp, preset, result.csv.filename().string());
  }
  return result;
}

}  // namespace wet
