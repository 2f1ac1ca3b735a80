// SPDX-License-Identifier: Apache-2.0
//
// wetlearn: run channel-learning experiments and emit CSV curves.
//
//   wetlearn --preset fig7 --trials 50 --seed 1 --out-dir results
//   wetlearn --scheme comparison --B 1 --N 100
//   wetlearn --config run.cfg --threads 4
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "wetlearn/errors.hpp"
#include "wetlearn/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-feedback MIMO channel learning simulator"};
  app.option_defaults()->always_capture_default(false);

  std::string config;
  std::optional<std::string> preset, scheme, bits, outDir, relax;
  std::optional<int> n, trials, pruneKeep, threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  bool dumpDebug = false, robust = false, listPresets = false, noPlot = false;

  app.add_option("--config", config, "key=value settings file (flags override it)");
  app.add_option("--preset", preset, "figure preset (fig4, fig5, fig7 ... fig13)");
  app.add_option("--scheme", scheme, "quantization, comparison or random");
  app.add_option("--B", bits, "feedback bits per interval, or inf");
  app.add_option("--N", n, "number of feedback intervals");
  app.add_option("--trials", trials, "Monte-Carlo trials");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--alpha", alpha, "relative energy measurement error bound");
  app.add_option("--prune-keep", pruneKeep, "keep at most this many cutting planes (0 = off)");
  app.add_option("--threads", threads, "worker threads (default: hardware concurrency)");
  app.add_option("--out-dir", outDir, "output directory");
  app.add_option("--relax-cadence", relax, "robust relaxation cadence: every or on-demand");
  app.add_flag("--robust", robust, "relax inconsistent cutting planes");
  app.add_flag("--dump-debug", dumpDebug, "write per-interval JSON lines");
  app.add_flag("--no-plot", noPlot, "skip the gnuplot script");
  app.add_flag("--list-presets", listPresets, "print preset names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (listPresets) {
    for (const auto& name : wet::presetNames()) std::cout << name << '\n';
    return 0;
  }

  try {
    wet::Settings settings;
    if (!config.empty()) {
      try {
        settings = wet::readSettingsFile(config);
      } catch (const wet::IoError& e) {
        throw wet::ConfigError(e.what());
      }
    }
    auto flag = [&](const char* key, const char* name, const std::optional<std::string>& v) {
      if (v) settings.set(key, *v, std::string("--") + name);
    };
    auto num = [&](const char* key, const char* name, const auto& v) {
      if (v) settings.set(key, std::to_string(*v), std::string("--") + name);
    };
    flag("preset", "preset", preset);
    flag("scheme", "scheme", scheme);
    flag("b", "B", bits);
    flag("out_dir", "out-dir", outDir);
    flag("relax_cadence", "relax-cadence", relax);
    num("n", "N", n);
    num("trials", "trials", trials);
    num("seed", "seed", seed);
    num("prune_keep", "prune-keep", pruneKeep);
    num("threads", "threads", threads);
    if (alpha) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", *alpha);
      settings.set("alpha", buf, "--alpha");
    }
    if (robust) settings.set("robust", "true", "--robust");
    if (dumpDebug) settings.set("dump_debug", "true", "--dump-debug");
    if (noPlot) settings.set("plot", "false", "--no-plot");

    wet::RunOptions run;
    run.threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    const wet::SimConfig cfg = wet::resolveConfig(settings, &run);

    wet::ExperimentPreset experiment;
    if (run.preset) {
      for (const char* key : {"scheme", "b", "alpha", "prune_keep", "robust"}) {
        if (settings.has(key)) {
          throw wet::ConfigError(settings.origin.at(key) + ": " + key + " cannot be combined with a preset");
        }
      }
      experiment = wet::makePreset(*run.preset, cfg, settings.has("n") ? std::optional<int>(cfg.N) : std::nullopt);
    } else {
      experiment = wet::customPreset(cfg);
    }

    const wet::ExperimentResult result = wet::runExperiment(experiment, run);
    std::cout << "wrote " << result.csv.string() << '\n';
    if (result.plot) std::cout << "wrote " << result.plot->string() << '\n';
    if (result.debug) std::cout << "wrote " << result.debug->string() << '\n';
    if (result.failedTrials > 0) {
      std::cout << result.failedTrials << " trial(s) failed with an empty working set and were excluded\n";
    }
    return 0;
  } catch (const wet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
