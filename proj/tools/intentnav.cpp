// Command-line front end: closed-loop runs, benchmark suites and prediction
// error evaluation.

#include "intentnav/closed_loop.hpp"
#include "intentnav/prediction_eval.hpp"
#include "intentnav/report.hpp"
#include "intentnav/scenario.hpp"
#include "intentnav/suite.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

void writeFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw intentnav::ScenarioError("cannot write '" + path.string() + "'");
  out << text;
}

int cmdRun(const std::string& scenarioPath, std::uint64_t seed, const std::string& variantName, int ticks,
           const std::string& outPath, bool summaryOnly) {
  using namespace intentnav;
  const Scenario scenario = loadScenario(scenarioPath);
  const Variant variant = parseVariant(variantName);
  const auto level = summaryOnly ? TraceLevel::kSummary : TraceLevel::kFull;
  const RunTrace trace = runScenario(scenario, seed, variant, level, ticks);
  if (!outPath.empty()) writeTrace(trace, scenario, outPath);
  const RunTrace* one = &trace;
  std::cout << toText(report(std::span<const RunTrace>(one, 1), std::string(variantName)));
  std::cout << "ticks " << trace.ticks << (trace.reachedGoal ? ", goal reached" : ", timeout") << '\n';
  return 0;
}

int cmdBench(const std::string& suitePath, int seeds, const std::string& outDir) {
  using namespace intentnav;
  const Suite suite = loadSuite(suitePath);
  const int n = seeds > 0 ? seeds : suite.seeds;
  const MetricsReport r = runSuite(suite, n, [](const RunTrace& t) {
    std::cerr << t.scenario << " " << variantName(t.variant) << " seed " << t.seed << ": " << t.collisions
              << " collisions, " << t.ticks << " ticks" << (t.timedOut ? " (timeout)" : "") << '\n';
  });
  std::filesystem::create_directories(outDir);
  const std::filesystem::path dir(outDir);
  writeFile(dir / "summary.json", toJson(r).dump(2) + "\n");
  writeFile(dir / "summary.txt", toText(r, false));
  writeFile(dir / "timing.json", timingJson(r).dump(2) + "\n");
  std::cout << toText(r, true);
  return 0;
}

int cmdEvalpred(const std::string& scenarioPath, int seeds) {
  using namespace intentnav;
  MetricsReport r;
  r.baseline = "-";
  r.prediction = evalPrediction(scenarioPath, seeds);
  std::cout << toText(r, false);
  std::cout << toJson(r)["prediction"].dump(2) << '\n';
  for (const auto& c : r.prediction) {
    if (c.lowSample) std::cerr << "warning: " << c.scenarioClass << " has only " << c.events << " events (low-sample)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intent-prediction MPC navigation simulator and benchmark"};
  app.require_subcommand(1);
  app.footer(
      "Numeric parameters can be overridden through the environment: INTENTNAV_<KEY> with the dotted key\n"
      "upper-cased and dots replaced by underscores, e.g. INTENTNAV_MPC_LAMBDAU=0.2 or INTENTNAV_WEIGHTS_LAMBDA3=0.\n"
      "Use `intentnav params` to list the keys.");

  std::string scenario, variant = "full", out, suite;
  std::uint64_t seed = 1;
  int ticks = -1;
  int seeds = 0;
  int evalSeeds = 10;
  bool summaryOnly = false;

  auto* run = app.add_subcommand("run", "Closed-loop run of one scenario");
  run->add_option("--scenario", scenario, "Scenario JSON")->required();
  run->add_option("--seed", seed, "Seed");
  run->add_option("--variant", variant, "full | no-pred | no-safety | reactive");
  run->add_option("--ticks", ticks, "Tick limit (default: scenario value)");
  run->add_option("--out", out, "NDJSON trace output");
  run->add_flag("--summary-trace", summaryOnly, "Write compact per-tick records");

  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("--suite", suite, "Suite JSON")->required();
  bench->add_option("--seeds", seeds, "Seeds per entry (default: suite value)");
  bench->add_option("--out", out, "Output directory")->required();

  auto* evalpred = app.add_subcommand("evalpred", "Prediction ADE/FDE evaluation");
  evalpred->add_option("--scenario", scenario, "Scenario JSON")->required();
  evalpred->add_option("--seeds", evalSeeds, "Number of seeds");

  auto* params = app.add_subcommand("params", "List tunable parameter keys and environment names");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmdRun(scenario, seed, variant, ticks, out, summaryOnly);
    if (*bench) return cmdBench(suite, seeds, out);
    if (*evalpred) return cmdEvalpred(scenario, evalSeeds);
    if (*params) {
      const auto& reg = intentnav::ParamRegistry::instance();
      for (const auto& k : reg.keys()) std::cout << k << "  " << intentnav::ParamRegistry::envName(k) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
