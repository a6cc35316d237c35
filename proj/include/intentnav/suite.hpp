#pragma once

#include "intentnav/closed_loop.hpp"
#include "intentnav/prediction_eval.hpp"
#include "intentnav/report.hpp"
#include "intentnav/scenario.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace intentnav {

struct SuiteEntry {
  std::string name;
  Scenario scenario;
  std::vector<Variant> variants;
};

struct SuiteEvalEntry {
  Scenario scenario;
  int seeds = 10;
};

/// A benchmark suite: closed-loop entries compared against a baseline
/// variant, plus optional prediction-error evaluations. Scenario paths are
/// relative to the suite file.
struct Suite {
  std::string baseline = "no-pred";
  int seeds = 20;
  int ticks = -1;  // -1 keeps each scenario's own limit
  std::vector<SuiteEntry> entries;
  std::vector<SuiteEvalEntry> evals;
};

inline Suite loadSuite(const std::string& path) {
  const auto j = parseJsonText(readTextFile(path), path);
  const auto dir = std::filesystem::path(path).parent_path();
  Suite suite;
  try {
    if (j.value("schema", std::string("intentnav.suite/1")) != "intentnav.suite/1") {
      throw ScenarioError(path + ": unsupported suite schema");
    }
    suite.baseline = j.value("baseline", suite.baseline);
    parseVariant(suite.baseline);
    suite.seeds = j.value("seeds", suite.seeds);
    suite.ticks = j.value("ticks", suite.ticks);
    for (const auto& e : j.value("entries", nlohmann::json::array())) {
      SuiteEntry entry;
      entry.scenario = loadScenario((dir / e.at("scenario").get<std::string>()).string());
      entry.name = e.value("name", entry.scenario.name);
      entry.scenario.name = entry.name;
      for (const auto& v : e.value("variants", nlohmann::json::array({"full", "no-pred", "no-safety", "reactive"}))) {
        entry.variants.push_back(parseVariant(v.get<std::string>()));
      }
      suite.entries.push_back(std::move(entry));
    }
    for (const auto& e : j.value("evalpred", nlohmann::json::array())) {
      SuiteEvalEntry entry;
      entry.scenario = loadScenario((dir / e.at("scenario").get<std::string>()).string());
      entry.seeds = e.value("seeds", entry.seeds);
      suite.evals.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(path + ": suite field error: " + e.what());
  }
  return suite;
}

using ProgressFn = std::function<void(const RunTrace&)>;

/// Runs every (entry, variant, seed) with seeds 1..seeds, then the
/// prediction evaluations, and aggregates the report.
inline MetricsReport runSuite(const Suite& suite, int seeds, const ProgressFn& progress = {}) {
  std::vector<RunTrace> traces;
  for (const auto& entry : suite.entries) {
    for (Variant v : entry.variants) {
      for (int s = 1; s <= seeds; ++s) {
        RunTrace t = runScenario(entry.scenario, static_cast<std::uint64_t>(s), v, TraceLevel::kNone, suite.ticks);
        if (progress) progress(t);
        t.frames.clear();
        t.frames.shrink_to_fit();
        traces.push_back(std::move(t));
      }
    }
  }
  std::vector<PredictionClassStats> prediction;
  for (const auto& e : suite.evals) {
    for (auto& c : evalPrediction(e.scenario, e.seeds)) prediction.push_back(std::move(c));
  }
  return report(traces, suite.baseline, std::move(prediction));
}

}  // namespace intentnav
