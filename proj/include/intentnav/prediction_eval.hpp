#pragma once

#include "intentnav/intent.hpp"
#include "intentnav/scenario.hpp"
#include "intentnav/tracker.hpp"
#include "intentnav/trajectory_prediction.hpp"
#include "intentnav/world.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace intentnav {

struct DisplacementError {
  double ade = 0.0;
  double fde = 0.0;
};

inline DisplacementError displacementError(std::span<const Vec3> predicted, std::span<const Vec3> truth) {
  DisplacementError e;
  const std::size_t n = std::min(predicted.size(), truth.size());
  if (n == 0) return e;
  for (std::size_t i = 0; i < n; ++i) e.ade += (predicted[i] - truth[i]).head<2>().norm();
  e.ade /= static_cast<double>(n);
  e.fde = (predicted[n - 1] - truth[n - 1]).head<2>().norm();
  return e;
}

/// Mean ADE/FDE of both predictors over one scenario class.
struct PredictionClassStats {
  std::string scenario;
  std::string scenarioClass;  // "with-static" or "without-static"
  int events = 0;
  double linearAde = 0.0;
  double linearFde = 0.0;
  double intentAde = 0.0;
  double intentFde = 0.0;
  std::array<int, 4> chosenIntent{};  // how often each intent was closest to the truth
  bool lowSample = true;
};

struct PredictionEvalOptions {
  int eventStride = 10;   // ticks between sampled events per agent
  int minIntentSteps = 3; // intent updates a track needs before it is sampled
  int minEvents = 100;
};

namespace detail {

inline void accumulatePrediction(const WorldConfig& cfg, const IntentParams& intent, const TrackerParams& trackerParams,
                                 int ticks, const PredictionEvalOptions& opts, PredictionClassStats& stats) {
  WorldState world = WorldState::initial(cfg);
  const double dt = cfg.tickDt;
  const int horizonTicks = static_cast<int>(std::lround(intent.nPred * intent.predDt / dt));
  const auto stepOf = [&](int i) { return static_cast<int>(std::lround((i + 1) * intent.predDt / dt)); };

  // Ground truth for every agent at every tick, including the final horizon.
  std::vector<std::vector<Vec3>> truth;
  {
    WorldState w = world;
    for (int t = 0; t <= ticks + horizonTicks; ++t) {
      std::vector<Vec3> row;
      for (const auto& a : w.agents) row.push_back(a.pos);
      truth.push_back(std::move(row));
      w = stepWorld(std::move(w), dt);
    }
  }

  Tracker tracker(trackerParams);
  const double heading = headingOf(cfg.robotGoal - cfg.robotStart);
  const std::span<const StaticBox> boxes = cfg.staticBoxes;
  for (int tick = 0; tick < ticks; ++tick) {
    const auto dets = senseDetections(world, world.robot, heading);
    tracker.update(dets, world.time, tick == 0 ? 0.0 : dt,
                   [&](const Vec3& p) { return inFieldOfView(cfg.sensor, world.robot.p, heading, p); });
    for (auto& t : tracker.mutableTracks()) {
      if (t.matched) updateTrackIntent(t, intent);
    }
    if (tick > 0 && tick % opts.eventStride == 0) {
      for (const auto& t : tracker.tracks()) {
        if (!t.matched || !t.dynamic || t.intentSteps < opts.minIntentSteps) continue;
        if (static_cast<int>(t.history.size()) < intent.minHistory) continue;
        if (t.lastSourceId < 0 || t.lastSourceId >= static_cast<int>(cfg.agents.size())) continue;
        const auto agent = static_cast<std::size_t>(t.lastSourceId);
        std::vector<Vec3> gt;
        for (int i = 0; i < intent.nPred; ++i) gt.push_back(truth[static_cast<std::size_t>(tick + stepOf(i))][agent]);

        const auto linear = linearExtrapolation(t, intent.nPred, intent.predDt);
        const auto preds = predictTrajectories(t, boxes, intent);
        DisplacementError best{std::numeric_limits<double>::infinity(), 0.0};
        int bestIntent = 0;
        for (int k = 0; k < 4; ++k) {
          const auto e = displacementError(preds.byIntent[static_cast<std::size_t>(k)].positions, gt);
          if (e.ade < best.ade) {
            best = e;
            bestIntent = k;
          }
        }
        const auto lin = displacementError(linear, gt);
        stats.events += 1;
        stats.linearAde += lin.ade;
        stats.linearFde += lin.fde;
        stats.intentAde += best.ade;
        stats.intentFde += best.fde;
        stats.chosenIntent[static_cast<std::size_t>(bestIntent)] += 1;
      }
    }
    world = stepWorld(std::move(world), dt);
  }
}

}  // namespace detail

/// ADE/FDE of constant-velocity extrapolation and best-of-4 intent prediction
/// against simulator truth. The robot stays at its start and watches. A
/// scenario with static obstacles is also evaluated with them removed
/// (same agents, predictor without a map), giving both scenario classes.
inline std::vector<PredictionClassStats> evalPrediction(const Scenario& scenario, int seeds,
                                                        const PredictionEvalOptions& opts = {}) {
  const IntentParams& intent = scenario.run.planner.intent;
  const TrackerParams& trackerParams = scenario.run.planner.tracker;
  const int ticks = scenario.run.maxTicks;

  PredictionClassStats withStatic{scenario.name, "with-static"};
  PredictionClassStats without{scenario.name, "without-static"};
  bool anyStatic = false;
  for (int s = 1; s <= seeds; ++s) {
    WorldConfig cfg = instantiate(scenario, static_cast<std::uint64_t>(s));
    if (!cfg.staticBoxes.empty()) {
      anyStatic = true;
      detail::accumulatePrediction(cfg, intent, trackerParams, ticks, opts, withStatic);
      cfg.staticBoxes.clear();
    }
    detail::accumulatePrediction(cfg, intent, trackerParams, ticks, opts, without);
  }
  std::vector<PredictionClassStats> out;
  if (anyStatic) out.push_back(withStatic);
  out.push_back(without);
  for (auto& c : out) {
    if (c.events > 0) {
      const double n = c.events;
      c.linearAde /= n;
      c.linearFde /= n;
      c.intentAde /= n;
      c.intentFde /= n;
    }
    c.lowSample = c.events < opts.minEvents;
  }
  return out;
}

inline std::vector<PredictionClassStats> evalPrediction(const std::string& configPath, int seeds,
                                                        const PredictionEvalOptions& opts = {}) {
  return evalPrediction(loadScenario(configPath), seeds, opts);
}

}  // namespace intentnav
