#pragma once

#include "intentnav/intent.hpp"
#include "intentnav/intent_planner.hpp"
#include "intentnav/occupancy.hpp"
#include "intentnav/reference.hpp"
#include "intentnav/scenario.hpp"
#include "intentnav/tracker.hpp"
#include "intentnav/world.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace intentnav {

enum class Variant { kFull, kNoPred, kNoSafety, kReactive };

inline constexpr std::array<Variant, 4> kAllVariants = {Variant::kFull, Variant::kNoPred, Variant::kNoSafety,
                                                         Variant::kReactive};

inline std::string_view variantName(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoPred: return "no-pred";
    case Variant::kNoSafety: return "no-safety";
    case Variant::kReactive: return "reactive";
  }
  return "?";
}

inline Variant parseVariant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (variantName(v) == name) return v;
  }
  throw ScenarioError("unknown variant '" + std::string(name) + "' (expected full, no-pred, no-safety or reactive)");
}

/// Planner parameters for a variant, derived from the scenario defaults.
inline PlannerParams plannerFor(const RunSettings& run, Variant v) {
  PlannerParams p = run.planner;
  p.robotRadius = run.robotRadius;
  switch (v) {
    case Variant::kFull: p.mode = PredictionMode::kIntent; break;
    case Variant::kNoPred: p.mode = PredictionMode::kHoldPosition; break;
    case Variant::kNoSafety:
      p.mode = PredictionMode::kIntent;
      p.weights.lambda3 = 0.0;
      break;
    case Variant::kReactive: p.mode = PredictionMode::kReactive; break;
  }
  return p;
}

enum class TraceLevel { kNone, kSummary, kFull };

inline constexpr std::array<std::string_view, 4> kStageNames = {"perception", "clustering", "prediction", "planning"};

/// Wall-clock milliseconds per tick for each stage, in kStageNames order.
struct StageTimes {
  std::array<std::vector<double>, 4> ms;
  std::vector<double> mpcSolveMs;  // planning time divided by the number of solves
};

struct RunTrace {
  std::string scenario;
  std::uint64_t seed = 0;
  Variant variant = Variant::kFull;
  std::vector<nlohmann::json> records;  // one per tick when tracing is enabled
  std::vector<ContactFrame> frames;     // initial state plus one per tick
  std::vector<Vec3> commands;
  int ticks = 0;
  bool reachedGoal = false;
  bool timedOut = false;
  int collisions = 0;
  int infeasibleTicks = 0;
  double pathLength = 0.0;
  StageTimes timing;
};

namespace detail {

inline nlohmann::json vecJson(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline nlohmann::json distJson(const IntentDistribution& d) { return {d.p[0], d.p[1], d.p[2], d.p[3]}; }

inline nlohmann::json tickRecord(const WorldState& world, std::span<const Detection> dets, std::span<const Track> tracks,
                                 const PlanningOutcome& outcome, const Vec3& command, TraceLevel level) {
  using nlohmann::json;
  json r;
  r["schema"] = "intentnav.trace/1";
  r["tick"] = world.tick;
  r["time"] = world.time;
  r["robot"] = {{"p", vecJson(world.robot.p)}, {"v", vecJson(world.robot.v)}};
  r["command"] = vecJson(command);
  r["selected"] = {{"index", outcome.selectedIndex ? json(*outcome.selectedIndex) : json(nullptr)},
                   {"feasible", outcome.selected.feasible},
                   {"firstControl", vecJson(outcome.selected.controls.empty() ? Vec3::Zero() : outcome.selected.controls[0])}};
  if (level != TraceLevel::kFull) return r;

  json agents = json::array();
  for (const auto& a : world.agents) agents.push_back({{"p", vecJson(a.pos)}, {"v", vecJson(a.vel)}});
  r["agents"] = std::move(agents);

  json detections = json::array();
  for (const auto& d : dets) {
    detections.push_back({{"p", vecJson(d.pos)}, {"dim", vecJson(d.dim)}, {"cloudLen", d.cloudLen}, {"cloudStd", d.cloudStd}});
  }
  r["detections"] = std::move(detections);

  json trackArr = json::array();
  for (const auto& t : tracks) {
    json tj = {{"id", t.id},
               {"p", vecJson(t.kf.pos())},
               {"v", vecJson(t.kf.vel())},
               {"a", vecJson(t.kf.acc())},
               {"riskSize", vecJson(t.riskSize)},
               {"inView", t.inView},
               {"matched", t.matched},
               {"dynamic", t.dynamic}};
    if (t.intentSteps > 0) tj["intent"] = distJson(t.intent);
    trackArr.push_back(std::move(tj));
  }
  r["tracks"] = std::move(trackArr);

  json obstacles = json::array();
  for (const auto& o : outcome.obstacles) {
    json preds = json::array();
    for (const auto& p : o.predictions.byIntent) {
      json pos = json::array();
      json risk = json::array();
      for (const auto& x : p.positions) pos.push_back(vecJson(x));
      for (const auto& x : p.riskSizes) risk.push_back(vecJson(x));
      preds.push_back({{"intent", intentName(p.intent)}, {"positions", pos}, {"riskSizes", risk}});
    }
    obstacles.push_back({{"track", o.trackId}, {"intent", distJson(o.dist)}, {"predictions", preds}});
  }
  r["obstacles"] = std::move(obstacles);

  json boxes = json::array();
  for (const auto& b : outcome.staticBoxes) {
    boxes.push_back({{"center", vecJson(b.center)}, {"halfExtents", vecJson(b.halfExtents)}, {"yaw", b.yaw}});
  }
  r["staticBoxes"] = std::move(boxes);

  json candidates = json::array();
  for (const auto& c : outcome.candidates) {
    json intents = json::array();
    for (Intent i : c.combination.intents) intents.push_back(intentName(i));
    candidates.push_back({{"intents", intents},
                          {"prob", c.combination.prob},
                          {"feasible", c.plan.feasible},
                          {"minResidual", c.plan.minResidual},
                          {"scores",
                           {{"consistency", c.plan.scoreBreakdown.consistency},
                            {"detour", c.plan.scoreBreakdown.detour},
                            {"safety", c.plan.scoreBreakdown.safety}}},
                          {"raw", c.plan.rawScore},
                          {"final", c.plan.finalScore}});
  }
  r["candidates"] = std::move(candidates);

  json positions = json::array();
  json controls = json::array();
  for (const auto& s : outcome.selected.states) positions.push_back(vecJson(s.p));
  for (const auto& u : outcome.selected.controls) controls.push_back(vecJson(u));
  r["selected"]["positions"] = std::move(positions);
  r["selected"]["controls"] = std::move(controls);
  return r;
}

inline double msSince(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Closed-loop simulation of one (scenario, seed, variant) until the goal is
/// reached or `maxTicks` elapse. The robot senses, tracks, plans and applies
/// the first control of the selected plan every tick.
inline RunTrace runScenario(const Scenario& scenario, std::uint64_t seed, Variant variant,
                            TraceLevel level = TraceLevel::kNone, int maxTicks = -1) {
  using Clock = std::chrono::steady_clock;
  const RunSettings& run = scenario.run;
  const PlannerParams params = plannerFor(run, variant);
  WorldState world = WorldState::initial(instantiate(scenario, seed));
  const WorldConfig& cfg = *world.config;
  const double dt = cfg.tickDt;
  const int tickLimit = maxTicks > 0 ? maxTicks : run.maxTicks;

  const OccupancyGrid grid = OccupancyGrid::fromBoxes(cfg.mapExtent, run.mapResolution, cfg.staticBoxes);
  const double cruise = std::min(cfg.robotMaxVelocity, run.cruiseSpeed);
  const ReferencePath path({cfg.robotStart, cfg.robotGoal}, cruise);
  Tracker tracker(params.tracker);

  RunTrace trace;
  trace.scenario = scenario.name;
  trace.seed = seed;
  trace.variant = variant;
  trace.frames.push_back({world.robot.p, world.obstacleBoxes()});

  std::optional<PreviousPlan> prev;
  const auto elapsedSteps = static_cast<std::size_t>(std::max(1L, std::lround(dt / params.mpc.dt)));
  for (int tick = 0; tick < tickLimit; ++tick) {
    const Vec2 vel = world.robot.v.head<2>();
    const double heading = vel.norm() > 0.2 ? std::atan2(vel.y(), vel.x()) : headingOf(cfg.robotGoal - world.robot.p);

    auto t0 = Clock::now();
    const auto dets = senseDetections(world, world.robot, heading);
    const Vec3 robotPos = world.robot.p;
    tracker.update(dets, world.time, tick == 0 ? 0.0 : dt,
                   [&](const Vec3& p) { return inFieldOfView(cfg.sensor, robotPos, heading, p); });
    for (auto& t : tracker.mutableTracks()) {
      if (t.matched) updateTrackIntent(t, params.intent);
    }
    trace.timing.ms[0].push_back(detail::msSince(t0));

    t0 = Clock::now();
    auto boxes = clusterStaticObstacles(grid, world.robot.p, params.cluster);
    trace.timing.ms[1].push_back(detail::msSince(t0));

    t0 = Clock::now();
    auto obstacles = closeObstacles(world.robot, tracker.tracks(), boxes, params);
    trace.timing.ms[2].push_back(detail::msSince(t0));

    t0 = Clock::now();
    const auto ref = path.sample(world.robot.p, params.mpc.N, params.mpc.dt);
    const PlanningOutcome outcome =
        planWithObstacles(world.robot, ref, std::move(boxes), std::move(obstacles), params, prev ? &*prev : nullptr);
    const double planMs = detail::msSince(t0);
    trace.timing.ms[3].push_back(planMs);
    trace.timing.mpcSolveMs.push_back(planMs / static_cast<double>(std::max<std::size_t>(1, outcome.candidates.size())));

    const Vec3 command = outcome.selected.controls.empty() ? Vec3::Zero() : outcome.selected.controls.front();
    if (!outcome.selected.feasible) ++trace.infeasibleTicks;
    if (level != TraceLevel::kNone) {
      trace.records.push_back(detail::tickRecord(world, dets, tracker.tracks(), outcome, command, level));
    }
    trace.commands.push_back(command);

    PreviousPlan next;
    next.positions = positionsOf(outcome.selected.states);
    next.controls = outcome.selected.controls;
    next.elapsedSteps = elapsedSteps;
    prev = std::move(next);

    const Vec3 before = world.robot.p;
    world.commandedAccel = command;
    world = stepWorld(std::move(world), dt);
    trace.pathLength += (world.robot.p - before).norm();
    trace.frames.push_back({world.robot.p, world.obstacleBoxes()});
    trace.ticks = tick + 1;
    if ((world.robot.p - cfg.robotGoal).norm() <= run.goalTolerance) {
      trace.reachedGoal = true;
      break;
    }
  }
  trace.timedOut = !trace.reachedGoal;
  trace.collisions = collisionEvents(trace.frames, run.robotRadius);
  return trace;
}

inline RunTrace runScenario(const std::string& configPath, std::uint64_t seed, Variant variant,
                            TraceLevel level = TraceLevel::kNone, int maxTicks = -1) {
  return runScenario(loadScenario(configPath), seed, variant, level, maxTicks);
}

/// Header line, one record per tick, then a footer with the outcome.
inline void writeTrace(const RunTrace& trace, const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write '" + path + "'");
  nlohmann::json header = {{"schema", "intentnav.trace/1"},
                           {"kind", "header"},
                           {"scenario", trace.scenario},
                           {"seed", trace.seed},
                           {"variant", variantName(trace.variant)},
                           {"world", worldToJson(instantiate(scenario, trace.seed))}};
  out << header.dump() << '\n';
  for (const auto& r : trace.records) out << r.dump() << '\n';
  nlohmann::json footer = {{"schema", "intentnav.trace/1"},
                           {"kind", "footer"},
                           {"ticks", trace.ticks},
                           {"reachedGoal", trace.reachedGoal},
                           {"timedOut", trace.timedOut},
                           {"collisions", trace.collisions},
                           {"infeasibleTicks", trace.infeasibleTicks},
                           {"pathLength", trace.pathLength}};
  out << footer.dump() << '\n';
}

}  // namespace intentnav
