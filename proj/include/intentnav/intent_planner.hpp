#pragma once

#include "intentnav/combinations.hpp"
#include "intentnav/common.hpp"
#include "intentnav/ellipsoid.hpp"
#include "intentnav/mpc.hpp"
#include "intentnav/occupancy.hpp"
#include "intentnav/reference.hpp"
#include "intentnav/scoring.hpp"
#include "intentnav/static_clustering.hpp"
#include "intentnav/tracker.hpp"
#include "intentnav/trajectory_prediction.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace intentnav {

/// How obstacle futures enter the planner.
///  - kIntent: per-intent predictions, top combinations, scored selection.
///  - kHoldPosition: every obstacle held at its current position and size (no prediction).
///  - kReactive: like kHoldPosition, but only obstacles currently in view are used.
enum class PredictionMode { kIntent, kHoldPosition, kReactive };

struct PlannerParams {
  MpcParams mpc;
  ScoreWeights weights;
  IntentParams intent;
  ClusterParams cluster;
  TrackerParams tracker;
  int nIc = 4;
  double riskRadius = 5.0;
  double robotRadius = kDefaultRobotRadius;
  PredictionMode mode = PredictionMode::kIntent;
};

/// An obstacle the planner reasons about, with its future per intent.
struct PlannedObstacle {
  int trackId = -1;
  IntentDistribution dist;
  ObstacleKinematics kin;
  PredictionSet predictions;
};

struct PlanCandidate {
  IntentCombination combination;
  PlanResult plan;
};

struct PlanningOutcome {
  PlanResult selected;
  std::vector<PlanCandidate> candidates;
  std::optional<std::size_t> selectedIndex;  // empty when every candidate was infeasible
  std::vector<StaticBox> staticBoxes;
  std::vector<PlannedObstacle> obstacles;
};

/// Previous commanded plan, used for warm starting and the consistency score.
struct PreviousPlan {
  std::vector<Vec3> positions;
  std::vector<Vec3> controls;
  std::size_t elapsedSteps = 1;
};

/// Per-step ellipsoids on the MPC grid for one predicted obstacle path. Step 0
/// is the current position; after the prediction ends the position is held and
/// the risk size keeps its final growth rate.
inline std::vector<Ellipsoid> constraintTrack(const IntentPrediction& pred, const ObstacleKinematics& kin, int N,
                                              double dt, double predDt, double inflate) {
  std::vector<Ellipsoid> out;
  out.reserve(static_cast<std::size_t>(N) + 1);
  const std::size_t n = pred.positions.size();
  for (int k = 0; k <= N; ++k) {
    const double t = k * dt;
    Vec3 pos = kin.pos;
    Vec3 size = kin.size;
    if (n > 0 && t > 0.0) {
      const double idx = t / predDt - 1.0;  // fractional index into pred
      if (idx >= static_cast<double>(n - 1)) {
        pos = pred.positions[n - 1];
        size = pred.riskSizes[n - 1];
        if (n >= 2) size += (idx - static_cast<double>(n - 1)) * (pred.riskSizes[n - 1] - pred.riskSizes[n - 2]);
      } else if (idx < 0.0) {
        const double w = t / predDt;
        pos = (1.0 - w) * kin.pos + w * pred.positions[0];
        size = (1.0 - w) * kin.size + w * pred.riskSizes[0];
      } else {
        const auto i0 = static_cast<std::size_t>(std::floor(idx + 1e-9));
        const std::size_t i1 = std::min(i0 + 1, n - 1);
        const double w = std::clamp(idx - static_cast<double>(i0), 0.0, 1.0);
        pos = (1.0 - w) * pred.positions[i0] + w * pred.positions[i1];
        size = (1.0 - w) * pred.riskSizes[i0] + w * pred.riskSizes[i1];
      }
    }
    out.push_back(boxToEllipsoid(pos, size.array() + inflate, 0.0));
  }
  return out;
}

inline std::vector<Vec3> positionsOf(std::span<const RobotState> states) {
  std::vector<Vec3> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.p);
  return out;
}

/// Obstacles within the risk radius, with distributions and predictions
/// according to the planner mode.
inline std::vector<PlannedObstacle> closeObstacles(const RobotState& robot, std::span<const Track> tracks,
                                                   std::span<const StaticBox> staticBoxes, const PlannerParams& params) {
  std::vector<PlannedObstacle> out;
  for (const auto& t : tracks) {
    if (!t.confirmed(params.tracker)) continue;
    if ((t.kf.pos() - robot.p).head<2>().norm() > params.riskRadius) continue;
    if (params.mode == PredictionMode::kReactive && !t.matched) continue;
    PlannedObstacle o;
    o.trackId = t.id;
    o.kin = ObstacleKinematics::of(t);
    if (params.mode == PredictionMode::kIntent && t.dynamic) {
      o.dist = t.intent;
      o.predictions = predictTrajectories(t, staticBoxes, params.intent);
    } else {
      o.dist = IntentDistribution::certain(Intent::kStop);
      IntentPrediction hold;
      hold.intent = Intent::kStop;
      hold.positions.assign(static_cast<std::size_t>(params.intent.nPred), o.kin.pos);
      hold.riskSizes.assign(static_cast<std::size_t>(params.intent.nPred), o.kin.size);
      if (params.mode == PredictionMode::kIntent) hold = stopPrediction(o.kin, params.intent);
      for (Intent i : kAllIntents) {
        o.predictions.byIntent[static_cast<std::size_t>(index(i))] = hold;
        o.predictions.byIntent[static_cast<std::size_t>(index(i))].intent = i;
      }
    }
    out.push_back(std::move(o));
  }
  return out;
}

/// Dynamic constraints for one intent combination.
inline std::vector<std::vector<Ellipsoid>> dynamicConstraints(std::span<const PlannedObstacle> obstacles,
                                                              const IntentCombination& combo, const PlannerParams& params) {
  std::vector<std::vector<Ellipsoid>> out;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const auto& pred = obstacles[i].predictions[combo.intents[i]];
    out.push_back(constraintTrack(pred, obstacles[i].kin, params.mpc.N, params.mpc.dt, params.intent.predDt,
                                  params.robotRadius));
  }
  return out;
}

/// Scores one solved candidate. `safetyDynamic` holds obstacle centers of the
/// most likely combination on the MPC grid.
inline void scoreCandidate(PlanResult& plan, const ReferenceTrajectory& ref, const PreviousPlan* prev,
                           std::span<const Vec3> staticCenters, std::span<const std::vector<Vec3>> safetyDynamic,
                           const ScoreWeights& weights) {
  const auto traj = positionsOf(plan.states);
  const auto refPos = positionsOf(ref.states);
  std::vector<Vec3> prevPos;
  if (prev) prevPos = regridPrevious(prev->positions, prev->elapsedSteps, traj.size());
  plan.scoreBreakdown.consistency = consistencyScore(traj, prevPos, weights.scoreCap);
  plan.scoreBreakdown.detour = detourScore(traj, refPos, weights.scoreCap);
  plan.scoreBreakdown.safety = safetyScore(traj, staticCenters, safetyDynamic, weights.scoreCap);
  plan.rawScore = weights.lambda1 * plan.scoreBreakdown.consistency + weights.lambda2 * plan.scoreBreakdown.detour +
                  weights.lambda3 * plan.scoreBreakdown.safety;
  plan.finalScore = plan.combinationProb * plan.rawScore;
}

/// Index of the winning candidate: feasible first, then highest final score,
/// then higher combination probability, then lower index.
inline std::optional<std::size_t> selectCandidate(std::span<const PlanCandidate> candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i].plan;
    if (!c.feasible) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = candidates[*best].plan;
    if (c.finalScore > b.finalScore || (c.finalScore == b.finalScore && c.combinationProb > b.combinationProb)) best = i;
  }
  return best;
}

/// Plans against already-clustered static boxes and already-predicted obstacles.
inline PlanningOutcome planWithObstacles(const RobotState& robot, const ReferenceTrajectory& ref,
                                         std::vector<StaticBox> staticBoxes, std::vector<PlannedObstacle> obstacles,
                                         const PlannerParams& params, const PreviousPlan* prev = nullptr) {
  if (ref.states.size() != static_cast<std::size_t>(params.mpc.N) + 1) {
    throw std::invalid_argument("planIntentBased: reference trajectory missing or wrong length");
  }
  PlanningOutcome outcome;
  outcome.staticBoxes = std::move(staticBoxes);
  outcome.obstacles = std::move(obstacles);

  std::vector<IntentDistribution> dists;
  for (const auto& o : outcome.obstacles) dists.push_back(o.dist);
  const int nIc = params.mode == PredictionMode::kIntent ? params.nIc : 1;
  const auto combos = topIntentCombinations(dists, nIc);

  ObstacleConstraintSet base;
  std::vector<Vec3> staticCenters;
  for (const auto& b : outcome.staticBoxes) {
    base.statics.push_back(boxToEllipsoid(b, params.robotRadius));
    staticCenters.push_back(b.center);
  }
  std::vector<std::vector<Vec3>> safetyDynamic;
  for (const auto& track : dynamicConstraints(outcome.obstacles, combos.front(), params)) {
    std::vector<Vec3> centers;
    for (const auto& e : track) centers.push_back(e.center);
    safetyDynamic.push_back(std::move(centers));
  }

  std::vector<Vec3> warm;
  if (prev && !prev->controls.empty()) {
    for (std::size_t k = 0; k < static_cast<std::size_t>(params.mpc.N); ++k) {
      warm.push_back(prev->controls[std::min(k + prev->elapsedSteps, prev->controls.size() - 1)]);
    }
  }

  for (const auto& combo : combos) {
    ObstacleConstraintSet obs = base;
    obs.dynamics = dynamicConstraints(outcome.obstacles, combo, params);
    PlanCandidate cand;
    cand.combination = combo;
    cand.plan = solveMpc(robot, ref, obs, params.mpc, warm);
    cand.plan.combinationProb = combo.prob;
    scoreCandidate(cand.plan, ref, prev, staticCenters, safetyDynamic, params.weights);
    outcome.candidates.push_back(std::move(cand));
  }

  outcome.selectedIndex = selectCandidate(outcome.candidates);
  if (outcome.selectedIndex) {
    outcome.selected = outcome.candidates[*outcome.selectedIndex].plan;
  } else {
    outcome.selected = brakingPlan(robot, params.mpc);
  }
  return outcome;
}

inline PlanningOutcome planWithStaticBoxes(const RobotState& robot, const ReferenceTrajectory& ref,
                                           std::span<const Track> tracks, std::vector<StaticBox> staticBoxes,
                                           const PlannerParams& params, const PreviousPlan* prev = nullptr) {
  auto obstacles = closeObstacles(robot, tracks, staticBoxes, params);
  return planWithObstacles(robot, ref, std::move(staticBoxes), std::move(obstacles), params, prev);
}

/// Intent-based planning cycle: cluster static occupancy around the robot,
/// pick nearby tracked obstacles, solve one MPC per likely intent combination
/// and return the best-scoring feasible plan (braking if none is feasible).
inline PlanningOutcome planIntentBased(const RobotState& robot, const ReferenceTrajectory& ref, std::span<const Track> tracks,
                                       const OccupancyGrid& staticMap, const PlannerParams& params,
                                       const PreviousPlan* prev = nullptr) {
  return planWithStaticBoxes(robot, ref, tracks, clusterStaticObstacles(staticMap, robot.p, params.cluster), params, prev);
}

}  // namespace intentnav
