#include "intentnav/intent_planner.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace intentnav;

namespace {

ReferenceTrajectory straightRef(const RobotState& x0, const PlannerParams& p) {
  ReferenceTrajectory ref;
  for (int k = 0; k <= p.mpc.N; ++k) ref.states.push_back({x0.p + k * p.mpc.dt * x0.v, x0.v});
  return ref;
}

PlannedObstacle obstacleAt(Vec3 pos, double heading, double speed, IntentDistribution dist, const PlannerParams& p) {
  PlannedObstacle o;
  o.trackId = 0;
  o.dist = dist;
  o.kin.pos = pos;
  o.kin.heading = heading;
  o.kin.speed = speed;
  o.kin.size = Vec3(0.3, 0.3, 0.9);
  o.predictions = predictFromKinematics(o.kin, {}, p.intent);
  return o;
}

IntentDistribution dist(double a, double b, double c, double d) {
  IntentDistribution out;
  out.p = {a, b, c, d};
  return out;
}

const RobotState kRobot{Vec3(5, 10, 1), Vec3(1.0, 0, 0)};

}  // namespace

TEST(Planner, NoDynamicObstaclesSolvesOnce) {
  PlannerParams p;
  const std::vector<StaticBox> boxes = {StaticBox{Vec3(7, 11, 1), Vec3(0.4, 0.4, 1), 0.2}};
  const auto ref = straightRef(kRobot, p);
  const auto out = planWithObstacles(kRobot, ref, boxes, {}, p);
  ASSERT_EQ(out.candidates.size(), 1u);
  ObstacleConstraintSet obs;
  obs.statics.push_back(boxToEllipsoid(boxes[0], p.robotRadius));
  const auto direct = solveMpc(kRobot, ref, obs, p.mpc);
  ASSERT_TRUE(out.selectedIndex.has_value());
  ASSERT_EQ(out.selected.states.size(), direct.states.size());
  for (std::size_t k = 0; k < direct.states.size(); ++k) EXPECT_EQ(out.selected.states[k].p, direct.states[k].p);
  EXPECT_EQ(out.selected.controls, direct.controls);
}

TEST(Planner, MissingReferenceThrows) {
  PlannerParams p;
  EXPECT_THROW(planWithObstacles(kRobot, ReferenceTrajectory{}, {}, {}, p), std::invalid_argument);
}

TEST(Planner, FeasibilityGateBeatsProbability) {
  std::vector<PlanCandidate> c(2);
  c[0].plan.feasible = false;
  c[0].plan.finalScore = 50.0;
  c[0].plan.combinationProb = 0.9;
  c[1].plan.feasible = true;
  c[1].plan.finalScore = 0.1;
  c[1].plan.combinationProb = 0.1;
  EXPECT_EQ(selectCandidate(c), std::optional<std::size_t>(1));
  c[1].plan.feasible = false;
  EXPECT_FALSE(selectCandidate(c).has_value());
}

TEST(Planner, InfeasibleLikelyCombinationIsSkipped) {
  PlannerParams p;
  p.nIc = 2;
  auto o = obstacleAt(Vec3(9, 10, 1), kPi, 0.0, dist(0.9, 0.1, 0.0, 0.0), p);
  // Forward: a wall-sized risk region that swallows the whole horizon. Left: far away.
  for (auto& r : o.predictions.byIntent[0].riskSizes) r = Vec3(8.0, 8.0, 8.0);
  o.kin.size = Vec3(8.0, 8.0, 8.0);
  for (auto& pos : o.predictions.byIntent[1].positions) pos = Vec3(18, 2, 1);
  const auto ref = straightRef(kRobot, p);
  const auto out = planWithObstacles(kRobot, ref, {}, {o}, p);
  ASSERT_EQ(out.candidates.size(), 2u);
  EXPECT_EQ(out.candidates[0].combination.intents, std::vector<Intent>{Intent::kForward});
  EXPECT_FALSE(out.candidates[0].plan.feasible);
  ASSERT_TRUE(out.selectedIndex.has_value());
  EXPECT_EQ(*out.selectedIndex, 1u);
  EXPECT_TRUE(out.selected.feasible);
}

TEST(Planner, NoFeasibleCandidateBrakes) {
  PlannerParams p;
  p.nIc = 1;
  auto o = obstacleAt(Vec3(5.5, 10, 1), kPi, 0.0, dist(1, 0, 0, 0), p);
  for (auto& r : o.predictions.byIntent[0].riskSizes) r = Vec3(8.0, 8.0, 8.0);
  o.kin.size = Vec3(8.0, 8.0, 8.0);
  const auto out = planWithObstacles(kRobot, straightRef(kRobot, p), {}, {o}, p);
  EXPECT_FALSE(out.selectedIndex.has_value());
  EXPECT_FALSE(out.selected.feasible);
  EXPECT_LT(out.selected.states.back().v.norm(), 1e-12);
}

namespace {

double oracleInverseDeviation(const std::vector<RobotState>& a, const std::vector<RobotState>& b, double cap) {
  double total = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) total += (a[k].p - b[k].p).norm();
  return total <= 0.0 ? cap : std::min(cap, static_cast<double>(a.size() - 1) / total);
}

}  // namespace

TEST(Planner, SelectionMatchesExhaustiveScoring) {
  PlannerParams p;
  p.nIc = 4;
  // Head-on obstacle on the robot's path: left and right intents mirror each other.
  const auto o = obstacleAt(Vec3(8, 10, 1), kPi, 0.8, dist(0.4, 0.25, 0.25, 0.1), p);
  const auto ref = straightRef(kRobot, p);
  const std::vector<PlannedObstacle> obstacles = {o};
  const auto out = planWithObstacles(kRobot, ref, {}, obstacles, p);
  ASSERT_EQ(out.candidates.size(), 4u);

  // Safety is measured against the most likely combination's obstacle centers.
  IntentCombination top;
  top.intents = {Intent::kForward};
  const auto topTrack = dynamicConstraints(obstacles, top, p).front();

  std::optional<std::size_t> best;
  double bestScore = -1.0, bestProb = -1.0;
  for (std::size_t i = 0; i < kAllIntents.size(); ++i) {
    const Intent intent = out.candidates[i].combination.intents.front();
    IntentCombination combo;
    combo.intents = {intent};
    ObstacleConstraintSet obs;
    obs.dynamics = dynamicConstraints(obstacles, combo, p);
    const auto plan = solveMpc(kRobot, ref, obs, p.mpc);
    EXPECT_EQ(plan.feasible, out.candidates[i].plan.feasible);
    double safety = 0.0;
    for (std::size_t k = 1; k < plan.states.size(); ++k) safety += (plan.states[k].p - topTrack[k].center).norm();
    safety /= static_cast<double>(plan.states.size() - 1);
    const double raw = p.weights.lambda1 * p.weights.scoreCap +
                       p.weights.lambda2 * oracleInverseDeviation(plan.states, ref.states, p.weights.scoreCap) +
                       p.weights.lambda3 * safety;
    const double score = o.dist[intent] * raw;
    EXPECT_NEAR(score, out.candidates[i].plan.finalScore, 1e-9);
    if (!plan.feasible) continue;
    if (!best || score > bestScore || (score == bestScore && o.dist[intent] > bestProb)) {
      best = i;
      bestScore = score;
      bestProb = o.dist[intent];
    }
  }
  EXPECT_EQ(out.selectedIndex, best);
}

TEST(Planner, WeightScaleInvariance) {
  PlannerParams p;
  const std::vector<PlannedObstacle> obstacles = {
      obstacleAt(Vec3(8, 10.4, 1), kPi, 0.8, dist(0.35, 0.3, 0.2, 0.15), p),
      obstacleAt(Vec3(7, 8.5, 1), kPi / 2, 0.6, dist(0.5, 0.2, 0.2, 0.1), p)};
  const auto ref = straightRef(kRobot, p);
  const auto base = planWithObstacles(kRobot, ref, {}, obstacles, p);
  for (double scale : {0.1, 3.0, 50.0}) {
    PlannerParams q = p;
    q.weights.lambda1 *= scale;
    q.weights.lambda2 *= scale;
    q.weights.lambda3 *= scale;
    EXPECT_EQ(planWithObstacles(kRobot, ref, {}, obstacles, q).selectedIndex, base.selectedIndex) << scale;
  }
}

TEST(Planner, CloseObstaclesRespectsModeAndRadius) {
  PlannerParams p;
  auto makeTrack = [](int id, Vec3 pos, bool matched) {
    Track t;
    t.id = id;
    t.kf = KalmanState::at(pos, 0.01, 0.01, 0.01);
    t.kf.x.segment<3>(3) = Vec3(0.8, 0, 0);
    t.updates = 10;
    t.dynamic = true;
    t.matched = matched;
    for (int k = 0; k < 10; ++k) t.appendHistory(0.1 * k, pos + Vec3(0.08 * (k - 9), 0, 0), 3.0);
    return t;
  };
  const std::vector<Track> tracks = {makeTrack(0, Vec3(7, 10, 1), true), makeTrack(1, Vec3(6, 11, 1), false),
                                     makeTrack(2, Vec3(15, 10, 1), true)};
  const auto full = closeObstacles(kRobot, tracks, {}, p);
  ASSERT_EQ(full.size(), 2u);  // track 2 is beyond the risk radius
  EXPECT_GT(full[0].predictions[Intent::kForward].positions.back().x(), 7.5);

  p.mode = PredictionMode::kHoldPosition;
  const auto hold = closeObstacles(kRobot, tracks, {}, p);
  ASSERT_EQ(hold.size(), 2u);
  for (const auto& o : hold) {
    EXPECT_EQ(o.dist[Intent::kStop], 1.0);
    for (const auto& pos : o.predictions[Intent::kForward].positions) EXPECT_EQ(pos, o.kin.pos);
  }

  p.mode = PredictionMode::kReactive;
  const auto reactive = closeObstacles(kRobot, tracks, {}, p);
  ASSERT_EQ(reactive.size(), 1u);
  EXPECT_EQ(reactive[0].trackId, 0);
}
