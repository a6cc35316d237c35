#include "intentnav/world.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace intentnav;

namespace {

WorldConfig oneAgent(AgentScript script) {
  WorldConfig cfg;
  cfg.agents.push_back(std::move(script));
  return cfg;
}

AgentScript linearAgent(Vec2 start, double heading, double speed) {
  AgentScript a;
  a.kind = AgentKind::kLinear;
  a.waypoints = {start};
  a.heading = heading;
  a.speed = speed;
  return a;
}

}  // namespace

TEST(StepWorld, LinearAgentMovesSpeedTimesDt) {
  WorldState w = WorldState::initial(oneAgent(linearAgent({5, 5}, 0.0, 1.0)));
  const Vec3 before = w.agents[0].pos;
  w = stepWorld(w, 0.1);
  EXPECT_NEAR((w.agents[0].pos - before).norm(), 0.1, 1e-12);
  EXPECT_NEAR(w.agents[0].pos.x() - before.x(), 0.1, 1e-12);
}

TEST(StepWorld, RobotAtRestWithZeroCommandStaysPut) {
  WorldState w = WorldState::initial(WorldConfig{});
  const Vec3 p = w.robot.p;
  for (int i = 0; i < 10; ++i) w = stepWorld(w, 0.1);
  EXPECT_EQ(w.robot.p, p);
}

TEST(StepWorld, RobotFollowsDoubleIntegratorAndSaturates) {
  WorldState w = WorldState::initial(WorldConfig{});
  w.commandedAccel = Vec3(1.0, 0.0, 0.0);
  w = stepWorld(w, 0.1);
  EXPECT_NEAR(w.robot.p.x() - 1.0, 0.005, 1e-12);
  EXPECT_NEAR(w.robot.v.x(), 0.1, 1e-12);
  w.commandedAccel = Vec3(100.0, -100.0, 0.0);
  w = stepWorld(w, 0.1);
  EXPECT_DOUBLE_EQ(w.robot.v.x(), kDefaultMaxVelocity);
  EXPECT_DOUBLE_EQ(w.robot.v.y(), -kDefaultMaxVelocity);
}

TEST(StepWorld, ArcAgentReturnsAfterFullPeriod) {
  AgentScript a;
  a.kind = AgentKind::kConstantArc;
  a.waypoints = {{10, 10}};
  a.speed = 1.0;
  a.turnRate = 0.5;
  a.heading = 0.3;
  WorldState w = WorldState::initial(oneAgent(a));
  const Vec3 start = w.agents[0].pos;
  const double period = 2.0 * kPi / a.turnRate;
  const int steps = 1000;
  for (int i = 0; i < steps; ++i) w = stepWorld(w, period / steps);
  EXPECT_LT((w.agents[0].pos - start).norm(), 1e-6);
}

TEST(StepWorld, RejectsNonPositiveDt) {
  WorldState w = WorldState::initial(WorldConfig{});
  EXPECT_THROW(stepWorld(w, 0.0), std::invalid_argument);
}

TEST(StepWorld, AgentDisplacementBoundedBySpeed) {
  AgentScript chain;
  chain.kind = AgentKind::kWaypointChain;
  chain.waypoints = {{2, 2}, {2.05, 2}, {2.05, 2.05}, {8, 8}};
  chain.speed = 1.3;
  AgentScript arc;
  arc.kind = AgentKind::kConstantArc;
  arc.waypoints = {{10, 10}};
  arc.speed = 0.9;
  arc.turnRate = -0.7;
  WorldConfig cfg;
  cfg.agents = {chain, arc, linearAgent({18, 18}, 0.7, 1.1)};
  WorldState w = WorldState::initial(cfg);
  for (int t = 0; t < 300; ++t) {
    const auto before = w.agents;
    w = stepWorld(w, 0.1);
    for (std::size_t i = 0; i < before.size(); ++i) {
      EXPECT_LE((w.agents[i].pos - before[i].pos).norm(), cfg.agents[i].speed * 0.1 + 1e-9);
      EXPECT_DOUBLE_EQ(w.agents[i].pos.z(), cfg.agents[i].trueSize.z());
    }
  }
}

TEST(StepWorld, AgentsClampAtMapBoundary) {
  WorldState w = WorldState::initial(oneAgent(linearAgent({19, 10}, 0.0, 1.0)));
  for (int t = 0; t < 30; ++t) w = stepWorld(w, 0.1);
  EXPECT_LE(w.agents[0].pos.x(), 20.0 - 0.3 + 1e-12);
  EXPECT_TRUE(w.agents[0].halted);
}

TEST(WorldConfig, ValidationRejectsBadConfigs) {
  WorldConfig bad;
  bad.tickDt = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  WorldConfig outside;
  outside.robotStart = Vec3(-1, 0, 1);
  EXPECT_THROW(outside.validate(), std::invalid_argument);
  WorldConfig agentOutside = oneAgent(linearAgent({25, 5}, 0.0, 1.0));
  EXPECT_THROW(agentOutside.validate(), std::invalid_argument);
}

TEST(SenseDetections, AgentBehindRobotIsNotDetected) {
  WorldConfig cfg = oneAgent(linearAgent({5, 10}, 0.0, 0.0));
  cfg.robotStart = Vec3(8, 10, 1);
  cfg.sensor.detectProb = 1.0;
  WorldState w = WorldState::initial(cfg);
  EXPECT_TRUE(senseDetections(w, w.robot, 0.0).empty());
  EXPECT_EQ(senseDetections(w, w.robot, kPi).size(), 1u);
}

TEST(SenseDetections, NoiselessSensorReportsTruePosition) {
  WorldConfig cfg = oneAgent(linearAgent({6, 10}, 0.0, 0.0));
  cfg.robotStart = Vec3(3, 10, 1);
  cfg.sensor.detectProb = 1.0;
  cfg.sensor.posNoiseSigma = 0.0;
  cfg.sensor.sizeNoiseSigma = 0.0;
  WorldState w = WorldState::initial(cfg);
  const auto dets = senseDetections(w, w.robot, 0.0);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].pos, w.agents[0].pos);
  EXPECT_TRUE(dets[0].dim.isApprox(2.0 * cfg.agents[0].trueSize));
  EXPECT_GE(dets[0].cloudLen, 1);
  EXPECT_GE(dets[0].cloudStd, 0.0);
}

TEST(SenseDetections, DetectionFrequencyMatchesProbability) {
  WorldConfig cfg = oneAgent(linearAgent({6, 10}, 0.0, 0.0));
  cfg.robotStart = Vec3(3, 10, 1);
  cfg.sensor.detectProb = 0.9;
  cfg.seed = 42;
  WorldState w = WorldState::initial(cfg);
  int hits = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    w.tick = static_cast<std::uint64_t>(t);
    hits += static_cast<int>(senseDetections(w, w.robot, 0.0).size());
  }
  const double freq = static_cast<double>(hits) / trials;
  EXPECT_GE(freq, 0.88);
  EXPECT_LE(freq, 0.92);
}

TEST(SenseDetections, NeverOutsideConeOrRange) {
  WorldConfig cfg;
  cfg.sensor.detectProb = 1.0;
  for (int i = 0; i < 24; ++i) {
    const double ang = 2.0 * kPi * i / 24.0;
    const double r = 1.0 + 0.4 * i;
    AgentScript a = linearAgent({std::clamp(10 + r * std::cos(ang), 0.5, 19.5), std::clamp(10 + r * std::sin(ang), 0.5, 19.5)}, 0.0, 0.0);
    cfg.agents.push_back(a);
  }
  cfg.robotStart = Vec3(10, 10, 1);
  WorldState w = WorldState::initial(cfg);
  for (double heading : {0.0, 1.0, -2.5}) {
    for (const auto& d : senseDetections(w, w.robot, heading)) {
      const Vec3 truth = w.agents[static_cast<std::size_t>(d.sourceId)].pos;
      EXPECT_TRUE(inFieldOfView(cfg.sensor, w.robot.p, heading, truth));
      EXPECT_LE((truth - w.robot.p).head<2>().norm(), cfg.sensor.maxRange);
    }
  }
}

TEST(World, SameSeedGivesIdenticalTrajectories) {
  AgentScript a;
  a.kind = AgentKind::kWaypointChain;
  a.waypoints = {{4, 4}, {12, 6}, {9, 14}};
  WorldConfig cfg = oneAgent(a);
  cfg.seed = 7;
  cfg.robotStart = Vec3(2, 2, 1);
  auto run = [&] {
    WorldState w = WorldState::initial(cfg);
    std::vector<double> out;
    for (int t = 0; t < 100; ++t) {
      for (const auto& d : senseDetections(w, w.robot, 0.8)) out.insert(out.end(), {d.pos.x(), d.pos.y(), d.dim.x()});
      w = stepWorld(w, 0.1);
      out.push_back(w.agents[0].pos.x());
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

namespace {

ContactFrame frameAt(double x) {
  return {Vec3(x, 0, 0), {StaticBox{Vec3(0, 0, 0), Vec3(0.5, 0.5, 0.5), 0.0}}};
}

}  // namespace

TEST(CollisionEvents, NoContactIsZero) {
  std::vector<ContactFrame> frames = {frameAt(3), frameAt(2), frameAt(1.5)};
  EXPECT_EQ(collisionEvents(frames, 0.3), 0);
}

TEST(CollisionEvents, ContinuousPenetrationCountsOnce) {
  std::vector<ContactFrame> frames = {frameAt(2)};
  for (int i = 0; i < 5; ++i) frames.push_back(frameAt(0.1 * i));
  frames.push_back(frameAt(2));
  EXPECT_EQ(collisionEvents(frames, 0.3), 1);
}

TEST(CollisionEvents, SeparateIntervalsCountSeparately) {
  std::vector<ContactFrame> frames = {frameAt(2), frameAt(0.7), frameAt(0.7), frameAt(1.0), frameAt(0.2), frameAt(3)};
  EXPECT_EQ(collisionEvents(frames, 0.3), 2);
}

TEST(CollisionEvents, RespectsBoxYaw) {
  StaticBox rotated{Vec3::Zero(), Vec3(2.0, 0.1, 1.0), kPi / 4};
  std::vector<ContactFrame> frames = {{Vec3(1.0, 1.0, 0), {rotated}}, {Vec3(1.0, -1.0, 0), {rotated}}};
  EXPECT_EQ(collisionEvents(std::span<const ContactFrame>(frames.data(), 1), 0.0), 1);
  EXPECT_EQ(collisionEvents(std::span<const ContactFrame>(frames.data() + 1, 1), 0.0), 0);
}
