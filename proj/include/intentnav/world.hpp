#pragma once

#include "intentnav/common.hpp"
#include "intentnav/random.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace intentnav {

enum class AgentKind { kWaypointChain, kConstantArc, kLinear };

/// Scripted mover. All motion is planar at z = trueSize.z (standing on the ground).
///  - linear: starts at waypoints[0] and walks along `heading` at `speed`.
///  - constantArc: starts at waypoints[0] with `heading`, turning at `turnRate` (rad/s, + = left).
///  - waypointChain: walks waypoints in order at `speed`, looping back to the first.
struct AgentScript {
  AgentKind kind = AgentKind::kLinear;
  std::vector<Vec2> waypoints;
  double speed = 1.0;
  double turnRate = 0.0;
  double heading = 0.0;
  Vec3 trueSize = Vec3(0.3, 0.3, 0.9);
};

struct SensorModel {
  double fovHalfAngle = 0.75;
  double maxRange = 6.0;
  double posNoiseSigma = 0.05;
  double sizeNoiseSigma = 0.03;
  double detectProb = 0.95;
};

struct WorldConfig {
  Vec2 mapExtent = Vec2(20.0, 20.0);
  std::vector<StaticBox> staticBoxes;
  std::vector<AgentScript> agents;
  Vec3 robotStart = Vec3(1.0, 10.0, 1.0);
  Vec3 robotGoal = Vec3(19.0, 10.0, 1.0);
  SensorModel sensor;
  std::uint64_t seed = 0;
  double tickDt = 0.1;
  double robotMaxVelocity = kDefaultMaxVelocity;

  bool insideMap(const Vec2& p) const {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= mapExtent.x() && p.y() <= mapExtent.y();
  }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    if (!(tickDt > 0.0)) throw std::invalid_argument("tickDt must be positive");
    if (!(mapExtent.x() > 0.0 && mapExtent.y() > 0.0)) throw std::invalid_argument("mapExtent must be positive");
    if (!insideMap(robotStart.head<2>())) throw std::invalid_argument("robotStart outside map");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto& a = agents[i];
      if (a.waypoints.empty()) throw std::invalid_argument("agent " + std::to_string(i) + " has no waypoints");
      if (!insideMap(a.waypoints.front())) throw std::invalid_argument("agent " + std::to_string(i) + " starts outside map");
      if (a.speed < 0.0) throw std::invalid_argument("agent " + std::to_string(i) + " has negative speed");
      if ((a.trueSize.array() <= 0.0).any()) throw std::invalid_argument("agent " + std::to_string(i) + " has non-positive size");
    }
    for (const auto& b : staticBoxes) {
      if ((b.halfExtents.array() <= 0.0).any()) throw std::invalid_argument("static box with non-positive half extent");
      if (b.yaw < -kPi / 2 || b.yaw >= kPi / 2) throw std::invalid_argument("static box yaw outside [-pi/2, pi/2)");
    }
  }
};

struct AgentState {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  double heading = 0.0;
  std::size_t nextWaypoint = 1;
  double elapsed = 0.0;
  bool halted = false;

  StaticBox box(const Vec3& halfExtents) const { return {pos, halfExtents, 0.0}; }
};

/// Simulator state. Copyable value; the configuration is shared read-only.
struct WorldState {
  std::shared_ptr<const WorldConfig> config;
  std::uint64_t tick = 0;
  double time = 0.0;
  RobotState robot;
  Vec3 commandedAccel = Vec3::Zero();
  std::vector<AgentState> agents;

  static WorldState initial(WorldConfig cfg) {
    cfg.validate();
    WorldState w;
    auto shared = std::make_shared<const WorldConfig>(std::move(cfg));
    w.config = shared;
    w.robot.p = shared->robotStart;
    for (const auto& script : shared->agents) {
      AgentState a;
      a.pos = Vec3(script.waypoints.front().x(), script.waypoints.front().y(), script.trueSize.z());
      a.heading = script.heading;
      if (script.kind == AgentKind::kWaypointChain && script.waypoints.size() > 1) {
        a.heading = std::atan2(script.waypoints[1].y() - script.waypoints[0].y(),
                               script.waypoints[1].x() - script.waypoints[0].x());
      }
      a.vel = script.speed * Vec3(std::cos(a.heading), std::sin(a.heading), 0.0);
      w.agents.push_back(a);
    }
    return w;
  }

  /// True boxes of every obstacle, statics first, then agents in script order.
  std::vector<StaticBox> obstacleBoxes() const {
    std::vector<StaticBox> out(config->staticBoxes.begin(), config->staticBoxes.end());
    for (std::size_t i = 0; i < agents.size(); ++i) out.push_back(agents[i].box(config->agents[i].trueSize));
    return out;
  }
};

namespace detail {

inline bool clampToMap(const WorldConfig& cfg, const Vec3& size, Vec3& pos) {
  const double x = std::clamp(pos.x(), size.x(), cfg.mapExtent.x() - size.x());
  const double y = std::clamp(pos.y(), size.y(), cfg.mapExtent.y() - size.y());
  const bool clamped = x != pos.x() || y != pos.y();
  pos.x() = x;
  pos.y() = y;
  return clamped;
}

inline void advanceAgent(const WorldConfig& cfg, const AgentScript& script, AgentState& a, double dt) {
  if (a.halted) {
    a.vel.setZero();
    return;
  }
  const Vec3 before = a.pos;
  switch (script.kind) {
    case AgentKind::kLinear: {
      a.pos += script.speed * dt * Vec3(std::cos(a.heading), std::sin(a.heading), 0.0);
      break;
    }
    case AgentKind::kConstantArc: {
      a.elapsed += dt;
      const Vec2 start = script.waypoints.front();
      const double psi0 = script.heading;
      const double psi = psi0 + script.turnRate * a.elapsed;
      if (std::abs(script.turnRate) < 1e-12) {
        a.pos.head<2>() = start + script.speed * a.elapsed * Vec2(std::cos(psi0), std::sin(psi0));
      } else {
        const double r = script.speed / script.turnRate;
        a.pos.head<2>() = start + r * Vec2(std::sin(psi) - std::sin(psi0), std::cos(psi0) - std::cos(psi));
      }
      a.heading = wrapAngle(psi);
      break;
    }
    case AgentKind::kWaypointChain: {
      double budget = script.speed * dt;
      const std::size_t n = script.waypoints.size();
      for (std::size_t hop = 0; budget > 0.0 && n > 1 && hop < 2 * n; ++hop) {
        const Vec2 target = script.waypoints[a.nextWaypoint % n];
        const Vec2 delta = target - a.pos.head<2>();
        const double dist = delta.norm();
        if (dist <= budget) {
          a.pos.head<2>() = target;
          budget -= dist;
          a.nextWaypoint = (a.nextWaypoint + 1) % n;
        } else {
          a.pos.head<2>() += delta * (budget / dist);
          a.heading = std::atan2(delta.y(), delta.x());
          budget = 0.0;
        }
      }
      break;
    }
  }
  if (clampToMap(cfg, script.trueSize, a.pos)) a.halted = true;
  a.vel = (a.pos - before) / dt;
}

}  // namespace detail

/// Advances every agent by its script and the robot by the double integrator
/// under the last commanded acceleration. Robot velocity saturates per axis.
inline WorldState stepWorld(WorldState world, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("stepWorld: dt must be positive");
  const WorldConfig& cfg = *world.config;
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    detail::advanceAgent(cfg, cfg.agents[i], world.agents[i], dt);
  }
  world.robot = integrate(world.robot, world.commandedAccel, dt);
  world.robot.v = world.robot.v.cwiseMax(-cfg.robotMaxVelocity).cwiseMin(cfg.robotMaxVelocity);
  world.tick += 1;
  world.time += dt;
  return world;
}

/// True if `target` is inside the planar sensor cone at `origin` facing `heading`.
inline bool inFieldOfView(const SensorModel& sensor, const Vec3& origin, double heading, const Vec3& target) {
  const Vec2 rel = (target - origin).head<2>();
  const double range = rel.norm();
  if (range > sensor.maxRange) return false;
  if (range < 1e-9) return true;
  return std::abs(wrapAngle(std::atan2(rel.y(), rel.x()) - heading)) <= sensor.fovHalfAngle;
}

/// Noisy, FOV-limited detections of the agents. Each (tick, agent) pair draws
/// from its own sub-stream so results depend only on seed and tick.
inline std::vector<Detection> senseDetections(const WorldState& world, const RobotState& robot, double heading) {
  const WorldConfig& cfg = *world.config;
  const SensorModel& sensor = cfg.sensor;
  std::vector<Detection> out;
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const AgentState& agent = world.agents[i];
    if (!inFieldOfView(sensor, robot.p, heading, agent.pos)) continue;
    auto rng = makeStream(cfg.seed, Stream::kSensor, (world.tick << 16) | i);
    std::bernoulli_distribution detect(std::clamp(sensor.detectProb, 0.0, 1.0));
    if (!detect(rng)) continue;
    std::normal_distribution<double> unit(0.0, 1.0);
    const Vec3& half = cfg.agents[i].trueSize;
    Detection d;
    d.sourceId = static_cast<int>(i);
    for (int k = 0; k < 3; ++k) d.pos[k] = agent.pos[k] + sensor.posNoiseSigma * unit(rng);
    for (int k = 0; k < 3; ++k) d.dim[k] = std::max(0.05, 2.0 * half[k] + sensor.sizeNoiseSigma * unit(rng));
    // Synthetic point-cloud statistics: point count scales with the apparent
    // cross-section over range squared, spread with the box diagonal.
    const double range = std::max(0.5, (agent.pos - robot.p).head<2>().norm());
    const double area = 2.0 * std::max(half.x(), half.y()) * 2.0 * half.z();
    const double len = 400.0 * area / (range * range) * (1.0 + 0.05 * unit(rng));
    d.cloudLen = std::max(1, static_cast<int>(std::lround(len)));
    const double w = 2.0 * std::max(half.x(), half.y());
    const double h = 2.0 * half.z();
    d.cloudStd = std::max(0.0, std::sqrt((w * w + h * h) / 12.0) * (1.0 + 0.05 * unit(rng)));
    out.push_back(d);
  }
  return out;
}

/// Robot position and true obstacle boxes at one tick.
struct ContactFrame {
  Vec3 robot = Vec3::Zero();
  std::vector<StaticBox> obstacles;
};

/// Number of contact episodes: each time the robot center enters some obstacle
/// box inflated by `robotRadius` counts once, however long it stays inside.
inline int collisionEvents(std::span<const ContactFrame> frames, double robotRadius) {
  int count = 0;
  std::vector<bool> inside;
  for (const auto& frame : frames) {
    if (inside.size() < frame.obstacles.size()) inside.resize(frame.obstacles.size(), false);
    for (std::size_t i = 0; i < frame.obstacles.size(); ++i) {
      const bool now = frame.obstacles[i].contains(frame.robot, robotRadius);
      if (now && !inside[i]) ++count;
      inside[i] = now;
    }
  }
  return count;
}

}  // namespace intentnav
