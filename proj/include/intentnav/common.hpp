#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace intentnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

/// Per-axis velocity limit of the controlled robot (m/s).
inline constexpr double kDefaultMaxVelocity = 1.5;

/// Collision footprint radius of the robot (m).
inline constexpr double kDefaultRobotRadius = 0.3;

/// Position and velocity of the controlled robot.
struct RobotState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

/// Double-integrator step: p' = p + dt v + dt^2/2 a, v' = v + dt a.
inline RobotState integrate(const RobotState& x, const Vec3& accel, double dt) {
  RobotState next;
  next.p = x.p + dt * x.v + 0.5 * dt * dt * accel;
  next.v = x.v + dt * accel;
  return next;
}

/// Oriented box; yaw rotates about +z. Used for static obstacles and clustering output.
struct StaticBox {
  Vec3 center = Vec3::Zero();
  Vec3 halfExtents = Vec3::Constant(0.5);
  double yaw = 0.0;

  /// True if `point` lies inside the box grown by `inflate` along every axis.
  bool contains(const Vec3& point, double inflate = 0.0) const {
    const Vec3 rel = point - center;
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const double lx = c * rel.x() + s * rel.y();
    const double ly = -s * rel.x() + c * rel.y();
    return std::abs(lx) <= halfExtents.x() + inflate &&
           std::abs(ly) <= halfExtents.y() + inflate &&
           std::abs(rel.z()) <= halfExtents.z() + inflate;
  }
};

/// Simulated detection of one obstacle. `sourceId` is the ground-truth agent
/// index; it is carried only for evaluation and never read by the tracker.
struct Detection {
  Vec3 pos = Vec3::Zero();
  Vec3 dim = Vec3::Ones();
  int cloudLen = 1;
  double cloudStd = 0.0;
  int sourceId = -1;
};

enum class Intent : int { kForward = 0, kLeft = 1, kRight = 2, kStop = 3 };

inline constexpr std::array<Intent, 4> kAllIntents = {Intent::kForward, Intent::kLeft,
                                                      Intent::kRight, Intent::kStop};

inline constexpr std::string_view intentName(Intent intent) {
  switch (intent) {
    case Intent::kForward: return "forward";
    case Intent::kLeft: return "left";
    case Intent::kRight: return "right";
    case Intent::kStop: return "stop";
  }
  return "unknown";
}

inline constexpr int index(Intent intent) { return static_cast<int>(intent); }

/// Probability vector over (forward, left, right, stop).
struct IntentDistribution {
  std::array<double, 4> p{0.25, 0.25, 0.25, 0.25};

  double operator[](Intent intent) const { return p[static_cast<std::size_t>(index(intent))]; }
  double& operator[](Intent intent) { return p[static_cast<std::size_t>(index(intent))]; }

  /// Lowest index wins ties.
  Intent argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] > p[best]) best = i;
    }
    return static_cast<Intent>(best);
  }

  double sum() const { return p[0] + p[1] + p[2] + p[3]; }

  static IntentDistribution uniform() { return {}; }
  static IntentDistribution certain(Intent intent) {
    IntentDistribution d;
    d.p.fill(0.0);
    d[intent] = 1.0;
    return d;
  }
};

/// Planar heading of a vector, measured from +x.
inline double headingOf(const Vec3& v) { return std::atan2(v.y(), v.x()); }

inline double wrapAngle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace intentnav
