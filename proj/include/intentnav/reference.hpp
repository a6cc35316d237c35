#pragma once

#include "intentnav/common.hpp"
#include "intentnav/mpc.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace intentnav {

/// Piecewise-linear global path followed at a constant cruise speed.
class ReferencePath {
 public:
  ReferencePath() = default;
  ReferencePath(std::vector<Vec3> waypoints, double cruiseSpeed)
      : points_(std::move(waypoints)), cruise_(cruiseSpeed) {
    if (points_.empty()) throw std::invalid_argument("ReferencePath: no waypoints");
    if (!(cruise_ > 0.0)) throw std::invalid_argument("ReferencePath: cruise speed must be positive");
    arc_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) arc_.push_back(arc_.back() + (points_[i] - points_[i - 1]).norm());
  }

  bool empty() const { return points_.empty(); }
  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }
  double cruiseSpeed() const { return cruise_; }
  const Vec3& goal() const { return points_.back(); }

  /// Arc length of the point on the path closest to `p`.
  double project(const Vec3& p) const {
    double bestS = 0.0;
    double bestD = (p - points_.front()).squaredNorm();
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const Vec3 seg = points_[i] - points_[i - 1];
      const double len2 = seg.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((p - points_[i - 1]).dot(seg) / len2, 0.0, 1.0) : 0.0;
      const double d = (p - (points_[i - 1] + t * seg)).squaredNorm();
      if (d < bestD) {
        bestD = d;
        bestS = arc_[i - 1] + t * std::sqrt(len2);
      }
    }
    return bestS;
  }

  Vec3 at(double s) const {
    s = std::clamp(s, 0.0, length());
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (s <= arc_[i] || i + 1 == points_.size()) {
        const double len = arc_[i] - arc_[i - 1];
        const double t = len > 0.0 ? (s - arc_[i - 1]) / len : 0.0;
        return points_[i - 1] + std::clamp(t, 0.0, 1.0) * (points_[i] - points_[i - 1]);
      }
    }
    return points_.front();
  }

  Vec3 tangent(double s) const {
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (s < arc_[i] || i + 1 == points_.size()) {
        const Vec3 seg = points_[i] - points_[i - 1];
        const double n = seg.norm();
        return n > 0.0 ? Vec3(seg / n) : Vec3::Zero();
      }
    }
    return Vec3::Zero();
  }

  /// N+1 states starting at the projection of `from`, advancing at cruise
  /// speed and coming to rest at the goal.
  ReferenceTrajectory sample(const Vec3& from, int N, double dt) const {
    ReferenceTrajectory ref;
    const double s0 = project(from);
    for (int k = 0; k <= N; ++k) {
      const double s = s0 + k * dt * cruise_;
      RobotState x;
      x.p = at(s);
      x.v = s < length() ? Vec3(cruise_ * tangent(s)) : Vec3::Zero();
      ref.states.push_back(x);
    }
    return ref;
  }

 private:
  std::vector<Vec3> points_;
  std::vector<double> arc_;
  double cruise_ = 1.0;
};

}  // namespace intentnav
