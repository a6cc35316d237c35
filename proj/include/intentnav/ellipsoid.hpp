#pragma once

#include "intentnav/common.hpp"

#include <cmath>

namespace intentnav {

/// Ellipsoid with semi-axes (a, b, c) rotated by yaw `phi` about +z.
struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  double phi = 0.0;
};

/// (x cos + y sin)^2/a^2 + (-x sin + y cos)^2/b^2 + z^2/c^2 - 1 for the
/// relative position `rel`. Non-negative means outside (collision-free).
inline double ellipsoidResidual(const Vec3& rel, double a, double b, double c, double phi) {
  const double cp = std::cos(phi);
  const double sp = std::sin(phi);
  const double u = rel.x() * cp + rel.y() * sp;
  const double v = -rel.x() * sp + rel.y() * cp;
  return u * u / (a * a) + v * v / (b * b) + rel.z() * rel.z() / (c * c) - 1.0;
}

inline double ellipsoidResidual(const Vec3& point, const Ellipsoid& e) {
  return ellipsoidResidual(point - e.center, e.a, e.b, e.c, e.phi);
}

/// Gradient of the residual with respect to the query point.
inline Vec3 ellipsoidResidualGradient(const Vec3& point, const Ellipsoid& e) {
  const Vec3 rel = point - e.center;
  const double cp = std::cos(e.phi);
  const double sp = std::sin(e.phi);
  const double u = rel.x() * cp + rel.y() * sp;
  const double v = -rel.x() * sp + rel.y() * cp;
  const double du = 2.0 * u / (e.a * e.a);
  const double dv = 2.0 * v / (e.b * e.b);
  return {du * cp - dv * sp, du * sp + dv * cp, 2.0 * rel.z() / (e.c * e.c)};
}

/// Smallest ellipsoid with the box's orientation that passes through all eight
/// corners: every semi-axis is sqrt(3) times the matching half extent.
inline Ellipsoid boxToEllipsoid(const Vec3& center, const Vec3& halfExtents, double yaw) {
  const double k = std::sqrt(3.0);
  return {center, k * halfExtents.x(), k * halfExtents.y(), k * halfExtents.z(), yaw};
}

inline Ellipsoid boxToEllipsoid(const StaticBox& box, double inflate = 0.0) {
  return boxToEllipsoid(box.center, box.halfExtents.array() + inflate, box.yaw);
}

}  // namespace intentnav
