#pragma once

#include "intentnav/common.hpp"

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

namespace intentnav {

struct ScoreWeights {
  double lambda1 = 0.3;  // consistency
  double lambda2 = 0.3;  // detour
  double lambda3 = 0.4;  // safety
  double scoreCap = 100.0;
};

namespace detail {

/// N / sum_{k=1..N} |a_k - b_k|, capped. Index 0 is the shared initial point.
inline double inverseMeanDeviation(std::span<const Vec3> a, std::span<const Vec3> b, double cap) {
  if (a.size() != b.size()) throw std::invalid_argument("score: trajectories differ in length");
  if (a.size() < 2) return cap;
  double total = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) total += (a[k] - b[k]).norm();
  const double n = static_cast<double>(a.size() - 1);
  if (total <= n / cap) return cap;
  return std::min(cap, n / total);
}

}  // namespace detail

/// Rewards staying close to the previous plan. No previous plan scores the cap.
inline double consistencyScore(std::span<const Vec3> traj, std::span<const Vec3> prevTraj, double cap) {
  if (prevTraj.empty()) return cap;
  return detail::inverseMeanDeviation(traj, prevTraj, cap);
}

inline double detourScore(std::span<const Vec3> traj, std::span<const Vec3> ref, double cap) {
  return detail::inverseMeanDeviation(traj, ref, cap);
}

/// Mean over steps 1..N of the mean distance to every obstacle center.
/// `staticCenters` are fixed; `dynamicCenters[i][k]` is obstacle i at step k.
inline double safetyScore(std::span<const Vec3> traj, std::span<const Vec3> staticCenters,
                          std::span<const std::vector<Vec3>> dynamicCenters, double cap) {
  const std::size_t count = staticCenters.size() + dynamicCenters.size();
  if (count == 0 || traj.size() < 2) return cap;
  double outer = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    double inner = 0.0;
    for (const auto& c : staticCenters) inner += (traj[k] - c).norm();
    for (const auto& d : dynamicCenters) {
      const Vec3& c = d.empty() ? traj[k] : d[std::min(k, d.size() - 1)];
      inner += (traj[k] - c).norm();
    }
    outer += inner / static_cast<double>(count);
  }
  return outer / static_cast<double>(traj.size() - 1);
}

/// Shifts a previous plan forward by `elapsedSteps` and holds its last point,
/// producing `length` points on the current grid.
inline std::vector<Vec3> regridPrevious(std::span<const Vec3> prev, std::size_t elapsedSteps, std::size_t length) {
  std::vector<Vec3> out;
  if (prev.empty()) return out;
  for (std::size_t k = 0; k < length; ++k) out.push_back(prev[std::min(k + elapsedSteps, prev.size() - 1)]);
  return out;
}

}  // namespace intentnav
