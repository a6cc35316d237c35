#pragma once

#include "intentnav/common.hpp"
#include "intentnav/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace intentnav {

struct ClusterParams {
  double localRadius = 6.0;
  double epsCells = 2.0;  // DBSCAN radius in grid cells
  int minPts = 4;
  /// Minimum fill ratio (points * res^2 / box area) before a box stops splitting.
  /// Non-positive selects 60% of the densest initial cluster.
  double densityThreshold = 0.0;
  double densityFractionOfBest = 0.6;
  int yawStepDeg = 5;
  int maxSplitDepth = 4;
  int kmeansIters = 20;
};

struct ClusterPoint {
  Vec2 xy = Vec2::Zero();
  double top = 0.0;
};

/// Oriented planar box fit to a point set.
struct BoxFit {
  StaticBox box;
  double fill = 0.0;
};

/// Density-based clustering. Returns one label per point, -1 for noise.
inline std::vector<int> dbscan(std::span<const Vec2> pts, double eps, int minPts) {
  const auto cellKey = [eps](const Vec2& p) {
    const auto ix = static_cast<std::int64_t>(std::floor(p.x() / eps));
    const auto iy = static_cast<std::int64_t>(std::floor(p.y() / eps));
    return std::pair<std::int64_t, std::int64_t>(ix, iy);
  };
  struct KeyHash {
    std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const {
      return std::hash<std::int64_t>()(k.first * 73856093LL ^ k.second * 19349663LL);
    }
  };
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>, KeyHash> buckets;
  for (std::size_t i = 0; i < pts.size(); ++i) buckets[cellKey(pts[i])].push_back(i);

  const double eps2 = eps * eps * (1.0 + 1e-9);
  const auto neighbors = [&](std::size_t i) {
    std::vector<std::size_t> out;
    const auto [cx, cy] = cellKey(pts[i]);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets.find({cx + dx, cy + dy});
        if (it == buckets.end()) continue;
        for (std::size_t j : it->second) {
          if ((pts[j] - pts[i]).squaredNorm() <= eps2) out.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  constexpr int kUnvisited = -2;
  std::vector<int> label(pts.size(), kUnvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (label[i] != kUnvisited) continue;
    auto seeds = neighbors(i);
    if (static_cast<int>(seeds.size()) < minPts) {
      label[i] = -1;
      continue;
    }
    label[i] = cluster;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const std::size_t j = seeds[k];
      if (label[j] == -1) label[j] = cluster;
      if (label[j] != kUnvisited) continue;
      label[j] = cluster;
      auto more = neighbors(j);
      if (static_cast<int>(more.size()) >= minPts) seeds.insert(seeds.end(), more.begin(), more.end());
    }
    ++cluster;
  }
  return label;
}

/// Box around `pts` in a frame rotated by `yaw`. Each point stands for a grid
/// cell, so the box is padded by half a cell.
inline BoxFit fitBoxAtYaw(std::span<const ClusterPoint> pts, double yaw, double resolution) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  double minX = 1e300, maxX = -1e300, minY = 1e300, maxY = -1e300, top = 0.0;
  for (const auto& p : pts) {
    const double lx = c * p.xy.x() + s * p.xy.y();
    const double ly = -s * p.xy.x() + c * p.xy.y();
    minX = std::min(minX, lx);
    maxX = std::max(maxX, lx);
    minY = std::min(minY, ly);
    maxY = std::max(maxY, ly);
    top = std::max(top, p.top);
  }
  BoxFit fit;
  const double hx = 0.5 * (maxX - minX) + 0.5 * resolution;
  const double hy = 0.5 * (maxY - minY) + 0.5 * resolution;
  const double mx = 0.5 * (maxX + minX);
  const double my = 0.5 * (maxY + minY);
  fit.box.center = Vec3(c * mx - s * my, s * mx + c * my, 0.5 * top);
  fit.box.halfExtents = Vec3(hx, hy, std::max(0.5 * top, 1e-3));
  fit.box.yaw = yaw;
  fit.fill = static_cast<double>(pts.size()) * resolution * resolution / (4.0 * hx * hy);
  return fit;
}

/// Sweeps yaw over [-90, 90) degrees and keeps the densest box. Ties go to the
/// smaller |yaw|.
inline BoxFit fitOrientedBox(std::span<const ClusterPoint> pts, double resolution, int stepDeg = 5) {
  BoxFit best;
  best.fill = -1.0;
  double bestAbsYaw = 1e9;
  for (int deg = -90; deg < 90; deg += stepDeg) {
    const double yaw = deg * kPi / 180.0;
    const BoxFit fit = fitBoxAtYaw(pts, yaw, resolution);
    const double tol = 1e-9 * std::max(1.0, best.fill);
    if (fit.fill > best.fill + tol || (std::abs(fit.fill - best.fill) <= tol && std::abs(yaw) < bestAbsYaw)) {
      best = fit;
      bestAbsYaw = std::abs(yaw);
    }
  }
  return best;
}

namespace detail {

inline void splitUntilDense(std::vector<ClusterPoint> pts, double resolution, double threshold,
                            const ClusterParams& params, int depth, std::vector<StaticBox>& out) {
  const BoxFit fit = fitOrientedBox(pts, resolution, params.yawStepDeg);
  const bool tooSmall = static_cast<int>(pts.size()) < 2 * params.minPts;
  if (fit.fill >= threshold || depth >= params.maxSplitDepth || tooSmall) {
    out.push_back(fit.box);
    return;
  }
  // 2-means seeded at opposing corners of the current box.
  const double c = std::cos(fit.box.yaw);
  const double s = std::sin(fit.box.yaw);
  const Vec2 ax(c, s);
  const Vec2 ay(-s, c);
  const Vec2 center = fit.box.center.head<2>();
  Vec2 mean[2] = {center - fit.box.halfExtents.x() * ax - fit.box.halfExtents.y() * ay,
                  center + fit.box.halfExtents.x() * ax + fit.box.halfExtents.y() * ay};
  std::vector<int> assign(pts.size(), 0);
  for (int it = 0; it < params.kmeansIters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const int a = (pts[i].xy - mean[0]).squaredNorm() <= (pts[i].xy - mean[1]).squaredNorm() ? 0 : 1;
      changed |= a != assign[i];
      assign[i] = a;
    }
    Vec2 sum[2] = {Vec2::Zero(), Vec2::Zero()};
    int count[2] = {0, 0};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sum[assign[i]] += pts[i].xy;
      ++count[assign[i]];
    }
    for (int k = 0; k < 2; ++k) if (count[k] > 0) mean[k] = sum[k] / count[k];
    if (!changed && it > 0) break;
  }
  std::vector<ClusterPoint> halves[2];
  for (std::size_t i = 0; i < pts.size(); ++i) halves[assign[i]].push_back(pts[i]);
  if (halves[0].empty() || halves[1].empty()) {
    out.push_back(fit.box);
    return;
  }
  for (auto& h : halves) splitUntilDense(std::move(h), resolution, threshold, params, depth + 1, out);
}

}  // namespace detail

/// Converts occupied cells near `robotPos` into oriented boxes: DBSCAN
/// clustering, 2-means splitting until each box is dense enough, then a yaw
/// sweep per box. Every clustered point lies in some returned box.
inline std::vector<StaticBox> clusterStaticObstacles(const OccupancyGrid& grid, const Vec3& robotPos,
                                                     const ClusterParams& params = {}) {
  std::vector<StaticBox> out;
  if (grid.empty()) return out;
  const double res = grid.resolution();
  const Vec2 robot = robotPos.head<2>();
  const double r2 = params.localRadius * params.localRadius;

  std::vector<ClusterPoint> pts;
  const int x0 = std::max(0, static_cast<int>(std::floor((robot.x() - params.localRadius - grid.origin().x()) / res)));
  const int x1 = std::min(grid.width() - 1, static_cast<int>(std::ceil((robot.x() + params.localRadius - grid.origin().x()) / res)));
  const int y0 = std::max(0, static_cast<int>(std::floor((robot.y() - params.localRadius - grid.origin().y()) / res)));
  const int y1 = std::min(grid.height() - 1, static_cast<int>(std::ceil((robot.y() + params.localRadius - grid.origin().y()) / res)));
  for (int ix = x0; ix <= x1; ++ix) {
    for (int iy = y0; iy <= y1; ++iy) {
      if (!grid.occupied(ix, iy)) continue;
      const Vec2 c = grid.cellCenter(ix, iy);
      if ((c - robot).squaredNorm() > r2) continue;
      pts.push_back({c, grid.topHeight(ix, iy)});
    }
  }
  if (pts.empty()) return out;

  std::vector<Vec2> xy;
  xy.reserve(pts.size());
  for (const auto& p : pts) xy.push_back(p.xy);
  const std::vector<int> labels = dbscan(xy, params.epsCells * res, params.minPts);
  const int nClusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<ClusterPoint>> clusters(static_cast<std::size_t>(std::max(nClusters, 0)));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (labels[i] >= 0) clusters[static_cast<std::size_t>(labels[i])].push_back(pts[i]);
  }

  double threshold = params.densityThreshold;
  if (threshold <= 0.0) {
    double best = 0.0;
    for (const auto& c : clusters) best = std::max(best, fitOrientedBox(c, res, params.yawStepDeg).fill);
    threshold = params.densityFractionOfBest * best;
  }
  for (auto& c : clusters) detail::splitUntilDense(std::move(c), res, threshold, params, 0, out);
  return out;
}

}  // namespace intentnav
