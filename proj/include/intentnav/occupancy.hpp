#pragma once

#include "intentnav/common.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace intentnav {

/// 2.5D occupancy map: a planar grid whose occupied cells carry the top height
/// of whatever occupies them. Cell (ix, iy) covers
/// [origin + ix*res, origin + (ix+1)*res) on each axis.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(Vec2 origin, int width, int height, double resolution)
      : origin_(origin), width_(width), height_(height), resolution_(resolution),
        top_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0) {
    if (width < 0 || height < 0 || resolution <= 0.0) {
      throw std::invalid_argument("OccupancyGrid: bad dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }
  bool empty() const { return top_.empty(); }

  bool inBounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width_ && iy < height_; }

  bool occupied(int ix, int iy) const { return inBounds(ix, iy) && top_[offset(ix, iy)] > 0.0; }
  double topHeight(int ix, int iy) const { return inBounds(ix, iy) ? top_[offset(ix, iy)] : 0.0; }

  void mark(int ix, int iy, double top) {
    if (!inBounds(ix, iy)) return;
    auto& cell = top_[offset(ix, iy)];
    cell = std::max(cell, top);
  }

  Vec2 cellCenter(int ix, int iy) const {
    return origin_ + Vec2((ix + 0.5) * resolution_, (iy + 0.5) * resolution_);
  }

  std::size_t occupiedCount() const {
    return static_cast<std::size_t>(std::count_if(top_.begin(), top_.end(), [](double h) { return h > 0.0; }));
  }

  /// Marks every cell whose center lies inside the footprint of a box resting on the ground.
  void rasterize(const StaticBox& box) {
    const double reach = box.halfExtents.head<2>().norm();
    const int x0 = static_cast<int>(std::floor((box.center.x() - reach - origin_.x()) / resolution_));
    const int x1 = static_cast<int>(std::ceil((box.center.x() + reach - origin_.x()) / resolution_));
    const int y0 = static_cast<int>(std::floor((box.center.y() - reach - origin_.y()) / resolution_));
    const int y1 = static_cast<int>(std::ceil((box.center.y() + reach - origin_.y()) / resolution_));
    const double top = box.center.z() + box.halfExtents.z();
    for (int ix = x0; ix <= x1; ++ix) {
      for (int iy = y0; iy <= y1; ++iy) {
        const Vec2 c = cellCenter(ix, iy);
        if (box.contains(Vec3(c.x(), c.y(), box.center.z()))) mark(ix, iy, top);
      }
    }
  }

  static OccupancyGrid fromBoxes(Vec2 extent, double resolution, std::span<const StaticBox> boxes) {
    OccupancyGrid grid(Vec2::Zero(), static_cast<int>(std::ceil(extent.x() / resolution)),
                       static_cast<int>(std::ceil(extent.y() / resolution)), resolution);
    for (const auto& box : boxes) grid.rasterize(box);
    return grid;
  }

 private:
  std::size_t offset(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(ix);
  }

  Vec2 origin_ = Vec2::Zero();
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 0.1;
  std::vector<double> top_;
};

}  // namespace intentnav
