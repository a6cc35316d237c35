#pragma once

#include "intentnav/common.hpp"
#include "intentnav/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

namespace intentnav {

using FeatureVector = Eigen::Matrix<double, 8, 1>;

/// [pos(3), dim(3), cloud length, cloud std] in that order.
inline FeatureVector featureOf(const Detection& d) {
  FeatureVector f;
  f << d.pos, d.dim, static_cast<double>(d.cloudLen), d.cloudStd;
  return f;
}

/// exp(-||W (fi - fj)||^2) with W diagonal, given as its diagonal.
inline double similarity(const FeatureVector& fi, const FeatureVector& fj, const FeatureVector& weights) {
  return std::exp(-(weights.cwiseProduct(fi - fj)).squaredNorm());
}

struct TrackerParams {
  FeatureVector weights = (FeatureVector() << 1, 1, 1, 0.5, 0.5, 0.5, 0.01, 1).finished();
  double simThreshold = 0.5;
  double processNoise = 1.0;       // accel sigma of the agile model, m/s^2
  double quietProcessNoise = 0.05; // accel sigma of the steady-motion model
  double modeSwitchProb = 0.001;   // per-cycle model switch probability
  double measurementNoise = 0.05;  // position sigma, m
  double dynVelThreshold = 0.25;
  double maxCoast = 2.0;
  double riskGrowthRate = 0.2;
  double historyWindow = 3.0;
  int minUpdatesForClassification = 5;
  int confirmUpdates = 3;
  double sizeSmoothing = 0.3;
  double initialVelocityVar = 4.0;
  double initialAccelVar = 4.0;
};

struct TimedPosition {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();
};

struct Track {
  int id = 0;
  KalmanState kf;  // combined estimate of `imm`
  ImmState imm;
  Vec3 size = Vec3::Constant(0.3);  // half extents
  Vec3 riskSize = Vec3::Constant(0.3);
  bool inView = true;
  bool matched = false;
  double coastTime = 0.0;
  std::deque<TimedPosition> history;
  int updates = 0;
  int cloudLen = 1;
  double cloudStd = 0.0;
  bool dynamic = false;
  double lastHeading = 0.0;

  // Attached by intent inference.
  IntentDistribution intent;
  int intentSteps = 0;

  // Ground-truth label of the last matched detection, kept for evaluation only.
  int lastSourceId = -1;

  Vec3 pos() const { return kf.pos(); }
  Vec3 vel() const { return kf.vel(); }
  double planarSpeed() const { return kf.vel().head<2>().norm(); }
  bool confirmed(const TrackerParams& p) const { return updates >= p.confirmUpdates; }

  void resetFilter(const KalmanState& s) {
    imm = ImmState::from(s);
    kf = s;
  }

  FeatureVector feature() const {
    FeatureVector f;
    f << kf.pos(), 2.0 * size, static_cast<double>(cloudLen), cloudStd;
    return f;
  }

  void appendHistory(double t, const Vec3& p, double window) {
    if (!history.empty() && t <= history.back().t) return;
    history.push_back({t, p});
    while (!history.empty() && history.back().t - history.front().t > window + 1e-9) history.pop_front();
  }
};

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (track, detection)
  std::vector<std::size_t> unmatchedTracks;
  std::vector<std::size_t> unmatchedDetections;
};

/// Greedy best-first association on a precomputed similarity matrix
/// (rows = tracks, cols = detections). Pairs below `threshold` are never matched.
inline Matching associateBySimilarity(const Eigen::MatrixXd& sim, double threshold) {
  const auto rows = static_cast<std::size_t>(sim.rows());
  const auto cols = static_cast<std::size_t>(sim.cols());
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double s = sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (s >= threshold) edges.emplace_back(s, i, j);
    }
  }
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<bool> usedTrack(rows, false);
  std::vector<bool> usedDet(cols, false);
  Matching m;
  for (const auto& [s, i, j] : edges) {
    if (usedTrack[i] || usedDet[j]) continue;
    usedTrack[i] = usedDet[j] = true;
    m.pairs.emplace_back(i, j);
  }
  for (std::size_t i = 0; i < rows; ++i) if (!usedTrack[i]) m.unmatchedTracks.push_back(i);
  for (std::size_t j = 0; j < cols; ++j) if (!usedDet[j]) m.unmatchedDetections.push_back(j);
  return m;
}

inline Matching associate(std::span<const Track> tracks, std::span<const Detection> dets, const TrackerParams& params) {
  Eigen::MatrixXd sim(static_cast<Eigen::Index>(tracks.size()), static_cast<Eigen::Index>(dets.size()));
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const FeatureVector ft = tracks[i].feature();
    for (std::size_t j = 0; j < dets.size(); ++j) {
      sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = similarity(ft, featureOf(dets[j]), params.weights);
    }
  }
  return associateBySimilarity(sim, params.simThreshold);
}

/// Dynamic iff enough updates have accumulated and filtered planar speed exceeds the threshold.
inline ImmNoise immNoise(const TrackerParams& p) { return {p.quietProcessNoise, p.processNoise, p.modeSwitchProb}; }

inline bool classifyDynamic(const Track& track, const TrackerParams& params) {
  return track.updates >= params.minUpdatesForClassification && track.planarSpeed() > params.dynVelThreshold;
}

/// Propagates an unconfirmed track by the constant-acceleration model and grows
/// its risk region linearly. Returns false once the track has expired.
inline bool compensateOutOfView(Track& track, double dt, const TrackerParams& params) {
  track.imm = immPredict(track.imm, dt, immNoise(params));
  track.kf = track.imm.combined();
  if (dt > 0.0) track.riskSize.array() += params.riskGrowthRate * dt;
  track.coastTime += std::max(dt, 0.0);
  track.matched = false;
  return track.coastTime <= params.maxCoast + 1e-9;
}

/// Multi-object tracker. Owns its tracks; `tracks()` returns a snapshot view.
class Tracker {
 public:
  using Visibility = std::function<bool(const Vec3&)>;

  explicit Tracker(TrackerParams params = {}) : params_(std::move(params)) {}

  const TrackerParams& params() const { return params_; }
  const std::vector<Track>& tracks() const { return tracks_; }
  std::vector<Track>& mutableTracks() { return tracks_; }

  /// One tracking cycle at time `now`, `dt` after the previous one. `visible`
  /// reports whether a position is currently inside the sensor footprint.
  void update(std::span<const Detection> detections, double now, double dt, const Visibility& visible) {
    std::vector<Track> predicted = tracks_;
    for (auto& t : predicted) {
      t.imm = immPredict(t.imm, dt, immNoise(params_));
      t.kf = t.imm.combined();
    }

    const Matching m = associate(predicted, detections, params_);

    std::vector<Track> next;
    next.reserve(tracks_.size() + m.unmatchedDetections.size());
    for (const auto& [ti, di] : m.pairs) {
      Track t = std::move(predicted[ti]);
      const Detection& d = detections[di];
      if (!immUpdate(t.imm, d.pos, params_.measurementNoise)) {
        if (compensateOutOfView(tracks_[ti], dt, params_)) next.push_back(tracks_[ti]);
        continue;
      }
      t.kf = t.imm.combined();
      const double w = params_.sizeSmoothing;
      t.size = (1.0 - w) * t.size + w * (0.5 * d.dim);
      t.riskSize = t.size;
      t.cloudLen = d.cloudLen;
      t.cloudStd = d.cloudStd;
      t.coastTime = 0.0;
      t.inView = true;
      t.matched = true;
      t.updates += 1;
      t.lastSourceId = d.sourceId;
      t.appendHistory(now, t.kf.pos(), params_.historyWindow);
      next.push_back(std::move(t));
    }
    for (std::size_t ti : m.unmatchedTracks) {
      Track t = tracks_[ti];
      if (!t.confirmed(params_)) continue;  // provisional tracks die on their first miss
      if (!compensateOutOfView(t, dt, params_)) continue;
      t.inView = visible ? visible(t.kf.pos()) : false;
      next.push_back(std::move(t));
    }
    for (std::size_t di : m.unmatchedDetections) {
      const Detection& d = detections[di];
      if (!d.pos.allFinite()) continue;
      Track t;
      t.id = nextId_++;
      const double r2 = params_.measurementNoise * params_.measurementNoise;
      t.resetFilter(KalmanState::at(d.pos, std::max(r2, 1e-6), params_.initialVelocityVar, params_.initialAccelVar));
      t.size = 0.5 * d.dim;
      t.riskSize = t.size;
      t.cloudLen = d.cloudLen;
      t.cloudStd = d.cloudStd;
      t.updates = 1;
      t.matched = true;
      t.lastSourceId = d.sourceId;
      t.appendHistory(now, d.pos, params_.historyWindow);
      next.push_back(std::move(t));
    }
    for (auto& t : next) {
      t.dynamic = classifyDynamic(t, params_);
      if (t.planarSpeed() >= 0.05) t.lastHeading = headingOf(t.kf.vel());
    }
    std::sort(next.begin(), next.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
    tracks_ = std::move(next);
  }

 private:
  TrackerParams params_;
  std::vector<Track> tracks_;
  int nextId_ = 0;
};

}  // namespace intentnav
