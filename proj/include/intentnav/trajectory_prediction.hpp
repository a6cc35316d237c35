#pragma once

#include "intentnav/common.hpp"
#include "intentnav/intent.hpp"
#include "intentnav/tracker.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace intentnav {

/// Constant linear (m/s^2) and angular (rad/s^2) acceleration pair.
struct ControlSample {
  double linAcc = 0.0;
  double angAcc = 0.0;
};

/// Entry i holds the obstacle at time (i + 1) * predDt.
struct IntentPrediction {
  Intent intent = Intent::kStop;
  std::vector<Vec3> positions;
  std::vector<Vec3> riskSizes;
};

struct PredictionSet {
  std::array<IntentPrediction, 4> byIntent;
  bool lowConfidence = false;

  const IntentPrediction& operator[](Intent intent) const { return byIntent[static_cast<std::size_t>(index(intent))]; }
};

namespace detail {

inline std::vector<double> evenGrid(double lo, double hi, int count) {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) {
    out.push_back(0.5 * (lo + hi));
    return out;
  }
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
  return out;
}

inline bool insideAny(std::span<const StaticBox> boxes, const Vec3& p) {
  for (const auto& b : boxes) {
    if (b.contains(Vec3(p.x(), p.y(), b.center.z()))) return true;
  }
  return false;
}

}  // namespace detail

/// Forward intent: linear accelerations spanning the configured range around `a`.
inline std::vector<ControlSample> linearControlSet(double a, const IntentParams& params) {
  std::vector<ControlSample> out;
  for (double lin : detail::evenGrid(a + params.linAccMin, a + params.linAccMax, params.samplesPerIntent)) {
    out.push_back({lin, 0.0});
  }
  return out;
}

/// Left/right intents: linear x angular acceleration grid, angular sign fixed by the intent.
inline std::vector<ControlSample> turningControlSet(double a, Intent intent, const IntentParams& params) {
  const double sign = intent == Intent::kRight ? -1.0 : 1.0;
  std::vector<ControlSample> out;
  for (double lin : detail::evenGrid(a + params.linAccMin, a + params.linAccMax, params.turnLinSamples)) {
    for (double ang : detail::evenGrid(params.angAccMin, params.angAccMax, params.turnAngSamples)) {
      out.push_back({lin, sign * ang});
    }
  }
  return out;
}

/// Unicycle rollout under constant control. Speed never goes negative; the
/// rollout freezes at the last free point once the next one would enter a static box.
inline std::vector<Vec3> propagateConstControl(const Vec3& p, double speed, double heading, const ControlSample& control,
                                               int nPred, double predDt, std::span<const StaticBox> staticBoxes) {
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(std::max(nPred, 0)));
  Vec3 pos = p;
  double v = std::max(speed, 0.0);
  double omega = 0.0;
  double psi = heading;
  bool blocked = false;
  for (int i = 0; i < nPred; ++i) {
    if (!blocked) {
      v = std::max(0.0, v + control.linAcc * predDt);
      omega += control.angAcc * predDt;
      psi += omega * predDt;
      const Vec3 candidate = pos + v * predDt * Vec3(std::cos(psi), std::sin(psi), 0.0);
      if (detail::insideAny(staticBoxes, candidate)) {
        blocked = true;
      } else {
        pos = candidate;
      }
    }
    out.push_back(pos);
  }
  return out;
}

/// Tangential acceleration from the speed trend over the track history: mean
/// speed across the second half minus the first, over the time between the
/// half midpoints. Much less noisy than the filter's acceleration state.
/// Falls back to the filter when the history spans fewer than 5 points.
inline double historyAcceleration(const Track& track) {
  const auto& h = track.history;
  if (h.size() < 5) {
    const double speed = track.planarSpeed();
    if (speed < 1e-9) return 0.0;
    return track.kf.acc().head<2>().dot(track.kf.vel().head<2>() / speed);
  }
  const std::size_t last = h.size() - 1;
  const std::size_t mid = last / 2;
  const double t1 = h[mid].t - h.front().t;
  const double t2 = h[last].t - h[mid].t;
  if (t1 <= 0.0 || t2 <= 0.0) return 0.0;
  const double v1 = (h[mid].pos - h.front().pos).head<2>().norm() / t1;
  const double v2 = (h[last].pos - h[mid].pos).head<2>().norm() / t2;
  return (v2 - v1) / (0.5 * (t1 + t2));
}

/// Kinematic summary of a track used as the rollout initial condition.
struct ObstacleKinematics {
  Vec3 pos = Vec3::Zero();
  double speed = 0.0;
  double heading = 0.0;
  double linAcc = 0.0;
  Vec3 size = Vec3::Constant(0.3);

  static ObstacleKinematics of(const Track& track) {
    ObstacleKinematics k;
    k.pos = track.kf.pos();
    k.speed = track.planarSpeed();
    k.heading = k.speed >= 0.05 ? headingOf(track.kf.vel()) : track.lastHeading;
    k.linAcc = historyAcceleration(track);
    k.size = track.riskSize;
    return k;
  }
};

inline IntentPrediction stopPrediction(const ObstacleKinematics& o, const IntentParams& params) {
  IntentPrediction pred;
  pred.intent = Intent::kStop;
  const double growth = std::min(o.speed, params.vThresh);
  for (int n = 1; n <= params.nPred; ++n) {
    pred.positions.push_back(o.pos);
    Vec3 risk = o.size;
    risk.head<2>().array() += n * params.predDt * growth;
    pred.riskSizes.push_back(risk);
  }
  return pred;
}

/// Mean of the sampled rollouts with per-axis std inflation. A mean that
/// crosses a static box is swapped for the sample nearest to it.
inline IntentPrediction sampledPrediction(Intent intent, const ObstacleKinematics& o,
                                          std::span<const ControlSample> controls, std::span<const StaticBox> staticBoxes,
                                          const IntentParams& params) {
  IntentPrediction pred;
  pred.intent = intent;
  const auto n = static_cast<std::size_t>(params.nPred);
  std::vector<std::vector<Vec3>> samples;
  samples.reserve(controls.size());
  for (const auto& c : controls) {
    samples.push_back(propagateConstControl(o.pos, o.speed, o.heading, c, params.nPred, params.predDt, staticBoxes));
  }
  pred.positions.assign(n, o.pos);
  pred.riskSizes.assign(n, o.size);
  if (samples.empty()) return pred;
  const double m = static_cast<double>(samples.size());
  bool meanBlocked = false;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 mean = Vec3::Zero();
    for (const auto& s : samples) mean += s[i];
    mean /= m;
    Vec3 var = Vec3::Zero();
    for (const auto& s : samples) var += (s[i] - mean).cwiseAbs2();
    var /= m;
    pred.positions[i] = mean;
    Vec3 risk = o.size;
    risk.head<2>() += params.lambdaInflate * var.head<2>().cwiseSqrt();
    pred.riskSizes[i] = risk;
    meanBlocked = meanBlocked || detail::insideAny(staticBoxes, mean);
  }
  if (meanBlocked) {
    std::size_t best = 0;
    double bestDist = 1e300;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += (samples[k][i] - pred.positions[i]).norm();
      if (d < bestDist) {
        bestDist = d;
        best = k;
      }
    }
    pred.positions = samples[best];
  }
  return pred;
}

inline PredictionSet predictFromKinematics(const ObstacleKinematics& o, std::span<const StaticBox> staticBoxes,
                                           const IntentParams& params, bool lowConfidence = false) {
  PredictionSet set;
  set.lowConfidence = lowConfidence;
  if (lowConfidence) {
    for (Intent intent : kAllIntents) {
      auto p = stopPrediction(o, params);
      p.intent = intent;
      set.byIntent[static_cast<std::size_t>(index(intent))] = std::move(p);
    }
    return set;
  }
  const auto forward = linearControlSet(o.linAcc, params);
  const auto left = turningControlSet(o.linAcc, Intent::kLeft, params);
  const auto right = turningControlSet(o.linAcc, Intent::kRight, params);
  set.byIntent[0] = sampledPrediction(Intent::kForward, o, forward, staticBoxes, params);
  set.byIntent[1] = sampledPrediction(Intent::kLeft, o, left, staticBoxes, params);
  set.byIntent[2] = sampledPrediction(Intent::kRight, o, right, staticBoxes, params);
  set.byIntent[3] = stopPrediction(o, params);
  return set;
}

/// Per-intent future positions and risk sizes for all four intents. Tracks
/// without enough history fall back to the stop prediction for every intent.
inline PredictionSet predictTrajectories(const Track& track, std::span<const StaticBox> staticBoxes,
                                         const IntentParams& params) {
  const bool lowConfidence = static_cast<int>(track.history.size()) < params.minHistory;
  return predictFromKinematics(ObstacleKinematics::of(track), staticBoxes, params, lowConfidence);
}

/// Constant-velocity extrapolation baseline on the same time grid.
inline std::vector<Vec3> linearExtrapolation(const Track& track, int nPred, double predDt) {
  std::vector<Vec3> out;
  Vec3 v = track.kf.vel();
  v.z() = 0.0;
  for (int n = 1; n <= nPred; ++n) out.push_back(track.kf.pos() + n * predDt * v);
  return out;
}

}  // namespace intentnav
