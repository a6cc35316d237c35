#pragma once

#include "intentnav/common.hpp"
#include "intentnav/tracker.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace intentnav {

struct IntentParams {
  double alpha = 1.0;
  double beta = 0.25;
  double gamma = 1.0;
  double s = 2.0;  // persistence weight, > 1
  double historyWindow = 3.0;
  int nPred = 30;
  double predDt = 0.1;
  double vThresh = 0.3;
  double lambdaInflate = 1.0;
  double linAccMin = -0.5;
  double linAccMax = 0.5;
  double angAccMin = 0.2;  // magnitude
  double angAccMax = 1.0;
  int samplesPerIntent = 5;
  int turnLinSamples = 3;
  int turnAngSamples = 5;
  bool smoothAngle = false;  // 3-step moving average of the motion angle
  int minHistory = 3;
};

struct MotionAngle {
  double theta = 0.0;
  bool confident = false;
};

namespace detail {

inline std::optional<double> turnBetween(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 d1 = b - a;
  const Vec2 d2 = c - b;
  if (d1.squaredNorm() < 1e-18 || d2.squaredNorm() < 1e-18) return std::nullopt;
  const double cross = d1.x() * d2.y() - d1.y() * d2.x();
  return std::atan2(cross, d1.dot(d2));
}

}  // namespace detail

/// Signed planar angle between the last two displacement vectors (+ = left).
/// With `smooth`, averages the last three such angles when available.
inline MotionAngle motionAngle(std::span<const Vec2> history, bool smooth = false) {
  const std::size_t n = history.size();
  if (n < 3) return {};
  const int want = smooth ? 3 : 1;
  double sum = 0.0;
  int used = 0;
  for (int k = 0; k < want && n >= 3 + static_cast<std::size_t>(k); ++k) {
    const std::size_t last = n - 1 - static_cast<std::size_t>(k);
    const auto angle = detail::turnBetween(history[last - 2], history[last - 1], history[last]);
    if (!angle) {
      if (k == 0) return {};
      break;
    }
    sum += *angle;
    ++used;
  }
  return {sum / used, true};
}

inline std::vector<Vec2> planarHistory(const Track& track) {
  std::vector<Vec2> out;
  out.reserve(track.history.size());
  for (const auto& h : track.history) out.push_back(h.pos.head<2>());
  return out;
}

/// Single-step intent likelihood from motion angle and speed, L1-normalized.
inline IntentDistribution rawIntentProbability(double theta, double speed, const IntentParams& params) {
  IntentDistribution d;
  d.p = {std::exp(-params.alpha * theta * theta), params.beta * (1.0 + std::sin(theta)),
         params.beta * (1.0 - std::sin(theta)), 1.0 - std::tanh(params.gamma * std::abs(speed))};
  const double total = d.sum();
  for (auto& x : d.p) x /= total;
  return d;
}

/// One Markov step. The transition matrix is raw replicated across columns,
/// with the row of the previously dominant intent scaled by `s`, then each
/// column normalized; the result is T * prevPosterior. With no previous
/// argmax (first step) no boost is applied.
inline IntentDistribution intentPosterior(const IntentDistribution& prevPosterior, std::optional<Intent> prevArgmax,
                                          const IntentDistribution& raw, double s) {
  Eigen::Matrix4d T;
  for (int r = 0; r < 4; ++r) T.row(r).setConstant(raw.p[static_cast<std::size_t>(r)]);
  if (prevArgmax) T.row(index(*prevArgmax)) *= s;
  for (int c = 0; c < 4; ++c) T.col(c) /= T.col(c).sum();
  const Eigen::Vector4d prior(prevPosterior.p[0], prevPosterior.p[1], prevPosterior.p[2], prevPosterior.p[3]);
  const Eigen::Vector4d post = T * prior;
  IntentDistribution out;
  const double total = post.sum();
  for (int i = 0; i < 4; ++i) out.p[static_cast<std::size_t>(i)] = post[i] / total;
  return out;
}

/// Folds the newest history sample into a track's intent distribution.
inline void updateTrackIntent(Track& track, const IntentParams& params) {
  const auto hist = planarHistory(track);
  const MotionAngle angle = motionAngle(hist, params.smoothAngle);
  const IntentDistribution raw = rawIntentProbability(angle.theta, track.planarSpeed(), params);
  if (track.intentSteps == 0) {
    track.intent = intentPosterior(IntentDistribution::uniform(), std::nullopt, raw, params.s);
  } else {
    track.intent = intentPosterior(track.intent, track.intent.argmax(), raw, params.s);
  }
  track.intentSteps += 1;
}

}  // namespace intentnav
