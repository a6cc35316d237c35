#pragma once

#include "intentnav/common.hpp"

#include <array>
#include <cmath>

namespace intentnav {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Constant-acceleration Kalman filter over (pos, vel, accel), 3 axes each.
struct KalmanState {
  Vec9 x = Vec9::Zero();
  Mat9 P = Mat9::Identity();

  Vec3 pos() const { return x.segment<3>(0); }
  Vec3 vel() const { return x.segment<3>(3); }
  Vec3 acc() const { return x.segment<3>(6); }

  static KalmanState at(const Vec3& position, double posVar, double velVar, double accVar) {
    KalmanState s;
    s.x.segment<3>(0) = position;
    s.P.setZero();
    s.P.diagonal() << Vec3::Constant(posVar), Vec3::Constant(velVar), Vec3::Constant(accVar);
    return s;
  }
};

inline Mat9 caTransition(double dt) {
  Mat9 F = Mat9::Identity();
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  F.block<3, 3>(0, 3) = dt * I;
  F.block<3, 3>(0, 6) = 0.5 * dt * dt * I;
  F.block<3, 3>(3, 6) = dt * I;
  return F;
}

/// Continuous white noise driving the acceleration state with intensity
/// accelSigma^2 per second, integrated exactly over dt.
inline Mat9 caProcessNoise(double dt, double accelSigma) {
  const double q = accelSigma * accelSigma;
  const double d2 = dt * dt;
  const double d3 = d2 * dt;
  const double d4 = d3 * dt;
  const double d5 = d4 * dt;
  Eigen::Matrix3d block;
  block << d5 / 20.0, d4 / 8.0, d3 / 6.0,
           d4 / 8.0, d3 / 3.0, d2 / 2.0,
           d3 / 6.0, d2 / 2.0, dt;
  Mat9 Q = Mat9::Zero();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) Q.block<3, 3>(3 * r, 3 * c) = q * block(r, c) * Eigen::Matrix3d::Identity();
  }
  return Q;
}

/// Time update. dt <= 0 leaves the state untouched.
inline KalmanState kfPredict(KalmanState s, double dt, double accelSigma) {
  if (!(dt > 0.0)) return s;
  const Mat9 F = caTransition(dt);
  s.x = F * s.x;
  s.P = F * s.P * F.transpose() + caProcessNoise(dt, accelSigma);
  s.P = 0.5 * (s.P + s.P.transpose());
  return s;
}

/// Position measurement update (Joseph form). Returns false and leaves `s`
/// unchanged when the measurement is not finite.
inline bool kfUpdate(KalmanState& s, const Vec3& measured, double measurementSigma) {
  if (!measured.allFinite()) return false;
  Eigen::Matrix<double, 3, 9> H = Eigen::Matrix<double, 3, 9>::Zero();
  H.block<3, 3>(0, 0).setIdentity();
  const Eigen::Matrix3d R = Eigen::Matrix3d::Identity() * (measurementSigma * measurementSigma);
  Eigen::Matrix3d S = H * s.P * H.transpose() + R;
  S.diagonal().array() += 1e-12;
  const Eigen::Matrix<double, 9, 3> K = s.P * H.transpose() * S.inverse();
  const Vec3 innovation = measured - H * s.x;
  s.x += K * innovation;
  const Mat9 IKH = Mat9::Identity() - K * H;
  s.P = IKH * s.P * IKH.transpose() + K * R * K.transpose();
  s.P = 0.5 * (s.P + s.P.transpose());
  return true;
}

/// Two constant-acceleration filters that differ only in process noise,
/// combined by interacting multiple models. Mode 0 is the quiet model for
/// steady motion, mode 1 the agile one for maneuvers.
struct ImmState {
  std::array<KalmanState, 2> modes;
  std::array<double, 2> prob{0.5, 0.5};

  static ImmState from(const KalmanState& s) {
    ImmState m;
    m.modes = {s, s};
    return m;
  }

  KalmanState combined() const {
    KalmanState out;
    out.x = prob[0] * modes[0].x + prob[1] * modes[1].x;
    out.P.setZero();
    for (std::size_t j = 0; j < 2; ++j) {
      const Vec9 d = modes[j].x - out.x;
      out.P += prob[j] * (modes[j].P + d * d.transpose());
    }
    return out;
  }
};

struct ImmNoise {
  double quietSigma = 0.05;
  double agileSigma = 1.0;
  double switchProb = 0.05;  // per cycle
};

/// Mixing plus per-mode time update. `prob` becomes the predicted mode
/// probability. dt <= 0 leaves the state untouched.
inline ImmState immPredict(const ImmState& s, double dt, const ImmNoise& noise) {
  if (!(dt > 0.0)) return s;
  const double stay = 1.0 - noise.switchProb;
  const double pi[2][2] = {{stay, noise.switchProb}, {noise.switchProb, stay}};
  ImmState out;
  for (std::size_t j = 0; j < 2; ++j) {
    const double c = pi[0][j] * s.prob[0] + pi[1][j] * s.prob[1];
    out.prob[j] = c;
    const double w0 = c > 0.0 ? pi[0][j] * s.prob[0] / c : 0.5;
    const double w1 = 1.0 - w0;
    KalmanState mixed;
    mixed.x = w0 * s.modes[0].x + w1 * s.modes[1].x;
    mixed.P.setZero();
    const double w[2] = {w0, w1};
    for (std::size_t i = 0; i < 2; ++i) {
      const Vec9 d = s.modes[i].x - mixed.x;
      mixed.P += w[i] * (s.modes[i].P + d * d.transpose());
    }
    out.modes[j] = kfPredict(mixed, dt, j == 0 ? noise.quietSigma : noise.agileSigma);
  }
  return out;
}

/// Per-mode measurement update and mode probability update from the
/// innovation likelihoods. Returns false and leaves `s` unchanged when the
/// measurement is not finite.
inline bool immUpdate(ImmState& s, const Vec3& measured, double measurementSigma) {
  if (!measured.allFinite()) return false;
  const double r2 = measurementSigma * measurementSigma;
  std::array<double, 2> logLik{};
  for (std::size_t j = 0; j < 2; ++j) {
    Eigen::Matrix3d S = s.modes[j].P.topLeftCorner<3, 3>();
    S.diagonal().array() += r2 + 1e-12;
    const Vec3 nu = measured - s.modes[j].pos();
    const Eigen::LLT<Eigen::Matrix3d> llt(S);
    const Eigen::Matrix3d L = llt.matrixL();
    logLik[j] = -0.5 * nu.dot(llt.solve(nu)) - L.diagonal().array().log().sum();
    kfUpdate(s.modes[j], measured, measurementSigma);
  }
  const double top = std::max(logLik[0], logLik[1]);
  double total = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    s.prob[j] *= std::exp(logLik[j] - top);
    total += s.prob[j];
  }
  if (total > 0.0 && std::isfinite(total)) {
    for (auto& p : s.prob) p /= total;
  } else {
    s.prob = {0.5, 0.5};
  }
  return true;
}

}  // namespace intentnav
