#pragma once

#include "intentnav/common.hpp"
#include "intentnav/ellipsoid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace intentnav {

enum class InnerSolver { kGaussNewton, kGradientDescent };

struct MpcParams {
  int N = 30;
  double dt = 0.1;
  double lambdaU = 0.1;
  Vec3 uMin = Vec3::Constant(-3.0);
  Vec3 uMax = Vec3::Constant(3.0);
  double penaltyInit = 10.0;
  double penaltyGrowth = 5.0;
  int maxOuterIters = 5;
  int maxInnerIters = 100;
  double feasTol = 1e-3;
  /// The penalty activates below this residual so the converged plan keeps a
  /// little clearance instead of sitting exactly on the boundary.
  double penaltyMargin = 0.02;
  InnerSolver solver = InnerSolver::kGaussNewton;
};

/// N+1 desired states sampled at the MPC step.
struct ReferenceTrajectory {
  std::vector<RobotState> states;
};

/// Static ellipsoids apply at every step; each dynamic entry holds N+1 per-step ellipsoids.
struct ObstacleConstraintSet {
  std::vector<Ellipsoid> statics;
  std::vector<std::vector<Ellipsoid>> dynamics;

  bool empty() const { return statics.empty() && dynamics.empty(); }
};

struct ScoreBreakdown {
  double consistency = 0.0;
  double detour = 0.0;
  double safety = 0.0;
};

struct PlanResult {
  std::vector<RobotState> states;
  std::vector<Vec3> controls;
  bool feasible = false;
  bool solverFailed = false;
  double objective = 0.0;
  double minResidual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  double rawScore = 0.0;
  double finalScore = 0.0;
  double combinationProb = 1.0;
  ScoreBreakdown scoreBreakdown;
};

inline std::vector<RobotState> rollout(const RobotState& x0, std::span<const Vec3> controls, double dt) {
  std::vector<RobotState> xs;
  xs.reserve(controls.size() + 1);
  xs.push_back(x0);
  for (const auto& u : controls) xs.push_back(integrate(xs.back(), u, dt));
  return xs;
}

/// Smallest ellipsoid residual over steps 1..N and all obstacles. The initial
/// state is given, not decided, so it is excluded.
inline double minConstraintResidual(std::span<const RobotState> states, const ObstacleConstraintSet& obs) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < states.size(); ++k) {
    for (const auto& e : obs.statics) worst = std::min(worst, ellipsoidResidual(states[k].p, e));
    for (const auto& track : obs.dynamics) {
      if (k < track.size()) worst = std::min(worst, ellipsoidResidual(states[k].p, track[k]));
    }
  }
  return worst;
}

/// Full deceleration to rest within the control bounds.
inline PlanResult brakingPlan(const RobotState& x0, const MpcParams& params) {
  PlanResult r;
  r.states.push_back(x0);
  for (int k = 0; k < params.N; ++k) {
    const RobotState& x = r.states.back();
    const Vec3 u = (-x.v / params.dt).cwiseMax(params.uMin).cwiseMin(params.uMax);
    r.controls.push_back(u);
    r.states.push_back(integrate(x, u, params.dt));
  }
  r.feasible = false;
  return r;
}

namespace detail {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

inline Vec6 stack(const RobotState& x) {
  Vec6 s;
  s << x.p, x.v;
  return s;
}

class MpcProblem {
 public:
  MpcProblem(const RobotState& x0, const ReferenceTrajectory& ref, const ObstacleConstraintSet& obs, const MpcParams& params)
      : x0_(x0), ref_(ref), obs_(obs), p_(params) {
    const double dt = p_.dt;
    A_.setIdentity();
    A_.block<3, 3>(0, 3) = dt * Eigen::Matrix3d::Identity();
    B_.setZero();
    B_.block<3, 3>(0, 0) = 0.5 * dt * dt * Eigen::Matrix3d::Identity();
    B_.block<3, 3>(3, 0) = dt * Eigen::Matrix3d::Identity();
  }

  std::vector<Vec3> clampAll(std::vector<Vec3> u) const {
    for (auto& x : u) x = clamp(x);
    return u;
  }

  Vec3 clamp(const Vec3& u) const { return u.cwiseMax(p_.uMin).cwiseMin(p_.uMax); }

  double cost(std::span<const RobotState> xs, std::span<const Vec3> us, double mu) const {
    double j = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      j += (stack(xs[k]) - stack(ref_.states[k])).squaredNorm();
      if (k == 0) continue;
      forEachResidual(k, xs[k].p, [&](double r, const Ellipsoid&) {
        const double viol = std::min(0.0, r - p_.penaltyMargin);
        j += mu * viol * viol;
      });
    }
    for (const auto& u : us) j += p_.lambdaU * u.squaredNorm();
    return j;
  }

  /// Gradient and Gauss-Newton Hessian of the per-state cost at step k.
  void stateTerms(std::size_t k, const RobotState& x, double mu, Vec6& q, Mat6& Q) const {
    q = 2.0 * (stack(x) - stack(ref_.states[k]));
    Q = 2.0 * Mat6::Identity();
    if (k == 0) return;
    forEachResidual(k, x.p, [&](double r, const Ellipsoid& e) {
      const double viol = r - p_.penaltyMargin;
      if (viol >= 0.0) return;
      const Vec3 g = ellipsoidResidualGradient(x.p, e);
      q.head<3>() += 2.0 * mu * viol * g;
      Q.topLeftCorner<3, 3>() += 2.0 * mu * g * g.transpose();
    });
  }

  struct Iterate {
    std::vector<Vec3> u;
    std::vector<RobotState> x;
    double j = 0.0;
  };

  Iterate evaluate(std::vector<Vec3> u, double mu) const {
    Iterate it;
    it.x = rollout(x0_, u, p_.dt);
    it.j = cost(it.x, u, mu);
    it.u = std::move(u);
    return it;
  }

  /// Gauss-Newton step computed by a Riccati sweep over the linear dynamics,
  /// projected onto the control box inside a backtracking line search.
  bool gaussNewtonStep(Iterate& cur, double mu) const {
    const std::size_t N = cur.u.size();
    std::vector<Mat36> K(N);
    std::vector<Vec3> kff(N);
    Vec6 q;
    Mat6 Q;
    stateTerms(N, cur.x[N], mu, q, Q);
    Mat6 V = Q;
    Vec6 v = q;
    double expected = 0.0;
    for (std::size_t kk = N; kk-- > 0;) {
      const Vec3 Qu = 2.0 * p_.lambdaU * cur.u[kk] + B_.transpose() * v;
      const Eigen::Matrix3d Quu = 2.0 * p_.lambdaU * Eigen::Matrix3d::Identity() + B_.transpose() * V * B_;
      const Mat36 Qux = B_.transpose() * V * A_;
      const Eigen::LDLT<Eigen::Matrix3d> ldlt(Quu);
      K[kk] = -ldlt.solve(Qux);
      kff[kk] = -ldlt.solve(Qu);
      expected += kff[kk].dot(Qu);
      if (kk == 0) break;
      stateTerms(kk, cur.x[kk], mu, q, Q);
      V = Q + A_.transpose() * V * A_ + Qux.transpose() * K[kk];
      V = 0.5 * (V + V.transpose()).eval();
      v = q + A_.transpose() * v + Qux.transpose() * kff[kk];
    }
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      std::vector<Vec3> u(N);
      RobotState x = x0_;
      for (std::size_t k = 0; k < N; ++k) {
        const Vec6 dx = stack(x) - stack(cur.x[k]);
        u[k] = clamp(cur.u[k] + alpha * kff[k] + K[k] * dx);
        x = integrate(x, u[k], p_.dt);
      }
      Iterate next = evaluate(std::move(u), mu);
      if (!std::isfinite(next.j)) return false;
      if (next.j < cur.j - 1e-6 * alpha * std::abs(expected)) {
        cur = std::move(next);
        return true;
      }
    }
    return false;
  }

  /// Projected gradient step; the gradient comes from the adjoint recursion.
  bool gradientStep(Iterate& cur, double mu, double& stepSize) const {
    const std::size_t N = cur.u.size();
    std::vector<Vec3> grad(N);
    Vec6 q;
    Mat6 Q;
    stateTerms(N, cur.x[N], mu, q, Q);
    Vec6 lambda = q;
    for (std::size_t kk = N; kk-- > 0;) {
      grad[kk] = 2.0 * p_.lambdaU * cur.u[kk] + B_.transpose() * lambda;
      if (kk == 0) break;
      stateTerms(kk, cur.x[kk], mu, q, Q);
      lambda = q + A_.transpose() * lambda;
    }
    double alpha = stepSize * 2.0;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      std::vector<Vec3> u(N);
      double decrease = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        u[k] = clamp(cur.u[k] - alpha * grad[k]);
        decrease += grad[k].dot(cur.u[k] - u[k]);
      }
      Iterate next = evaluate(std::move(u), mu);
      if (!std::isfinite(next.j)) return false;
      if (decrease > 0.0 && next.j <= cur.j - 1e-4 * decrease) {
        cur = std::move(next);
        stepSize = alpha;
        return true;
      }
    }
    return false;
  }

  template <typename Fn>
  void forEachResidual(std::size_t k, const Vec3& p, Fn&& fn) const {
    for (const auto& e : obs_.statics) fn(ellipsoidResidual(p, e), e);
    for (const auto& track : obs_.dynamics) {
      if (k < track.size()) fn(ellipsoidResidual(p, track[k]), track[k]);
    }
  }

 private:
  RobotState x0_;
  const ReferenceTrajectory& ref_;
  const ObstacleConstraintSet& obs_;
  MpcParams p_;
  Mat6 A_;
  Mat63 B_;
};

}  // namespace detail

/// Single-shooting MPC: decision variables are the N controls, states follow
/// the double integrator exactly. Control bounds are enforced by projection and
/// collision constraints by an escalating exterior quadratic penalty.
inline PlanResult solveMpc(const RobotState& x0, const ReferenceTrajectory& ref, const ObstacleConstraintSet& obs,
                           const MpcParams& params, std::span<const Vec3> warmStart = {}) {
  if (params.N < 1 || !(params.dt > 0.0)) throw std::invalid_argument("solveMpc: bad horizon");
  if (ref.states.size() != static_cast<std::size_t>(params.N) + 1) {
    throw std::invalid_argument("solveMpc: reference must have N+1 states");
  }
  if (!x0.p.allFinite() || !x0.v.allFinite()) {
    PlanResult failed = brakingPlan(RobotState{}, params);
    failed.solverFailed = true;
    return failed;
  }
  const detail::MpcProblem problem(x0, ref, obs, params);
  std::vector<Vec3> u0(static_cast<std::size_t>(params.N), Vec3::Zero());
  for (std::size_t k = 0; k < u0.size() && k < warmStart.size(); ++k) u0[k] = warmStart[k];

  int iterations = 0;
  const auto solveFrom = [&](std::vector<Vec3> start) {
    double mu = params.penaltyInit;
    auto it = problem.evaluate(problem.clampAll(std::move(start)), mu);
    double residual = minConstraintResidual(it.x, obs);
    for (int outer = 0; outer < params.maxOuterIters; ++outer) {
      it.j = problem.cost(it.x, it.u, mu);
      double stepSize = 1e-2;
      for (int inner = 0; inner < params.maxInnerIters; ++inner) {
        if (!std::isfinite(it.j)) break;
        const double before = it.j;
        const bool moved = params.solver == InnerSolver::kGaussNewton ? problem.gaussNewtonStep(it, mu)
                                                                       : problem.gradientStep(it, mu, stepSize);
        ++iterations;
        if (!moved || before - it.j <= 1e-10 * (1.0 + before)) break;
      }
      if (!std::isfinite(it.j)) break;
      residual = minConstraintResidual(it.x, obs);
      if (residual >= -params.feasTol) break;
      mu *= params.penaltyGrowth;
    }
    return std::make_pair(std::move(it), residual);
  };

  auto [cur, minResidual] = solveFrom(u0);
  if (std::isfinite(cur.j) && minResidual < -params.feasTol) {
    // A reference aimed straight through an obstacle center leaves the penalty
    // gradient with no lateral component. Restart once with a sideways bias.
    Vec3 along = ref.states.back().p - ref.states.front().p;
    along.z() = 0.0;
    Vec3 side = along.norm() > 1e-9 ? Vec3(-along.y(), along.x(), 0.0).normalized() : Vec3(0.0, 1.0, 0.0);
    const std::size_t half = u0.size() / 2;
    bool curFeasible = false;
    for (double sign : {1.0, -1.0}) {
      std::vector<Vec3> biased = u0;
      for (std::size_t k = 0; k < biased.size(); ++k) biased[k] += (k < half ? 0.3 : -0.3) * sign * side;
      auto [alt, altResidual] = solveFrom(std::move(biased));
      if (!std::isfinite(alt.j)) continue;
      const bool altFeasible = altResidual >= -params.feasTol;
      const bool better = curFeasible ? altFeasible && problem.cost(alt.x, alt.u, 0.0) < problem.cost(cur.x, cur.u, 0.0)
                                      : altFeasible || altResidual > minResidual;
      if (better) {
        cur = std::move(alt);
        minResidual = altResidual;
        curFeasible = altFeasible;
      }
    }
  }

  if (!std::isfinite(cur.j)) {
    PlanResult failed = brakingPlan(x0, params);
    failed.solverFailed = true;
    failed.iterations = iterations;
    return failed;
  }
  PlanResult result;
  result.states = std::move(cur.x);
  result.controls = std::move(cur.u);
  result.objective = problem.cost(result.states, result.controls, 0.0);
  result.minResidual = minResidual;
  result.feasible = minResidual >= -params.feasTol;
  result.iterations = iterations;
  return result;
}

}  // namespace intentnav
