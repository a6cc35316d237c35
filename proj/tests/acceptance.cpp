// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any hard criterion fails. Timing (criterion 9) only warns.
//
// Usage: acceptance [suite.json]

#include "intentnav/combinations.hpp"
#include "intentnav/intent.hpp"
#include "intentnav/intent_planner.hpp"
#include "intentnav/mpc.hpp"
#include "intentnav/random.hpp"
#include "intentnav/report.hpp"
#include "intentnav/suite.hpp"
#include "intentnav/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace intentnav;

namespace {

// Pinned tolerances.
constexpr double kPredAblationRatio = 0.70;  // full / no-pred collisions, mid density
constexpr double kAdeRatio = 0.70;           // intent / linear, arcs
constexpr double kFdeRatio = 0.70;
constexpr int kMinPredictionEvents = 100;
constexpr int kMinAblationSeeds = 20;
constexpr double kTrackingRms = 1e-3;
constexpr double kRecursionTol = 1e-12;
constexpr double kFeasTol = 1e-3;
constexpr double kSumTol = 1e-9;
constexpr double kPosteriorTol = 5e-5;  // 4 decimals
constexpr double kMirrorTol = 1e-9;
constexpr double kVelocityError = 0.1;  // m/s after 30 updates
constexpr double kMpcSolveMs = 50.0;
constexpr double kPlanCycleMs = 250.0;

int hardFailures = 0;

void emit(int id, const std::string& name, bool pass, const std::string& detail, bool soft = false) {
  const char* tag = pass ? "PASS" : (soft ? "WARN" : "FAIL");
  std::printf("[%s] %2d %-28s %s\n", tag, id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass && !soft) ++hardFailures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const VariantRow* findRow(const MetricsReport& r, const std::string& scenario, const std::string& variant) {
  for (const auto& v : r.variants) {
    if (v.scenario == scenario && v.variant == variant) return &v;
  }
  return nullptr;
}

const PredictionClassStats* findClass(const MetricsReport& r, const std::string& scenario, const std::string& cls) {
  for (const auto& p : r.prediction) {
    if (p.scenario == scenario && p.scenarioClass == cls) return &p;
  }
  return nullptr;
}

// ---- criteria 1-4 -------------------------------------------------------

void checkAblations(const MetricsReport& r, int seeds) {
  {
    const auto* full = findRow(r, "mid", "full");
    const auto* base = findRow(r, "mid", "no-pred");
    bool ok = full && base && seeds >= kMinAblationSeeds && base->collisions > 0;
    std::string detail = "missing mid rows";
    if (full && base) {
      const double ratio = base->collisions > 0 ? static_cast<double>(full->collisions) / base->collisions : 0.0;
      ok = ok && ratio <= kPredAblationRatio;
      detail = fmt("mid full %d / no-pred %d = %.1f%% (<= %.0f%%, %d seeds)", full->collisions, base->collisions,
                   100.0 * ratio, 100.0 * kPredAblationRatio, seeds);
    }
    emit(1, "prediction ablation", ok, detail);
  }
  {
    const auto* full = findRow(r, "high", "full");
    const auto* noSafety = findRow(r, "high", "no-safety");
    const bool ok = full && noSafety && full->collisions <= noSafety->collisions;
    emit(2, "safety-score ablation", ok,
         full && noSafety ? fmt("high full %d <= no-safety %d (%d seeds)", full->collisions, noSafety->collisions, seeds)
                          : std::string("missing high rows"));
  }
  {
    const auto* c = findClass(r, "eval-arcs", "without-static");
    bool ok = c != nullptr;
    std::string detail = "missing eval-arcs";
    if (c) {
      const double ade = c->intentAde / c->linearAde;
      const double fde = c->intentFde / c->linearFde;
      ok = c->events >= kMinPredictionEvents && ade <= kAdeRatio && fde <= kFdeRatio;
      detail = fmt("events %d, ADE %.3f/%.3f = %.1f%%, FDE %.3f/%.3f = %.1f%% (<= %.0f%%)", c->events, c->intentAde,
                   c->linearAde, 100.0 * ade, c->intentFde, c->linearFde, 100.0 * fde, 100.0 * kAdeRatio);
    }
    emit(3, "prediction accuracy", ok, detail);
  }
  {
    const auto* with = findClass(r, "eval-wallturn", "with-static");
    const auto* without = findClass(r, "eval-wallturn", "without-static");
    const bool ok = with && without && with->intentAde <= without->intentAde;
    emit(4, "static-obstacle effect", ok,
         with && without ? fmt("intent ADE with-static %.3f <= without-static %.3f", with->intentAde, without->intentAde)
                         : std::string("missing eval-wallturn classes"));
  }
}

// ---- criterion 5 --------------------------------------------------------

double independentResidual(const Vec3& p, const Ellipsoid& e) {
  const Vec3 d = p - e.center;
  const double x = std::cos(e.phi) * d.x() + std::sin(e.phi) * d.y();
  const double y = -std::sin(e.phi) * d.x() + std::cos(e.phi) * d.y();
  return std::pow(x / e.a, 2) + std::pow(y / e.b, 2) + std::pow(d.z() / e.c, 2) - 1.0;
}

void checkMpc() {
  MpcParams p;
  double worstRms = 0.0;
  double worstRecursion = 0.0;
  double worstFeasible = std::numeric_limits<double>::infinity();
  int feasibleCount = 0;
  auto rng = makeStream(501, Stream::kTest);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  for (int trial = 0; trial < 50; ++trial) {
    const RobotState x0{Vec3(5 + u(rng), 5 + u(rng), 1), Vec3(u(rng), u(rng), 0)};
    ReferenceTrajectory ref;
    for (int k = 0; k <= p.N; ++k) ref.states.push_back({x0.p + k * p.dt * x0.v, x0.v});
    const auto free = solveMpc(x0, ref, {}, p);
    double sq = 0.0;
    for (std::size_t k = 0; k < free.states.size(); ++k) sq += (free.states[k].p - ref.states[k].p).squaredNorm();
    worstRms = std::max(worstRms, std::sqrt(sq / static_cast<double>(free.states.size())));

    ObstacleConstraintSet obs;
    for (int i = 0; i < 3; ++i) {
      obs.statics.push_back(boxToEllipsoid(Vec3(6.5 + 2 * u(rng), 5 + u(rng), 1), Vec3(0.2, 0.3, 1), u(rng)));
    }
    std::vector<Ellipsoid> moving;
    const double lane = 5 + 0.5 * u(rng);
    for (int k = 0; k <= p.N; ++k) moving.push_back({Vec3(9 - 0.1 * k, lane, 1), 0.6, 0.6, 1.5, 0.0});
    obs.dynamics.push_back(moving);
    const auto r = solveMpc(x0, ref, obs, p);
    for (const auto* plan : {&free, &r}) {
      for (std::size_t k = 1; k < plan->states.size(); ++k) {
        const RobotState e = integrate(plan->states[k - 1], plan->controls[k - 1], p.dt);
        worstRecursion = std::max({worstRecursion, (e.p - plan->states[k].p).cwiseAbs().maxCoeff(),
                                   (e.v - plan->states[k].v).cwiseAbs().maxCoeff()});
      }
    }
    if (!r.feasible) continue;
    ++feasibleCount;
    for (std::size_t k = 1; k < r.states.size(); ++k) {
      for (const auto& e : obs.statics) worstFeasible = std::min(worstFeasible, independentResidual(r.states[k].p, e));
      for (const auto& track : obs.dynamics) {
        worstFeasible = std::min(worstFeasible, independentResidual(r.states[k].p, track[k]));
      }
    }
  }
  const bool ok = worstRms < kTrackingRms && worstRecursion < kRecursionTol && feasibleCount > 0 &&
                  worstFeasible >= -kFeasTol;
  emit(5, "MPC correctness", ok,
       fmt("tracking RMS %.2e (< %.0e), recursion %.2e (< %.0e), min residual %.2e over %d feasible (>= -%.0e)",
           worstRms, kTrackingRms, worstRecursion, kRecursionTol, worstFeasible, feasibleCount, kFeasTol));
}

// ---- criterion 6 --------------------------------------------------------

void checkIntentMath() {
  const IntentParams params;
  auto rng = makeStream(601, Stream::kTest);
  std::uniform_real_distribution<double> theta(-kPi, kPi);
  std::uniform_real_distribution<double> speed(0.0, 3.0);
  double worstSum = 0.0, worstMirror = 0.0, minEntry = 1.0;
  for (int i = 0; i < 10000; ++i) {
    const double th = theta(rng);
    const double v = speed(rng);
    const auto d = rawIntentProbability(th, v, params);
    const auto m = rawIntentProbability(-th, v, params);
    worstSum = std::max(worstSum, std::abs(d.sum() - 1.0));
    for (double x : d.p) minEntry = std::min(minEntry, x);
    worstMirror = std::max({worstMirror, std::abs(d[Intent::kLeft] - m[Intent::kRight]),
                            std::abs(d[Intent::kRight] - m[Intent::kLeft]),
                            std::abs(d[Intent::kForward] - m[Intent::kForward]),
                            std::abs(d[Intent::kStop] - m[Intent::kStop])});
  }
  IntentDistribution raw;
  raw.p = {0.4, 0.3, 0.2, 0.1};
  const auto post = intentPosterior(IntentDistribution::uniform(), Intent::kLeft, raw, 2.0);
  const std::array<double, 4> expected = {0.3077, 0.4615, 0.1538, 0.0769};
  double worstPost = 0.0;
  for (std::size_t i = 0; i < 4; ++i) worstPost = std::max(worstPost, std::abs(post.p[i] - expected[i]));
  const bool ok = worstSum <= kSumTol && minEntry >= 0.0 && worstPost <= kPosteriorTol && worstMirror <= kMirrorTol;
  emit(6, "intent math", ok,
       fmt("sum err %.1e, min entry %.3f, posterior err %.1e, mirror err %.1e", worstSum, minEntry, worstPost,
           worstMirror));
}

// ---- criterion 7 --------------------------------------------------------

std::vector<std::pair<std::size_t, std::size_t>> bruteForceBestFirst(const Eigen::MatrixXd& sim, double threshold) {
  std::vector<bool> usedRow(static_cast<std::size_t>(sim.rows()), false);
  std::vector<bool> usedCol(static_cast<std::size_t>(sim.cols()), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  while (true) {
    double best = -1.0;
    std::pair<std::size_t, std::size_t> arg{};
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
      for (Eigen::Index j = 0; j < sim.cols(); ++j) {
        if (usedRow[static_cast<std::size_t>(i)] || usedCol[static_cast<std::size_t>(j)]) continue;
        if (sim(i, j) >= threshold && sim(i, j) > best) {
          best = sim(i, j);
          arg = {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
        }
      }
    }
    if (best < 0.0) break;
    usedRow[arg.first] = usedCol[arg.second] = true;
    out.push_back(arg);
  }
  std::sort(out.begin(), out.end());
  return out;
}

IntentDistribution randomDist(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  IntentDistribution d;
  for (auto& x : d.p) x = std::round(u(rng) * 4.0) + 1.0;
  const double s = d.sum();
  for (auto& x : d.p) x /= s;
  return d;
}

int combinationMismatches(std::mt19937_64& rng) {
  int bad = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 3;
    std::vector<IntentDistribution> d;
    for (int i = 0; i < n; ++i) d.push_back(randomDist(rng));
    std::vector<IntentCombination> all;
    const int total = 1 << (2 * n);
    for (int code = 0; code < total; ++code) {
      IntentCombination c;
      for (int i = 0; i < n; ++i) {
        const Intent it = kAllIntents[static_cast<std::size_t>((code >> (2 * (n - 1 - i))) & 3)];
        c.intents.push_back(it);
        c.prob *= d[static_cast<std::size_t>(i)][it];
      }
      all.push_back(c);
    }
    std::sort(all.begin(), all.end(), combinationBefore);
    const int nIc = 1 + trial % 6;
    const auto got = topIntentCombinations(d, nIc);
    const auto expectCount = std::min<std::size_t>(static_cast<std::size_t>(nIc), all.size());
    if (got.size() != expectCount) {
      ++bad;
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got[i].intents != all[i].intents || got[i].prob != all[i].prob) {
        ++bad;
        break;
      }
    }
  }
  return bad;
}

int associationMismatches(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(0, 4);
  int bad = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int r = size(rng), c = size(rng);
    Eigen::MatrixXd sim(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) sim(i, j) = std::round(u(rng) * 20.0) / 20.0;
    }
    auto pairs = associateBySimilarity(sim, 0.5).pairs;
    std::sort(pairs.begin(), pairs.end());
    if (pairs != bruteForceBestFirst(sim, 0.5)) ++bad;
  }
  return bad;
}

PlannedObstacle obstacleAt(Vec3 pos, double heading, double speed, const IntentDistribution& dist,
                           const PlannerParams& p) {
  PlannedObstacle o;
  o.trackId = 0;
  o.dist = dist;
  o.kin.pos = pos;
  o.kin.heading = heading;
  o.kin.speed = speed;
  o.kin.size = Vec3(0.3, 0.3, 0.9);
  o.predictions = predictFromKinematics(o.kin, {}, p.intent);
  return o;
}

ReferenceTrajectory straightRef(const RobotState& x0, const PlannerParams& p) {
  ReferenceTrajectory ref;
  for (int k = 0; k <= p.mpc.N; ++k) ref.states.push_back({x0.p + k * p.mpc.dt * x0.v, x0.v});
  return ref;
}

int plannerMismatches(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int bad = 0;
  PlannerParams p;
  p.nIc = 4;
  for (int trial = 0; trial < 10; ++trial) {
    const RobotState robot{Vec3(5, 10, 1), Vec3(1.0, 0, 0)};
    const auto ref = straightRef(robot, p);
    const std::vector<PlannedObstacle> obstacles = {
        obstacleAt(Vec3(8 + u(rng), 10 + 0.5 * u(rng), 1), kPi + 0.3 * u(rng), 0.8, randomDist(rng), p)};
    const auto out = planWithObstacles(robot, ref, {}, obstacles, p);

    IntentCombination top;
    top.intents = {obstacles[0].dist.argmax()};
    const auto topTrack = dynamicConstraints(obstacles, top, p).front();
    std::optional<std::size_t> best;
    double bestScore = -1.0, bestProb = -1.0;
    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
      const Intent intent = out.candidates[i].combination.intents.front();
      IntentCombination combo;
      combo.intents = {intent};
      ObstacleConstraintSet obs;
      obs.dynamics = dynamicConstraints(obstacles, combo, p);
      const auto plan = solveMpc(robot, ref, obs, p.mpc);
      double safety = 0.0, dev = 0.0;
      for (std::size_t k = 1; k < plan.states.size(); ++k) {
        safety += (plan.states[k].p - topTrack[k].center).norm();
        dev += (plan.states[k].p - ref.states[k].p).norm();
      }
      const double n = static_cast<double>(plan.states.size() - 1);
      safety /= n;
      const double detour = dev <= 0.0 ? p.weights.scoreCap : std::min(p.weights.scoreCap, n / dev);
      const double prob = obstacles[0].dist[intent];
      const double score = prob * (p.weights.lambda1 * p.weights.scoreCap + p.weights.lambda2 * detour +
                                   p.weights.lambda3 * safety);
      if (std::abs(score - out.candidates[i].plan.finalScore) > 1e-9) ++bad;
      if (!plan.feasible) continue;
      if (!best || score > bestScore || (score == bestScore && prob > bestProb)) {
        best = i;
        bestScore = score;
        bestProb = prob;
      }
    }
    if (out.candidates.size() != 4 || out.selectedIndex != best) ++bad;
  }
  return bad;
}

void checkOracles() {
  auto rng = makeStream(701, Stream::kTest);
  const int combos = combinationMismatches(rng);
  const int assoc = associationMismatches(rng);
  const int planner = plannerMismatches(rng);
  emit(7, "oracle equivalence", combos == 0 && assoc == 0 && planner == 0,
       fmt("mismatches: combinations %d/300, association %d/2000, planner %d/10", combos, assoc, planner));
}

// ---- criterion 8 --------------------------------------------------------

Detection detectionAt(const Vec3& pos) {
  Detection d;
  d.pos = pos;
  d.dim = Vec3(0.6, 0.6, 1.8);
  d.cloudLen = 50;
  d.cloudStd = 0.5;
  return d;
}

void checkTracking() {
  const auto visible = [](const Vec3&) { return true; };
  const Vec3 v(0.8, 0.5, 0.0);
  double total = 0.0;
  const int seeds = 200;
  for (int seed = 1; seed <= seeds; ++seed) {
    auto rng = makeStream(static_cast<std::uint64_t>(seed), Stream::kTest);
    std::normal_distribution<double> n(0.0, 0.05);
    Tracker tracker;
    for (int k = 0; k < 30; ++k) {
      const Vec3 truth = Vec3(2, 2, 0.9) + v * (0.1 * k);
      const std::vector<Detection> d = {detectionAt(truth + Vec3(n(rng), n(rng), n(rng)))};
      tracker.update(d, 0.1 * k, k == 0 ? 0.0 : 0.1, visible);
    }
    total += (tracker.tracks().at(0).kf.vel() - v).norm();
  }
  const double meanErr = total / seeds;

  TrackerParams params;
  Tracker tracker(params);
  double time = 0.0;
  for (int k = 0; k < 5; ++k) {
    const std::vector<Detection> d = {detectionAt(Vec3(3 + 0.1 * k, 5, 0.9))};
    tracker.update(d, time, k == 0 ? 0.0 : 0.1, visible);
    time += 0.1;
  }
  Vec3 lastRisk = tracker.tracks().at(0).riskSize;
  bool monotone = true;
  int survived = 0;
  for (int k = 0; k < 100 && !tracker.tracks().empty(); ++k) {
    tracker.update({}, time, 0.1, [](const Vec3&) { return false; });
    time += 0.1;
    if (tracker.tracks().empty()) break;
    const Vec3 risk = tracker.tracks()[0].riskSize;
    monotone = monotone && (risk.array() >= lastRisk.array()).all();
    lastRisk = risk;
    ++survived;
  }
  const int expectedTicks = static_cast<int>(std::lround(params.maxCoast / 0.1));
  const bool ok = meanErr < kVelocityError && monotone && std::abs(survived - expectedTicks) <= 1;
  emit(8, "tracking", ok,
       fmt("velocity error %.3f m/s (< %.1f, %d seeds), coast ticks %d (expected %d +/- 1), risk %s", meanErr,
           kVelocityError, seeds, survived, expectedTicks, monotone ? "non-decreasing" : "DECREASED"));
}

// ---- criterion 9 --------------------------------------------------------

void checkPerformance() {
  using Clock = std::chrono::steady_clock;
  PlannerParams p;
  auto rng = makeStream(901, Stream::kTest);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worstSolve = 0.0, worstCycle = 0.0;
  const RobotState robot{Vec3(5, 10, 1), Vec3(1.0, 0, 0)};
  const auto ref = straightRef(robot, p);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<PlannedObstacle> obstacles;
    for (int i = 0; i < 4; ++i) {
      obstacles.push_back(obstacleAt(Vec3(7.5 + 1.5 * u(rng), 10 + 1.5 * u(rng), 1), kPi * u(rng), 0.8,
                                     randomDist(rng), p));
    }
    IntentCombination top;
    for (const auto& o : obstacles) top.intents.push_back(o.dist.argmax());
    ObstacleConstraintSet obs;
    obs.dynamics = dynamicConstraints(obstacles, top, p);
    auto t0 = Clock::now();
    (void)solveMpc(robot, ref, obs, p.mpc);
    worstSolve = std::max(worstSolve, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());

    PlannerParams q = p;
    q.nIc = 6;
    t0 = Clock::now();
    (void)planWithObstacles(robot, ref, {}, obstacles, q);
    worstCycle = std::max(worstCycle, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  const bool ok = worstSolve < kMpcSolveMs && worstCycle < kPlanCycleMs;
  emit(9, "performance (soft)", ok,
       fmt("max MPC solve %.1f ms (< %.0f), max planning cycle %.1f ms (< %.0f), N=%d", worstSolve, kMpcSolveMs,
           worstCycle, kPlanCycleMs, p.mpc.N),
       true);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string suitePath = argc > 1 ? argv[1] : std::string(INTENTNAV_SCENARIO_DIR) + "/suite.json";

  const Suite suite = loadSuite(suitePath);
  const auto first = runSuite(suite, suite.seeds);
  checkAblations(first, suite.seeds);
  checkMpc();
  checkIntentMath();
  checkOracles();
  checkTracking();
  checkPerformance();

  const auto second = runSuite(suite, suite.seeds);
  const std::string a = toJson(first).dump(2);
  const std::string b = toJson(second).dump(2);
  emit(10, "determinism", a == b, fmt("summary JSON %zu bytes, rerun %s", a.size(), a == b ? "identical" : "DIFFERS"));

  std::printf("%s\n", hardFailures == 0 ? "ALL CRITERIA PASS" : fmt("%d criteria FAILED", hardFailures).c_str());
  return hardFailures == 0 ? 0 : 1;
}
