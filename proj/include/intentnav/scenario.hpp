#pragma once

#include "intentnav/common.hpp"
#include "intentnav/intent_planner.hpp"
#include "intentnav/random.hpp"
#include "intentnav/world.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace intentnav {

/// Malformed scenario or suite document. The message names the line (for
/// syntax errors) or the offending field.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-loop settings that are not part of the simulated world.
struct RunSettings {
  PlannerParams planner;
  double cruiseSpeed = 1.0;
  int maxTicks = 400;
  double goalTolerance = 0.4;
  double robotRadius = kDefaultRobotRadius;
  double mapResolution = 0.1;
};

/// Randomized obstacle layout drawn from the scenario seed.
///  - density: `staticCount` boxes and `dynamicCount` waypoint walkers on the map.
///  - arcs: constant-arc walkers spread over the map.
///  - wallTurn: walkers that head at a wall and turn along it; with
///    `withWalls` false the same walkers move in open space.
struct GeneratorSpec {
  std::string preset;
  int staticCount = 0;
  int dynamicCount = 0;
  double minSpeed = 0.6;
  double maxSpeed = 1.2;
  double minTurnRate = 0.35;
  double maxTurnRate = 0.8;
  double clearance = 2.5;
  bool withWalls = true;
};

struct Scenario {
  std::string name;
  WorldConfig world;
  RunSettings run;
  std::optional<GeneratorSpec> generator;
};

/// Dotted-key access to every numeric tunable, e.g. "mpc.lambdaU" or
/// "weights.lambda3". The same keys are read from the environment as
/// INTENTNAV_<KEY> with dots replaced by underscores, upper-cased
/// (INTENTNAV_MPC_LAMBDAU).
class ParamRegistry {
 public:
  using Accessor = std::function<void(Scenario&, double)>;
  using Reader = std::function<double(const Scenario&)>;

  static const ParamRegistry& instance() {
    static const ParamRegistry registry;
    return registry;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  void set(Scenario& s, const std::string& key, double value) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ScenarioError("unknown parameter '" + key + "'");
    it->second.first(s, value);
  }

  double get(const Scenario& s, const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ScenarioError("unknown parameter '" + key + "'");
    return it->second.second(s);
  }

  static std::string envName(const std::string& key) {
    std::string out = "INTENTNAV_";
    for (char c : key) out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return out;
  }

  /// Applies every INTENTNAV_* variable that names a registered key.
  void applyEnvironment(Scenario& s) const {
    for (const auto& [key, fns] : entries_) {
      const char* raw = std::getenv(envName(key).c_str());
      if (raw == nullptr) continue;
      char* end = nullptr;
      const double value = std::strtod(raw, &end);
      if (end == raw) throw ScenarioError("environment " + envName(key) + " is not numeric: " + raw);
      fns.first(s, value);
    }
  }

 private:
  template <typename Get>
  void addDouble(const std::string& key, Get get) {
    entries_[key] = {[get](Scenario& s, double v) { get(s) = v; },
                     [get](const Scenario& s) { return get(const_cast<Scenario&>(s)); }};
  }
  template <typename Get>
  void addInt(const std::string& key, Get get) {
    entries_[key] = {[get](Scenario& s, double v) { get(s) = static_cast<int>(std::lround(v)); },
                     [get](const Scenario& s) { return static_cast<double>(get(const_cast<Scenario&>(s))); }};
  }

  ParamRegistry() {
    addInt("mpc.N", [](Scenario& s) -> int& { return s.run.planner.mpc.N; });
    addDouble("mpc.dt", [](Scenario& s) -> double& { return s.run.planner.mpc.dt; });
    addDouble("mpc.lambdaU", [](Scenario& s) -> double& { return s.run.planner.mpc.lambdaU; });
    entries_["mpc.uMax"] = {[](Scenario& s, double v) {
                              s.run.planner.mpc.uMax = Vec3::Constant(std::abs(v));
                              s.run.planner.mpc.uMin = Vec3::Constant(-std::abs(v));
                            },
                            [](const Scenario& s) { return s.run.planner.mpc.uMax.x(); }};
    addDouble("mpc.penaltyInit", [](Scenario& s) -> double& { return s.run.planner.mpc.penaltyInit; });
    addDouble("mpc.penaltyGrowth", [](Scenario& s) -> double& { return s.run.planner.mpc.penaltyGrowth; });
    addInt("mpc.maxOuterIters", [](Scenario& s) -> int& { return s.run.planner.mpc.maxOuterIters; });
    addInt("mpc.maxInnerIters", [](Scenario& s) -> int& { return s.run.planner.mpc.maxInnerIters; });
    addDouble("mpc.feasTol", [](Scenario& s) -> double& { return s.run.planner.mpc.feasTol; });
    addDouble("mpc.penaltyMargin", [](Scenario& s) -> double& { return s.run.planner.mpc.penaltyMargin; });
    addDouble("weights.lambda1", [](Scenario& s) -> double& { return s.run.planner.weights.lambda1; });
    addDouble("weights.lambda2", [](Scenario& s) -> double& { return s.run.planner.weights.lambda2; });
    addDouble("weights.lambda3", [](Scenario& s) -> double& { return s.run.planner.weights.lambda3; });
    addDouble("weights.scoreCap", [](Scenario& s) -> double& { return s.run.planner.weights.scoreCap; });
    addDouble("intent.alpha", [](Scenario& s) -> double& { return s.run.planner.intent.alpha; });
    addDouble("intent.beta", [](Scenario& s) -> double& { return s.run.planner.intent.beta; });
    addDouble("intent.gamma", [](Scenario& s) -> double& { return s.run.planner.intent.gamma; });
    addDouble("intent.s", [](Scenario& s) -> double& { return s.run.planner.intent.s; });
    addInt("intent.nPred", [](Scenario& s) -> int& { return s.run.planner.intent.nPred; });
    addDouble("intent.predDt", [](Scenario& s) -> double& { return s.run.planner.intent.predDt; });
    addDouble("intent.vThresh", [](Scenario& s) -> double& { return s.run.planner.intent.vThresh; });
    addDouble("intent.lambdaInflate", [](Scenario& s) -> double& { return s.run.planner.intent.lambdaInflate; });
    addDouble("intent.linAccMin", [](Scenario& s) -> double& { return s.run.planner.intent.linAccMin; });
    addDouble("intent.linAccMax", [](Scenario& s) -> double& { return s.run.planner.intent.linAccMax; });
    addDouble("intent.angAccMin", [](Scenario& s) -> double& { return s.run.planner.intent.angAccMin; });
    addDouble("intent.angAccMax", [](Scenario& s) -> double& { return s.run.planner.intent.angAccMax; });
    addInt("intent.samplesPerIntent", [](Scenario& s) -> int& { return s.run.planner.intent.samplesPerIntent; });
    addInt("intent.turnLinSamples", [](Scenario& s) -> int& { return s.run.planner.intent.turnLinSamples; });
    addInt("intent.turnAngSamples", [](Scenario& s) -> int& { return s.run.planner.intent.turnAngSamples; });
    addInt("intent.minHistory", [](Scenario& s) -> int& { return s.run.planner.intent.minHistory; });
    addDouble("tracker.historyWindow", [](Scenario& s) -> double& { return s.run.planner.tracker.historyWindow; });
    addDouble("tracker.simThreshold", [](Scenario& s) -> double& { return s.run.planner.tracker.simThreshold; });
    addDouble("tracker.processNoise", [](Scenario& s) -> double& { return s.run.planner.tracker.processNoise; });
    addDouble("tracker.quietProcessNoise", [](Scenario& s) -> double& { return s.run.planner.tracker.quietProcessNoise; });
    addDouble("tracker.modeSwitchProb", [](Scenario& s) -> double& { return s.run.planner.tracker.modeSwitchProb; });
    addDouble("tracker.measurementNoise", [](Scenario& s) -> double& { return s.run.planner.tracker.measurementNoise; });
    addDouble("tracker.dynVelThreshold", [](Scenario& s) -> double& { return s.run.planner.tracker.dynVelThreshold; });
    addDouble("tracker.maxCoast", [](Scenario& s) -> double& { return s.run.planner.tracker.maxCoast; });
    addDouble("tracker.riskGrowthRate", [](Scenario& s) -> double& { return s.run.planner.tracker.riskGrowthRate; });
    addDouble("cluster.localRadius", [](Scenario& s) -> double& { return s.run.planner.cluster.localRadius; });
    addDouble("cluster.densityThreshold", [](Scenario& s) -> double& { return s.run.planner.cluster.densityThreshold; });
    addInt("planner.nIc", [](Scenario& s) -> int& { return s.run.planner.nIc; });
    addDouble("planner.riskRadius", [](Scenario& s) -> double& { return s.run.planner.riskRadius; });
    addDouble("run.cruiseSpeed", [](Scenario& s) -> double& { return s.run.cruiseSpeed; });
    addInt("run.maxTicks", [](Scenario& s) -> int& { return s.run.maxTicks; });
    addDouble("run.goalTolerance", [](Scenario& s) -> double& { return s.run.goalTolerance; });
    addDouble("run.robotRadius", [](Scenario& s) -> double& { return s.run.robotRadius; });
    addDouble("sensor.fovHalfAngle", [](Scenario& s) -> double& { return s.world.sensor.fovHalfAngle; });
    addDouble("sensor.maxRange", [](Scenario& s) -> double& { return s.world.sensor.maxRange; });
    addDouble("sensor.posNoiseSigma", [](Scenario& s) -> double& { return s.world.sensor.posNoiseSigma; });
    addDouble("sensor.sizeNoiseSigma", [](Scenario& s) -> double& { return s.world.sensor.sizeNoiseSigma; });
    addDouble("sensor.detectProb", [](Scenario& s) -> double& { return s.world.sensor.detectProb; });
    addDouble("world.tickDt", [](Scenario& s) -> double& { return s.world.tickDt; });
    addDouble("world.robotMaxVelocity", [](Scenario& s) -> double& { return s.world.robotMaxVelocity; });
  }

  std::map<std::string, std::pair<Accessor, Reader>> entries_;
};

namespace detail {

using nlohmann::json;

inline Vec3 vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError("field '" + field + "' must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Vec2 vec2(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError("field '" + field + "' must be an array of 2 numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline AgentKind agentKind(const std::string& s) {
  if (s == "waypointChain") return AgentKind::kWaypointChain;
  if (s == "constantArc") return AgentKind::kConstantArc;
  if (s == "linear") return AgentKind::kLinear;
  throw ScenarioError("unknown agent kind '" + s + "'");
}

inline std::string agentKindName(AgentKind k) {
  switch (k) {
    case AgentKind::kWaypointChain: return "waypointChain";
    case AgentKind::kConstantArc: return "constantArc";
    case AgentKind::kLinear: return "linear";
  }
  return "linear";
}

inline std::string lineContext(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::size_t begin = 0;
  std::size_t cur = 1;
  for (std::size_t i = 0; i < text.size() && cur < line; ++i) {
    if (text[i] == '\n') {
      ++cur;
      begin = i + 1;
    }
  }
  const std::size_t end = text.find('\n', begin);
  return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
         text.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

}  // namespace detail

/// Builds a scenario from a parsed JSON document.
inline Scenario scenarioFromJson(const nlohmann::json& j) {
  using detail::vec2;
  using detail::vec3;
  Scenario s;
  try {
    s.name = j.value("name", std::string("scenario"));
    WorldConfig& w = s.world;
    if (j.contains("mapExtent")) w.mapExtent = vec2(j["mapExtent"], "mapExtent");
    w.tickDt = j.value("tickDt", w.tickDt);
    w.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("robot")) {
      const auto& r = j["robot"];
      if (r.contains("start")) w.robotStart = vec3(r["start"], "robot.start");
      if (r.contains("goal")) w.robotGoal = vec3(r["goal"], "robot.goal");
      s.run.cruiseSpeed = r.value("cruiseSpeed", s.run.cruiseSpeed);
      w.robotMaxVelocity = r.value("maxVelocity", w.robotMaxVelocity);
      s.run.robotRadius = r.value("radius", s.run.robotRadius);
    }
    if (j.contains("sensor")) {
      const auto& sj = j["sensor"];
      w.sensor.fovHalfAngle = sj.value("fovHalfAngle", w.sensor.fovHalfAngle);
      w.sensor.maxRange = sj.value("maxRange", w.sensor.maxRange);
      w.sensor.posNoiseSigma = sj.value("posNoiseSigma", w.sensor.posNoiseSigma);
      w.sensor.sizeNoiseSigma = sj.value("sizeNoiseSigma", w.sensor.sizeNoiseSigma);
      w.sensor.detectProb = sj.value("detectProb", w.sensor.detectProb);
    }
    for (const auto& b : j.value("staticBoxes", nlohmann::json::array())) {
      StaticBox box;
      box.center = vec3(b.at("center"), "staticBoxes.center");
      box.halfExtents = vec3(b.at("halfExtents"), "staticBoxes.halfExtents");
      box.yaw = b.value("yaw", 0.0);
      w.staticBoxes.push_back(box);
    }
    for (const auto& a : j.value("agents", nlohmann::json::array())) {
      AgentScript script;
      script.kind = detail::agentKind(a.value("kind", std::string("linear")));
      for (const auto& wp : a.at("waypoints")) script.waypoints.push_back(vec2(wp, "agents.waypoints"));
      script.speed = a.value("speed", script.speed);
      script.turnRate = a.value("turnRate", script.turnRate);
      script.heading = a.value("heading", script.heading);
      if (a.contains("size")) script.trueSize = vec3(a["size"], "agents.size");
      w.agents.push_back(script);
    }
    s.run.maxTicks = j.value("ticks", s.run.maxTicks);
    if (j.contains("generator")) {
      const auto& g = j["generator"];
      GeneratorSpec spec;
      spec.preset = g.at("preset").get<std::string>();
      spec.staticCount = g.value("static", spec.staticCount);
      spec.dynamicCount = g.value("dynamic", spec.dynamicCount);
      spec.minSpeed = g.value("minSpeed", spec.minSpeed);
      spec.maxSpeed = g.value("maxSpeed", spec.maxSpeed);
      spec.minTurnRate = g.value("minTurnRate", spec.minTurnRate);
      spec.maxTurnRate = g.value("maxTurnRate", spec.maxTurnRate);
      spec.clearance = g.value("clearance", spec.clearance);
      spec.withWalls = g.value("withWalls", spec.withWalls);
      if (spec.preset != "density" && spec.preset != "arcs" && spec.preset != "wallTurn") {
        throw ScenarioError("unknown generator preset '" + spec.preset + "'");
      }
      s.generator = spec;
    }
    if (j.contains("params")) {
      for (const auto& [key, value] : j["params"].items()) {
        if (!value.is_number()) throw ScenarioError("params." + key + " must be numeric");
        ParamRegistry::instance().set(s, key, value.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario field error: ") + e.what());
  }
  return s;
}

inline nlohmann::json parseJsonText(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(origin + ": parse error at " + detail::lineContext(text, e.byte));
  }
}

inline std::string readTextFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario loadScenario(const std::string& path) {
  Scenario s = scenarioFromJson(parseJsonText(readTextFile(path), path));
  ParamRegistry::instance().applyEnvironment(s);
  return s;
}

/// Serializes the world part of a scenario (generated obstacles included).
inline nlohmann::json worldToJson(const WorldConfig& w) {
  nlohmann::json j;
  j["mapExtent"] = {w.mapExtent.x(), w.mapExtent.y()};
  j["tickDt"] = w.tickDt;
  j["seed"] = w.seed;
  j["robot"] = {{"start", {w.robotStart.x(), w.robotStart.y(), w.robotStart.z()}},
                {"goal", {w.robotGoal.x(), w.robotGoal.y(), w.robotGoal.z()}},
                {"maxVelocity", w.robotMaxVelocity}};
  j["sensor"] = {{"fovHalfAngle", w.sensor.fovHalfAngle}, {"maxRange", w.sensor.maxRange},
                 {"posNoiseSigma", w.sensor.posNoiseSigma}, {"sizeNoiseSigma", w.sensor.sizeNoiseSigma},
                 {"detectProb", w.sensor.detectProb}};
  j["staticBoxes"] = nlohmann::json::array();
  for (const auto& b : w.staticBoxes) {
    j["staticBoxes"].push_back({{"center", {b.center.x(), b.center.y(), b.center.z()}},
                                {"halfExtents", {b.halfExtents.x(), b.halfExtents.y(), b.halfExtents.z()}},
                                {"yaw", b.yaw}});
  }
  j["agents"] = nlohmann::json::array();
  for (const auto& a : w.agents) {
    nlohmann::json wps = nlohmann::json::array();
    for (const auto& p : a.waypoints) wps.push_back({p.x(), p.y()});
    j["agents"].push_back({{"kind", detail::agentKindName(a.kind)}, {"waypoints", wps}, {"speed", a.speed},
                           {"turnRate", a.turnRate}, {"heading", a.heading},
                           {"size", {a.trueSize.x(), a.trueSize.y(), a.trueSize.z()}}});
  }
  return j;
}

namespace detail {

inline void generateDensity(WorldConfig& w, const GeneratorSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const Vec2 start = w.robotStart.head<2>();
  const Vec2 goal = w.robotGoal.head<2>();
  for (int i = 0; i < g.staticCount; ++i) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      StaticBox b;
      b.halfExtents = Vec3(uniform(0.3, 0.6), uniform(0.3, 0.6), 1.5);
      b.center = Vec3(uniform(3.0, w.mapExtent.x() - 3.0), uniform(2.0, w.mapExtent.y() - 2.0), 1.5);
      b.yaw = uniform(-kPi / 2, kPi / 2);
      const Vec2 c = b.center.head<2>();
      if ((c - start).norm() < g.clearance || (c - goal).norm() < g.clearance) continue;
      w.staticBoxes.push_back(b);
      break;
    }
  }
  for (int i = 0; i < g.dynamicCount; ++i) {
    AgentScript a;
    a.kind = AgentKind::kWaypointChain;
    a.speed = uniform(g.minSpeed, g.maxSpeed);
    a.trueSize = Vec3(0.3, 0.3, 0.9);
    Vec2 first;
    do {
      first = Vec2(uniform(1.0, w.mapExtent.x() - 1.0), uniform(1.0, w.mapExtent.y() - 1.0));
    } while ((first - start).norm() < g.clearance || (first - goal).norm() < g.clearance);
    a.waypoints.push_back(first);
    for (int k = 0; k < 4; ++k) {
      a.waypoints.emplace_back(uniform(1.0, w.mapExtent.x() - 1.0), uniform(1.0, w.mapExtent.y() - 1.0));
    }
    w.agents.push_back(a);
  }
}

inline void generateArcs(WorldConfig& w, const GeneratorSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  for (int i = 0; i < g.dynamicCount; ++i) {
    AgentScript a;
    a.kind = AgentKind::kConstantArc;
    a.speed = uniform(g.minSpeed, g.maxSpeed);
    a.turnRate = uniform(g.minTurnRate, g.maxTurnRate) * (unit(rng) < 0.5 ? -1.0 : 1.0);
    a.heading = uniform(-kPi, kPi);
    const double margin = 2.0 * a.speed / std::abs(a.turnRate) + 1.0;
    a.waypoints.emplace_back(uniform(margin, w.mapExtent.x() - margin), uniform(margin, w.mapExtent.y() - margin));
    w.agents.push_back(a);
  }
}

/// Each walker gets its own cell of the map: it walks up to a wall, turns
/// 90 degrees to walk along it, then returns to its start.
inline void generateWallTurn(WorldConfig& w, const GeneratorSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const int cols = std::max(1, static_cast<int>(std::floor(w.mapExtent.x() / 10.0)));
  const int rows = std::max(1, static_cast<int>(std::floor(w.mapExtent.y() / 10.0)));
  for (int i = 0; i < g.dynamicCount; ++i) {
    const int cell = i % (cols * rows);
    const Vec2 origin(10.0 * (cell % cols), 10.0 * (cell / cols));
    const Vec2 center = origin + Vec2(5.0, 5.0);
    const double approach = uniform(-kPi, kPi);
    const Vec2 dir(std::cos(approach), std::sin(approach));
    const Vec2 side = (unit(rng) < 0.5 ? 1.0 : -1.0) * Vec2(-dir.y(), dir.x());
    const double standoff = 0.6;
    const Vec2 turnPoint = center;
    const Vec2 start = turnPoint - uniform(3.0, 4.0) * dir;
    const Vec2 along = turnPoint + uniform(2.5, 3.5) * side;
    AgentScript a;
    a.kind = AgentKind::kWaypointChain;
    a.speed = uniform(g.minSpeed, g.maxSpeed);
    a.trueSize = Vec3(0.3, 0.3, 0.9);
    a.waypoints = {start, turnPoint, along};
    w.agents.push_back(a);
    if (g.withWalls) {
      StaticBox wall;
      const Vec2 wc = turnPoint + (standoff + 0.2) * dir;
      wall.center = Vec3(wc.x(), wc.y(), 1.5);
      wall.halfExtents = Vec3(0.2, 4.0, 1.5);
      wall.yaw = wrapAngle(approach);
      if (wall.yaw >= kPi / 2) wall.yaw -= kPi;
      if (wall.yaw < -kPi / 2) wall.yaw += kPi;
      w.staticBoxes.push_back(wall);
    }
  }
}

}  // namespace detail

/// Resolves the generator (if any) for `seed` and returns a concrete world.
inline WorldConfig instantiate(const Scenario& scenario, std::uint64_t seed) {
  WorldConfig w = scenario.world;
  w.seed = seed;
  if (scenario.generator) {
    auto rng = makeStream(seed, Stream::kScenario);
    const auto& g = *scenario.generator;
    if (g.preset == "density") detail::generateDensity(w, g, rng);
    if (g.preset == "arcs") detail::generateArcs(w, g, rng);
    if (g.preset == "wallTurn") detail::generateWallTurn(w, g, rng);
  }
  w.validate();
  return w;
}

}  // namespace intentnav
