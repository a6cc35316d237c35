#pragma once

#include "intentnav/closed_loop.hpp"
#include "intentnav/prediction_eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace intentnav {

struct VariantRow {
  std::string scenario;
  std::string variant;
  int runs = 0;
  int collisions = 0;
  int timeouts = 0;
  int infeasibleTicks = 0;
  int ticks = 0;
  std::optional<double> percentOfBaseline;  // empty when the baseline has no collisions
};

struct StageRow {
  std::string stage;
  int samples = 0;
  double meanMs = 0.0;
  double maxMs = 0.0;
};

struct MetricsReport {
  std::string baseline;
  std::vector<VariantRow> variants;
  std::vector<PredictionClassStats> prediction;
  std::vector<StageRow> timing;
};

/// Aggregates traces per (scenario, variant) in first-seen order. Percentages
/// are relative to the `baseline` variant of the same scenario.
inline MetricsReport report(std::span<const RunTrace> traces, const std::string& baseline,
                            std::vector<PredictionClassStats> prediction = {}) {
  MetricsReport r;
  r.baseline = baseline;
  r.prediction = std::move(prediction);
  for (const auto& t : traces) {
    const std::string variant(variantName(t.variant));
    auto it = std::find_if(r.variants.begin(), r.variants.end(),
                           [&](const VariantRow& row) { return row.scenario == t.scenario && row.variant == variant; });
    if (it == r.variants.end()) {
      VariantRow row;
      row.scenario = t.scenario;
      row.variant = variant;
      r.variants.push_back(row);
      it = std::prev(r.variants.end());
    }
    it->runs += 1;
    it->collisions += t.collisions;
    it->timeouts += t.timedOut ? 1 : 0;
    it->infeasibleTicks += t.infeasibleTicks;
    it->ticks += t.ticks;
  }
  for (auto& row : r.variants) {
    auto base = std::find_if(r.variants.begin(), r.variants.end(), [&](const VariantRow& b) {
      return b.scenario == row.scenario && b.variant == baseline;
    });
    if (base != r.variants.end() && base->collisions > 0) {
      row.percentOfBaseline = 100.0 * row.collisions / base->collisions;
    }
  }

  std::vector<std::string> stages(kStageNames.begin(), kStageNames.end());
  stages.emplace_back("mpcSolve");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    StageRow row{stages[s]};
    double total = 0.0;
    for (const auto& t : traces) {
      const auto& samples = s < 4 ? t.timing.ms[s] : t.timing.mpcSolveMs;
      for (double ms : samples) {
        total += ms;
        row.maxMs = std::max(row.maxMs, ms);
        row.samples += 1;
      }
    }
    row.meanMs = row.samples > 0 ? total / row.samples : 0.0;
    r.timing.push_back(row);
  }
  return r;
}

inline nlohmann::json timingJson(const MetricsReport& r) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& s : r.timing) {
    t.push_back({{"stage", s.stage}, {"samples", s.samples}, {"meanMs", s.meanMs}, {"maxMs", s.maxMs}});
  }
  return t;
}

/// Machine-readable summary. Timing is wall-clock and therefore kept out
/// unless requested, so that reruns produce identical documents.
inline nlohmann::json toJson(const MetricsReport& r, bool includeTiming = false) {
  using nlohmann::json;
  json j;
  j["schema"] = "intentnav.summary/1";
  j["baseline"] = r.baseline;
  json rows = json::array();
  for (const auto& v : r.variants) {
    rows.push_back({{"scenario", v.scenario},
                    {"variant", v.variant},
                    {"runs", v.runs},
                    {"collisions", v.collisions},
                    {"timeouts", v.timeouts},
                    {"infeasibleTicks", v.infeasibleTicks},
                    {"ticks", v.ticks},
                    {"percentOfBaseline", v.percentOfBaseline ? json(*v.percentOfBaseline) : json(nullptr)}});
  }
  j["variants"] = std::move(rows);
  json pred = json::array();
  for (const auto& p : r.prediction) {
    pred.push_back({{"scenario", p.scenario},
                    {"class", p.scenarioClass},
                    {"events", p.events},
                    {"lowSample", p.lowSample},
                    {"linear", {{"ade", p.linearAde}, {"fde", p.linearFde}}},
                    {"intent", {{"ade", p.intentAde}, {"fde", p.intentFde}}},
                    {"chosenIntent", p.chosenIntent}});
  }
  j["prediction"] = std::move(pred);
  if (includeTiming) j["timing"] = timingJson(r);
  return j;
}

namespace detail {

/// Code points, not bytes, so UTF-8 cells line up.
inline std::size_t displayWidth(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

inline std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

/// Left-aligned first column, right-aligned others.
inline std::string alignedTable(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], displayWidth(row[c]));
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - displayWidth(row[c]), ' ');
      if (c > 0) out << "  ";
      out << (c == 0 ? row[c] + pad : pad + row[c]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace detail

inline std::string toText(const MetricsReport& r, bool includeTiming = true) {
  std::ostringstream out;
  if (!r.variants.empty()) out << "Collisions (baseline: " << r.baseline << ")\n";
  std::vector<std::vector<std::string>> rows = {{"scenario", "variant", "runs", "collisions", "% of baseline", "timeouts"}};
  for (const auto& v : r.variants) {
    rows.push_back({v.scenario, v.variant, std::to_string(v.runs), std::to_string(v.collisions),
                    v.percentOfBaseline ? detail::fixed(*v.percentOfBaseline, 1) + "%" : "—",
                    std::to_string(v.timeouts)});
  }
  if (!r.variants.empty()) out << detail::alignedTable(rows) << '\n';
  if (!r.prediction.empty()) {
    out << "Prediction error (m)\n";
    std::vector<std::vector<std::string>> p = {
        {"scenario", "class", "events", "linear ADE", "linear FDE", "intent ADE", "intent FDE", ""}};
    for (const auto& c : r.prediction) {
      p.push_back({c.scenario, c.scenarioClass, std::to_string(c.events), detail::fixed(c.linearAde, 3),
                   detail::fixed(c.linearFde, 3), detail::fixed(c.intentAde, 3), detail::fixed(c.intentFde, 3),
                   c.lowSample ? "low-sample" : ""});
    }
    out << detail::alignedTable(p) << '\n';
  }
  if (includeTiming) {
    out << "Stage timing (ms)\n";
    std::vector<std::vector<std::string>> t = {{"stage", "samples", "mean", "max"}};
    for (const auto& s : r.timing) {
      t.push_back({s.stage, std::to_string(s.samples), detail::fixed(s.meanMs, 3), detail::fixed(s.maxMs, 3)});
    }
    out << detail::alignedTable(t);
  }
  return out.str();
}

}  // namespace intentnav
