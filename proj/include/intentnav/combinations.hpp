#pragma once

#include "intentnav/common.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace intentnav {

/// One intent per obstacle with the product of the per-obstacle probabilities.
struct IntentCombination {
  std::vector<Intent> intents;
  double prob = 1.0;
};

/// Descending probability; equal probabilities fall back to lexicographic intent order.
inline bool combinationBefore(const IntentCombination& a, const IntentCombination& b) {
  if (a.prob != b.prob) return a.prob > b.prob;
  return std::lexicographical_compare(a.intents.begin(), a.intents.end(), b.intents.begin(), b.intents.end(),
                                      [](Intent x, Intent y) { return index(x) < index(y); });
}

inline double combinationProbability(std::span<const IntentDistribution> dists, std::span<const Intent> intents) {
  double p = 1.0;
  for (std::size_t i = 0; i < dists.size(); ++i) p *= dists[i][intents[i]];
  return p;
}

/// The `nIc` most likely joint intent assignments, found by best-first
/// expansion over per-obstacle intents sorted by probability.
inline std::vector<IntentCombination> topIntentCombinations(std::span<const IntentDistribution> dists, int nIc) {
  if (nIc < 1) throw std::invalid_argument("topIntentCombinations: nIc must be >= 1");
  const std::size_t m = dists.size();
  if (m == 0) return {IntentCombination{}};

  // order[i][r] is obstacle i's r-th most likely intent.
  std::vector<std::array<Intent, 4>> order(m);
  for (std::size_t i = 0; i < m; ++i) {
    order[i] = kAllIntents;
    std::stable_sort(order[i].begin(), order[i].end(), [&](Intent a, Intent b) { return dists[i][a] > dists[i][b]; });
  }
  const auto build = [&](const std::vector<int>& ranks) {
    IntentCombination c;
    c.intents.resize(m);
    for (std::size_t i = 0; i < m; ++i) c.intents[i] = order[i][static_cast<std::size_t>(ranks[i])];
    c.prob = combinationProbability(dists, c.intents);
    return c;
  };
  struct Node {
    IntentCombination combo;
    std::vector<int> ranks;
  };
  const auto worse = [](const Node& a, const Node& b) { return combinationBefore(b.combo, a.combo); };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> frontier(worse);
  std::set<std::vector<int>> seen;
  std::vector<int> start(m, 0);
  frontier.push({build(start), start});
  seen.insert(start);

  std::vector<IntentCombination> out;
  // Keep popping past nIc while probabilities tie with the last kept one so
  // the lexicographic tie-break sees every candidate.
  while (!frontier.empty()) {
    if (static_cast<int>(out.size()) >= nIc && frontier.top().combo.prob < out[static_cast<std::size_t>(nIc) - 1].prob) break;
    Node node = frontier.top();
    frontier.pop();
    out.push_back(node.combo);
    for (std::size_t i = 0; i < m; ++i) {
      if (node.ranks[i] >= 3) continue;
      std::vector<int> next = node.ranks;
      next[i] += 1;
      if (seen.insert(next).second) frontier.push({build(next), next});
    }
    std::sort(out.begin(), out.end(), combinationBefore);
  }
  if (static_cast<int>(out.size()) > nIc) out.resize(static_cast<std::size_t>(nIc));
  return out;
}

}  // namespace intentnav
