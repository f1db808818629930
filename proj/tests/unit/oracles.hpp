#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "stylegraph/graph.hpp"

namespace testing {

// Floyd-Warshall over the snapshot vertices; index space is the agent index.
inline std::vector<std::vector<double>> all_pairs(const stylegraph::GraphSnapshot& g, std::size_t agents) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(agents, std::vector<double>(agents, inf));
  for (auto v : g.vertices) d[v][v] = 0.0;
  for (const auto& e : g.edges) {
    d[e.i][e.j] = std::min(d[e.i][e.j], e.weight);
    d[e.j][e.i] = std::min(d[e.j][e.i], e.weight);
  }
  for (auto k : g.vertices) {
    for (auto i : g.vertices) {
      for (auto j : g.vertices) {
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }
  return d;
}

inline double closeness_oracle(const stylegraph::GraphSnapshot& g, stylegraph::AgentIndex agent, std::size_t agents) {
  if (std::find(g.vertices.begin(), g.vertices.end(), agent) == g.vertices.end()) return 0.0;
  const auto d = all_pairs(g, agents);
  const double n = static_cast<double>(g.vertices.size());
  double reached = 0.0;
  double sum = 0.0;
  for (auto v : g.vertices) {
    if (d[agent][v] < std::numeric_limits<double>::infinity()) {
      reached += 1.0;
      sum += d[agent][v];
    }
  }
  if (reached <= 1.0 || sum == 0.0) return 0.0;
  return ((reached - 1.0) / (n - 1.0)) * (reached - 1.0) / sum;
}

}  // namespace testing
