#include "stylegraph/centrality.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>

#include "stylegraph/error.hpp"

namespace stylegraph {

std::string_view centrality_kind_name(CentralityKind kind) noexcept {
  return kind == CentralityKind::kDegree ? "degree" : "closeness";
}

CentralitySeries degree_series(std::span<const AdjacencyState> states, AgentIndex agent) {
  if (states.empty()) throw RangeError("degree series needs at least one adjacency state");
  CentralitySeries s;
  s.agent = agent;
  s.kind = CentralityKind::kDegree;
  s.t_start = states.front().frame();
  s.t_end = states.back().frame();
  s.values.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].frame() != s.t_start + static_cast<FrameIndex>(k)) {
      throw RangeError("adjacency states are not consecutive frames");
    }
    if (!states[k].row_of(agent)) {
      throw LookupError("agent " + std::to_string(agent) + " is not mapped at frame " +
                        std::to_string(states[k].frame()));
    }
    s.values.push_back(static_cast<double>(states[k].degree(agent)));
  }
  return s;
}

std::vector<double> shortest_path_lengths(const GraphSnapshot& snapshot, AgentIndex source) {
  const auto& verts = snapshot.vertices;
  const auto n = verts.size();
  auto index_of = [&](AgentIndex a) -> std::size_t {
    auto it = std::lower_bound(verts.begin(), verts.end(), a);
    return it != verts.end() && *it == a ? static_cast<std::size_t>(it - verts.begin()) : n;
  };
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : snapshot.edges) {
    const auto i = index_of(e.i);
    const auto j = index_of(e.j);
    adj[i].emplace_back(j, e.weight);
    adj[j].emplace_back(i, e.weight);
  }
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  const auto src = index_of(source);
  if (src == n) return dist;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[src] = 0.0;
  heap.emplace(0.0, src);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : adj[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        heap.emplace(dist[v], v);
      }
    }
  }
  return dist;
}

double closeness(const GraphSnapshot& snapshot, AgentIndex agent) {
  const auto n = snapshot.vertices.size();
  if (n < 2) return 0.0;
  const auto dist = shortest_path_lengths(snapshot, agent);
  std::size_t reachable = 0;
  double total = 0.0;
  for (double d : dist) {
    if (d == std::numeric_limits<double>::infinity()) continue;
    ++reachable;
    total += d;
  }
  if (reachable < 2 || total <= 0.0) return 0.0;
  const double r1 = static_cast<double>(reachable - 1);
  return (r1 / static_cast<double>(n - 1)) * (r1 / total);
}

CentralitySeries closeness_series(const TrajectorySet& ts, double mu, AgentIndex agent, FrameIndex t_start,
                                  FrameIndex t_end) {
  if (agent >= ts.agent_count()) throw LookupError("unknown agent index " + std::to_string(agent));
  if (ts.empty() || t_start > t_end || t_start < ts.first_frame() || t_end > ts.last_frame()) {
    throw RangeError("closeness window [" + std::to_string(t_start) + ", " + std::to_string(t_end) +
                     "] exceeds the trajectory data");
  }
  CentralitySeries s;
  s.agent = agent;
  s.kind = CentralityKind::kCloseness;
  s.t_start = t_start;
  s.t_end = t_end;
  s.values.reserve(static_cast<std::size_t>(t_end - t_start + 1));
  for (FrameIndex t = t_start; t <= t_end; ++t) {
    if (!ts.position(agent, t)) {
      throw RangeError("agent '" + ts.agent_id(agent) + "' is absent at frame " + std::to_string(t));
    }
    s.values.push_back(closeness(build_snapshot(ts.at(t), mu, t), agent));
  }
  return s;
}

}  // namespace stylegraph
