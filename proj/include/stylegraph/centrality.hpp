#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "stylegraph/graph.hpp"
#include "stylegraph/io.hpp"

namespace stylegraph {

enum class CentralityKind { kDegree, kCloseness };

std::string_view centrality_kind_name(CentralityKind kind) noexcept;

/// Discrete centrality values, one per frame of [t_start, t_end].
struct CentralitySeries {
  AgentIndex agent = 0;
  CentralityKind kind = CentralityKind::kDegree;
  FrameIndex t_start = 0;
  FrameIndex t_end = -1;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

/// Degree = count of nonzero off-diagonal entries in the agent's row. `states`
/// must be consecutive frames; the series window is their frame range.
CentralitySeries degree_series(std::span<const AdjacencyState> states, AgentIndex agent);

/// Weighted closeness of `agent` in one snapshot:
///   ((r-1)/(n-1)) * (r-1) / sum_j d(agent, j)
/// over the r vertices reachable from it (itself included) among the n present.
/// Isolated or absent agents score 0.
double closeness(const GraphSnapshot& snapshot, AgentIndex agent);

/// Single-source weighted shortest paths (Dijkstra); unreachable = +inf.
std::vector<double> shortest_path_lengths(const GraphSnapshot& snapshot, AgentIndex source);

CentralitySeries closeness_series(const TrajectorySet& ts, double mu, AgentIndex agent, FrameIndex t_start,
                                  FrameIndex t_end);

}  // namespace stylegraph
