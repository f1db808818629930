#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "stylegraph/io.hpp"

namespace stylegraph {

struct Edge {
  AgentIndex i;  // i < j
  AgentIndex j;
  double weight;
};

/// Traffic graph at one frame: edge (i, j) iff the agents are closer than mu.
struct GraphSnapshot {
  FrameIndex frame = 0;
  std::vector<AgentIndex> vertices;  // ascending
  std::vector<Edge> edges;           // lexicographic (i, j)
  double mu = 0.0;
};

GraphSnapshot build_snapshot(std::span<const Observation> positions, double mu, FrameIndex frame = 0);

struct AdjacencyOptions {
  double mu = 10.0;
  std::size_t capacity = 1000;
  /// Frames an edge-less agent may stay out of view before its row is released.
  FrameIndex dwell = 10;
};

/// Cumulative N x N traffic adjacency matrix. Only the off-diagonal entries are
/// stored; the diagonal is implicitly 1 and unused rows are implicitly 0.
class AdjacencyState {
 public:
  AdjacencyState() = default;
  explicit AdjacencyState(std::size_t capacity, FrameIndex dwell = 10);

  std::size_t capacity() const noexcept { return capacity_; }
  FrameIndex dwell() const noexcept { return dwell_; }
  /// Frame of the last update, -1 before the first one.
  FrameIndex frame() const noexcept { return frame_; }
  /// Incremented on every re-initialization to identity.
  std::size_t epoch() const noexcept { return epoch_; }

  double at(std::size_t row, std::size_t col) const;
  bool has_entry(std::size_t row, std::size_t col) const;
  std::optional<std::size_t> row_of(AgentIndex agent) const;
  const std::map<AgentIndex, std::size_t>& rows() const noexcept { return row_of_; }
  std::optional<double> last_speed(AgentIndex agent) const;

  /// Number of nonzero off-diagonal entries in the agent's row.
  std::size_t degree(AgentIndex agent) const;
  std::size_t entry_count() const noexcept { return entries_.size(); }
  const std::map<std::pair<std::size_t, std::size_t>, double>& entries() const noexcept { return entries_; }

  /// Dense N x N dump (rows/cols limited to `limit` when nonzero).
  void write_dense_csv(std::ostream& out, std::size_t limit = 0) const;

  friend bool operator==(const AdjacencyState&, const AdjacencyState&) = default;

 private:
  friend AdjacencyState update_adjacency(AdjacencyState state, const GraphSnapshot& snapshot,
                                         std::span<const double> speeds);
  friend class ReferenceBuilder;

  void reinitialize();
  std::size_t take_row();
  void release(AgentIndex agent);

  std::size_t capacity_ = 0;
  FrameIndex dwell_ = 10;
  FrameIndex frame_ = -1;
  std::size_t epoch_ = 0;
  std::map<AgentIndex, std::size_t> row_of_;
  std::map<AgentIndex, FrameIndex> last_seen_;
  std::map<AgentIndex, double> last_speed_;
  std::set<std::size_t> free_rows_;
  std::size_t next_row_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, double> entries_;  // row < col
  std::map<std::size_t, std::size_t> row_degree_;
};

/// One incremental step. `speeds` is indexed by agent and must cover every
/// snapshot vertex. An edge enters the matrix the first time its endpoints are
/// within mu while their speeds differ; stored entries never change.
AdjacencyState update_adjacency(AdjacencyState state, const GraphSnapshot& snapshot,
                                std::span<const double> speeds);

/// Backward difference over the agent's last (up to 3) observations at or before t.
double estimate_speed(const TrajectorySet& ts, AgentIndex agent, FrameIndex t);

/// Speeds of every agent at frame t (0 for agents not observed at or before t).
std::vector<double> frame_speeds(const TrajectorySet& ts, FrameIndex t);

/// Runs update_adjacency over every frame; element k is the state after frame first_frame + k.
std::vector<AdjacencyState> replay_adjacency(const TrajectorySet& ts, const AdjacencyOptions& options);

/// Brute-force state at frame `upto`: each entry is found by searching the whole
/// history for the pair's first qualifying encounter. Test oracle for update_adjacency.
AdjacencyState rebuild_reference(const TrajectorySet& ts, const AdjacencyOptions& options, FrameIndex upto);

}  // namespace stylegraph
