#include "stylegraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "stylegraph/error.hpp"

namespace stylegraph {

GraphSnapshot build_snapshot(std::span<const Observation> positions, double mu, FrameIndex frame) {
  if (!(mu > 0.0)) throw DomainError("proximity threshold mu must be > 0");
  GraphSnapshot g;
  g.frame = frame;
  g.mu = mu;
  std::vector<Observation> sorted(positions.begin(), positions.end());
  std::sort(sorted.begin(), sorted.end(), [](const Observation& a, const Observation& b) { return a.agent < b.agent; });
  g.vertices.reserve(sorted.size());
  for (const auto& o : sorted) g.vertices.push_back(o.agent);
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    for (std::size_t b = a + 1; b < sorted.size(); ++b) {
      const double w = distance(sorted[a].pos, sorted[b].pos);
      if (w < mu) g.edges.push_back({sorted[a].agent, sorted[b].agent, w});
    }
  }
  return g;
}

AdjacencyState::AdjacencyState(std::size_t capacity, FrameIndex dwell) : capacity_(capacity), dwell_(dwell) {
  if (capacity == 0) throw DomainError("adjacency capacity must be >= 1");
  if (dwell < 0) throw DomainError("dwell must be >= 0");
}

double AdjacencyState::at(std::size_t row, std::size_t col) const {
  if (row >= capacity_ || col >= capacity_) throw RangeError("adjacency index out of range");
  if (row == col) return 1.0;
  auto it = entries_.find({std::min(row, col), std::max(row, col)});
  return it == entries_.end() ? 0.0 : it->second;
}

bool AdjacencyState::has_entry(std::size_t row, std::size_t col) const {
  return row != col && entries_.contains({std::min(row, col), std::max(row, col)});
}

std::optional<std::size_t> AdjacencyState::row_of(AgentIndex agent) const {
  auto it = row_of_.find(agent);
  if (it == row_of_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> AdjacencyState::last_speed(AgentIndex agent) const {
  auto it = last_speed_.find(agent);
  if (it == last_speed_.end()) return std::nullopt;
  return it->second;
}

std::size_t AdjacencyState::degree(AgentIndex agent) const {
  auto row = row_of(agent);
  if (!row) throw LookupError("agent " + std::to_string(agent) + " has no adjacency row");
  auto it = row_degree_.find(*row);
  return it == row_degree_.end() ? 0 : it->second;
}

void AdjacencyState::write_dense_csv(std::ostream& out, std::size_t limit) const {
  const std::size_t n = limit ? std::min(limit, capacity_) : capacity_;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (c) out << ',';
      out << format_double(at(r, c));
    }
    out << '\n';
  }
}

void AdjacencyState::reinitialize() {
  ++epoch_;
  row_of_.clear();
  last_seen_.clear();
  free_rows_.clear();
  next_row_ = 0;
  entries_.clear();
  row_degree_.clear();
}

std::size_t AdjacencyState::take_row() {
  if (!free_rows_.empty()) {
    const auto row = *free_rows_.begin();
    free_rows_.erase(free_rows_.begin());
    return row;
  }
  return next_row_++;
}

void AdjacencyState::release(AgentIndex agent) {
  free_rows_.insert(row_of_.at(agent));
  row_of_.erase(agent);
  last_seen_.erase(agent);
}

AdjacencyState update_adjacency(AdjacencyState state, const GraphSnapshot& snapshot, std::span<const double> speeds) {
  if (state.capacity_ == 0) throw DomainError("adjacency state has no capacity");
  for (auto v : snapshot.vertices) {
    if (v >= speeds.size()) throw DomainError("missing speed for agent " + std::to_string(v));
  }
  state.frame_ = snapshot.frame;
  for (auto v : snapshot.vertices) state.last_seen_[v] = snapshot.frame;

  // Agents that left the view before ever forming an edge give their row back.
  std::vector<AgentIndex> stale;
  for (const auto& [agent, row] : state.row_of_) {
    const auto seen = state.last_seen_.at(agent);
    if (snapshot.frame - seen > state.dwell_ && !state.row_degree_.contains(row)) stale.push_back(agent);
  }
  for (auto agent : stale) state.release(agent);

  std::vector<AgentIndex> fresh;
  for (auto v : snapshot.vertices) {
    if (!state.row_of_.contains(v)) fresh.push_back(v);
  }
  if (state.row_of_.size() + fresh.size() > state.capacity_) {
    if (snapshot.vertices.size() > state.capacity_) {
      throw CapacityError(std::to_string(snapshot.vertices.size()) + " agents in one frame exceed capacity " +
                          std::to_string(state.capacity_));
    }
    state.reinitialize();
    fresh = snapshot.vertices;
    for (auto v : fresh) state.last_seen_[v] = snapshot.frame;
  }
  for (auto v : fresh) state.row_of_[v] = state.take_row();

  for (const auto& e : snapshot.edges) {
    const auto ri = state.row_of_.at(e.i);
    const auto rj = state.row_of_.at(e.j);
    const std::pair key{std::min(ri, rj), std::max(ri, rj)};
    if (state.entries_.contains(key)) continue;
    // Strictly faster agent discovers the other; equal speeds wait for a later frame.
    if (speeds[e.i] == speeds[e.j]) continue;
    state.entries_.emplace(key, e.weight);
    ++state.row_degree_[ri];
    ++state.row_degree_[rj];
  }
  for (auto v : snapshot.vertices) state.last_speed_[v] = speeds[v];
  return state;
}

double estimate_speed(const TrajectorySet& ts, AgentIndex agent, FrameIndex t) {
  if (agent >= ts.agent_count()) throw LookupError("unknown agent index " + std::to_string(agent));
  const auto track = ts.track(agent);
  auto end = std::upper_bound(track.begin(), track.end(), t,
                              [](FrameIndex v, const TrackPoint& p) { return v < p.t; });
  const auto k = static_cast<std::size_t>(end - track.begin());
  if (k == 0) {
    throw RangeError("agent '" + ts.agent_id(agent) + "' has no observation at or before t=" + std::to_string(t));
  }
  const std::size_t lo = k >= 3 ? k - 3 : 0;
  const std::size_t hi = k - 1;
  if (lo == hi) return 0.0;
  const double dt = static_cast<double>(track[hi].t - track[lo].t) / ts.frame_rate_hz();
  return distance(track[hi].pos, track[lo].pos) / dt;
}

std::vector<double> frame_speeds(const TrajectorySet& ts, FrameIndex t) {
  std::vector<double> speeds(ts.agent_count(), 0.0);
  for (AgentIndex a = 0; a < ts.agent_count(); ++a) {
    if (ts.track(a).front().t <= t) speeds[a] = estimate_speed(ts, a, t);
  }
  return speeds;
}

std::vector<AdjacencyState> replay_adjacency(const TrajectorySet& ts, const AdjacencyOptions& options) {
  std::vector<AdjacencyState> states;
  if (ts.empty()) return states;
  states.reserve(ts.frame_count());
  AdjacencyState state(options.capacity, options.dwell);
  for (FrameIndex t = ts.first_frame(); t <= ts.last_frame(); ++t) {
    const auto snapshot = build_snapshot(ts.at(t), options.mu, t);
    state = update_adjacency(std::move(state), snapshot, frame_speeds(ts, t));
    states.push_back(state);
  }
  return states;
}

// Membership (rows, epochs, releases) is replayed frame by frame; entries are
// recomputed from scratch by scanning the full history of every mapped pair.
class ReferenceBuilder {
 public:
  ReferenceBuilder(const TrajectorySet& ts, const AdjacencyOptions& options) : ts_(ts), options_(options) {
    for (FrameIndex t = ts.first_frame(); t <= ts.last_frame() && !ts.empty(); ++t) {
      std::vector<double> v(ts.agent_count(), 0.0);
      for (AgentIndex a = 0; a < ts.agent_count(); ++a) {
        const auto track = ts.track(a);
        std::vector<TrackPoint> upto;
        for (const auto& p : track) {
          if (p.t <= t) upto.push_back(p);
        }
        if (upto.size() >= 2) {
          const auto& last = upto.back();
          const auto& first = upto[upto.size() >= 3 ? upto.size() - 3 : 0];
          v[a] = distance(last.pos, first.pos) / (static_cast<double>(last.t - first.t) / ts.frame_rate_hz());
        }
      }
      speeds_.push_back(std::move(v));
    }
  }

  AdjacencyState build(FrameIndex upto) {
    AdjacencyState s(options_.capacity, options_.dwell);
    std::map<AgentIndex, FrameIndex> tenure;
    if (ts_.empty()) return s;
    upto = std::min(upto, ts_.last_frame());
    for (FrameIndex f = ts_.first_frame(); f <= upto; ++f) {
      s.frame_ = f;
      std::vector<AgentIndex> present;
      for (const auto& o : ts_.at(f)) present.push_back(o.agent);
      for (auto a : present) s.last_seen_[a] = f;

      std::vector<AgentIndex> stale;
      for (const auto& [agent, row] : s.row_of_) {
        if (f - s.last_seen_.at(agent) > options_.dwell && !has_any_entry(agent, tenure, f - 1)) stale.push_back(agent);
      }
      for (auto a : stale) {
        s.release(a);
        tenure.erase(a);
      }

      std::vector<AgentIndex> fresh;
      for (auto a : present) {
        if (!s.row_of_.contains(a)) fresh.push_back(a);
      }
      if (s.row_of_.size() + fresh.size() > options_.capacity) {
        if (present.size() > options_.capacity) throw CapacityError("too many agents in one frame");
        s.reinitialize();
        tenure.clear();
        fresh = present;
        for (auto a : present) s.last_seen_[a] = f;
      }
      for (auto a : fresh) {
        s.row_of_[a] = s.take_row();
        tenure[a] = f;
      }
      for (auto a : present) s.last_speed_[a] = speed(a, f);
    }

    for (auto it = tenure.begin(); it != tenure.end(); ++it) {
      for (auto jt = std::next(it); jt != tenure.end(); ++jt) {
        if (auto w = first_encounter(it->first, jt->first, std::max(it->second, jt->second), upto)) {
          const auto ri = s.row_of_.at(it->first);
          const auto rj = s.row_of_.at(jt->first);
          s.entries_[{std::min(ri, rj), std::max(ri, rj)}] = *w;
          ++s.row_degree_[ri];
          ++s.row_degree_[rj];
        }
      }
    }
    return s;
  }

 private:
  double speed(AgentIndex a, FrameIndex f) const {
    return speeds_[static_cast<std::size_t>(f - ts_.first_frame())][a];
  }

  std::optional<double> first_encounter(AgentIndex a, AgentIndex b, FrameIndex from, FrameIndex to) const {
    for (FrameIndex f = from; f <= to; ++f) {
      auto pa = ts_.position(a, f);
      auto pb = ts_.position(b, f);
      if (!pa || !pb) continue;
      const double w = distance(*pa, *pb);
      if (w < options_.mu && speed(a, f) != speed(b, f)) return w;
    }
    return std::nullopt;
  }

  bool has_any_entry(AgentIndex a, const std::map<AgentIndex, FrameIndex>& tenure, FrameIndex to) const {
    const auto from_a = tenure.at(a);
    for (const auto& [b, from_b] : tenure) {
      if (b != a && first_encounter(a, b, std::max(from_a, from_b), to)) return true;
    }
    return false;
  }

  const TrajectorySet& ts_;
  AdjacencyOptions options_;
  std::vector<std::vector<double>> speeds_;
};

AdjacencyState rebuild_reference(const TrajectorySet& ts, const AdjacencyOptions& options, FrameIndex upto) {
  if (!(options.mu > 0.0)) throw DomainError("proximity threshold mu must be > 0");
  return ReferenceBuilder(ts, options).build(upto);
}

}  // namespace stylegraph
