#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stylegraph {

using FrameIndex = std::int64_t;
using AgentIndex = std::size_t;

enum class AgentType { kCar, kBus, kTruck, kOther };

std::string_view agent_type_name(AgentType type) noexcept;
/// Case-insensitive; unrecognized tags map to kOther.
AgentType parse_agent_type(std::string_view tag) noexcept;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b) noexcept;

struct TrajectoryPoint {
  FrameIndex t = 0;
  std::string agent_id;
  AgentType agent_type = AgentType::kCar;
  double x = 0.0;
  double y = 0.0;
};

struct TrackPoint {
  FrameIndex t;
  Vec2 pos;

  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct Observation {
  AgentIndex agent;
  Vec2 pos;
};

/// Time-indexed agent positions. Agents get dense indices in first-appearance
/// order; frames cover [first_frame, last_frame] contiguously and may be empty.
class TrajectorySet {
 public:
  TrajectorySet() = default;

  /// Points must be ordered so that each agent's frames strictly increase.
  static TrajectorySet from_points(std::span<const TrajectoryPoint> points, double frame_rate_hz);

  double frame_rate_hz() const noexcept { return frame_rate_hz_; }
  bool empty() const noexcept { return tracks_.empty(); }
  std::size_t agent_count() const noexcept { return tracks_.size(); }

  FrameIndex first_frame() const noexcept { return first_frame_; }
  FrameIndex last_frame() const noexcept { return first_frame_ + static_cast<FrameIndex>(frames_.size()) - 1; }
  std::size_t frame_count() const noexcept { return frames_.size(); }

  /// Observations at frame t ordered by agent index; empty outside the range.
  std::span<const Observation> at(FrameIndex t) const noexcept;

  const std::string& agent_id(AgentIndex a) const { return ids_.at(a); }
  AgentType agent_type(AgentIndex a) const { return types_.at(a); }
  std::optional<AgentIndex> find(std::string_view agent_id) const noexcept;
  /// Throws LookupError for unknown ids.
  AgentIndex index_of(std::string_view agent_id) const;

  std::span<const TrackPoint> track(AgentIndex a) const { return tracks_.at(a); }
  std::optional<Vec2> position(AgentIndex a, FrameIndex t) const noexcept;

  /// Longest run of consecutive frames in which the agent is observed.
  std::pair<FrameIndex, FrameIndex> longest_presence(AgentIndex a) const;

  /// Copy with every position passed through `fn(agent, t, pos)`.
  template <typename Fn>
  TrajectorySet map_positions(Fn&& fn) const {
    TrajectorySet out = *this;
    for (AgentIndex a = 0; a < out.tracks_.size(); ++a) {
      for (auto& p : out.tracks_[a]) p.pos = fn(a, p.t, p.pos);
    }
    out.rebuild_frames();
    return out;
  }

  friend bool operator==(const TrajectorySet& a, const TrajectorySet& b) {
    return a.frame_rate_hz_ == b.frame_rate_hz_ && a.ids_ == b.ids_ && a.types_ == b.types_ &&
           a.tracks_ == b.tracks_;
  }

 private:
  void rebuild_frames();

  double frame_rate_hz_ = 1.0;
  std::vector<std::string> ids_;
  std::vector<AgentType> types_;
  std::vector<std::vector<TrackPoint>> tracks_;
  FrameIndex first_frame_ = 0;
  std::vector<std::vector<Observation>> frames_;
};

/// Parses `t,agent_id,agent_type,x,y` rows (header optional, blank lines skipped).
TrajectorySet parse_trajectory_csv(std::string_view text, double frame_rate_hz);
TrajectorySet read_trajectory_csv(const std::string& path, double frame_rate_hz);

/// Rows sorted by frame then agent index; coordinates printed round-trip exact.
std::string to_trajectory_csv(const TrajectorySet& ts);
void write_trajectory_csv(const TrajectorySet& ts, std::ostream& out);

/// Adds i.i.d. N(0, sigma^2) to each coordinate. sigma == 0 returns an exact copy.
TrajectorySet inject_position_noise(const TrajectorySet& ts, double sigma, std::uint64_t seed);

struct CentralitySeries;

/// Adds i.i.d. uniform noise on [-epsilon, epsilon] to every sample.
CentralitySeries inject_series_noise(const CentralitySeries& series, double epsilon,
                                     std::uint64_t seed);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// (t, value) plot series as CSV with a `t,value` header.
void write_series_csv(std::ostream& out, FrameIndex t_start, std::span<const double> values);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace stylegraph
