#include "stylegraph/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "stylegraph/centrality.hpp"
#include "stylegraph/error.hpp"

namespace stylegraph {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::string_view agent_type_name(AgentType type) noexcept {
  switch (type) {
    case AgentType::kCar: return "car";
    case AgentType::kBus: return "bus";
    case AgentType::kTruck: return "truck";
    case AgentType::kOther: break;
  }
  return "other";
}

AgentType parse_agent_type(std::string_view tag) noexcept {
  std::string lower(tag);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "car") return AgentType::kCar;
  if (lower == "bus") return AgentType::kBus;
  if (lower == "truck") return AgentType::kTruck;
  return AgentType::kOther;
}

double distance(Vec2 a, Vec2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

TrajectorySet TrajectorySet::from_points(std::span<const TrajectoryPoint> points, double frame_rate_hz) {
  if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
    throw DomainError("frame rate must be a positive finite number");
  }
  if (points.empty()) throw EmptyInputError("trajectory has no points");

  TrajectorySet ts;
  ts.frame_rate_hz_ = frame_rate_hz;
  std::unordered_map<std::string, AgentIndex> index;
  for (const auto& p : points) {
    if (p.t < 0) throw DomainError("negative frame index for agent '" + p.agent_id + "'");
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DomainError("non-finite position for agent '" + p.agent_id + "'");
    }
    auto [it, inserted] = index.try_emplace(p.agent_id, ts.ids_.size());
    if (inserted) {
      ts.ids_.push_back(p.agent_id);
      ts.types_.push_back(p.agent_type);
      ts.tracks_.emplace_back();
    }
    auto& track = ts.tracks_[it->second];
    if (!track.empty() && track.back().t >= p.t) {
      throw OrderingError("frames for agent '" + p.agent_id + "' are not strictly increasing at t=" +
                          std::to_string(p.t));
    }
    track.push_back({p.t, {p.x, p.y}});
  }
  ts.rebuild_frames();
  return ts;
}

void TrajectorySet::rebuild_frames() {
  frames_.clear();
  if (tracks_.empty()) return;
  FrameIndex lo = tracks_.front().front().t;
  FrameIndex hi = lo;
  for (const auto& track : tracks_) {
    lo = std::min(lo, track.front().t);
    hi = std::max(hi, track.back().t);
  }
  first_frame_ = lo;
  frames_.resize(static_cast<std::size_t>(hi - lo + 1));
  for (AgentIndex a = 0; a < tracks_.size(); ++a) {
    for (const auto& p : tracks_[a]) frames_[static_cast<std::size_t>(p.t - lo)].push_back({a, p.pos});
  }
}

std::span<const Observation> TrajectorySet::at(FrameIndex t) const noexcept {
  if (frames_.empty() || t < first_frame_ || t > last_frame()) return {};
  return frames_[static_cast<std::size_t>(t - first_frame_)];
}

std::optional<AgentIndex> TrajectorySet::find(std::string_view agent_id) const noexcept {
  for (AgentIndex a = 0; a < ids_.size(); ++a) {
    if (ids_[a] == agent_id) return a;
  }
  return std::nullopt;
}

AgentIndex TrajectorySet::index_of(std::string_view agent_id) const {
  if (auto a = find(agent_id)) return *a;
  throw LookupError("unknown agent '" + std::string(agent_id) + "'");
}

std::optional<Vec2> TrajectorySet::position(AgentIndex a, FrameIndex t) const noexcept {
  if (a >= tracks_.size()) return std::nullopt;
  const auto& track = tracks_[a];
  auto it = std::lower_bound(track.begin(), track.end(), t,
                             [](const TrackPoint& p, FrameIndex v) { return p.t < v; });
  if (it == track.end() || it->t != t) return std::nullopt;
  return it->pos;
}

std::pair<FrameIndex, FrameIndex> TrajectorySet::longest_presence(AgentIndex a) const {
  const auto& track = tracks_.at(a);
  std::pair<FrameIndex, FrameIndex> best{track.front().t, track.front().t};
  FrameIndex run_start = track.front().t;
  for (std::size_t k = 1; k <= track.size(); ++k) {
    if (k == track.size() || track[k].t != track[k - 1].t + 1) {
      if (track[k - 1].t - run_start > best.second - best.first) best = {run_start, track[k - 1].t};
      if (k < track.size()) run_start = track[k].t;
    }
  }
  return best;
}

TrajectorySet parse_trajectory_csv(std::string_view text, double frame_rate_hz) {
  std::vector<TrajectoryPoint> points;
  std::map<std::pair<std::string, FrameIndex>, std::size_t> seen;
  std::unordered_map<std::string, FrameIndex> last_t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first_content = true;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (first_content) {
      first_content = false;
      if (fields.size() == 5 && fields[0] == "t") continue;
    }
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected 5 fields t,agent_id,agent_type,x,y, got " + std::to_string(fields.size()));
    }
    TrajectoryPoint p;
    if (!parse_number(fields[0], p.t) || p.t < 0) {
      throw ParseError(line_no, "frame index must be a non-negative integer");
    }
    if (fields[1].empty()) throw ParseError(line_no, "empty agent id");
    p.agent_id = std::string(fields[1]);
    p.agent_type = parse_agent_type(fields[2]);
    if (!parse_number(fields[3], p.x) || !parse_number(fields[4], p.y) || !std::isfinite(p.x) ||
        !std::isfinite(p.y)) {
      throw ParseError(line_no, "coordinates must be finite numbers");
    }
    if (auto [it, inserted] = seen.try_emplace({p.agent_id, p.t}, line_no); !inserted) {
      throw ParseError(line_no, "duplicate row for agent '" + p.agent_id + "' at t=" + std::to_string(p.t) +
                                    " (first seen on line " + std::to_string(it->second) + ")");
    }
    if (auto it = last_t.find(p.agent_id); it != last_t.end() && it->second > p.t) {
      throw OrderingError("line " + std::to_string(line_no) + ": frames for agent '" + p.agent_id +
                          "' go backwards (" + std::to_string(it->second) + " then " + std::to_string(p.t) + ")");
    }
    last_t[p.agent_id] = p.t;
    points.push_back(std::move(p));
  }
  if (points.empty()) throw EmptyInputError("trajectory CSV contains no data rows");
  return TrajectorySet::from_points(points, frame_rate_hz);
}

TrajectorySet read_trajectory_csv(const std::string& path, double frame_rate_hz) {
  return parse_trajectory_csv(read_text_file(path), frame_rate_hz);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_trajectory_csv(const TrajectorySet& ts, std::ostream& out) {
  out << "t,agent_id,agent_type,x,y\n";
  if (ts.empty()) return;
  for (FrameIndex t = ts.first_frame(); t <= ts.last_frame(); ++t) {
    for (const auto& obs : ts.at(t)) {
      out << t << ',' << ts.agent_id(obs.agent) << ',' << agent_type_name(ts.agent_type(obs.agent)) << ','
          << format_double(obs.pos.x) << ',' << format_double(obs.pos.y) << '\n';
    }
  }
}

std::string to_trajectory_csv(const TrajectorySet& ts) {
  std::ostringstream out;
  write_trajectory_csv(ts, out);
  return out.str();
}

TrajectorySet inject_position_noise(const TrajectorySet& ts, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("position noise sigma must be >= 0");
  if (sigma == 0.0) return ts;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  // Tracks are visited in agent order, so the draw sequence is fixed by the seed.
  return ts.map_positions([&](AgentIndex, FrameIndex, Vec2 p) {
    const double dx = noise(rng);
    const double dy = noise(rng);
    return Vec2{p.x + dx, p.y + dy};
  });
}

CentralitySeries inject_series_noise(const CentralitySeries& series, double epsilon, std::uint64_t seed) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("series noise epsilon must be >= 0");
  CentralitySeries out = series;
  if (epsilon == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (auto& v : out.values) v += epsilon * noise(rng);
  return out;
}

void write_series_csv(std::ostream& out, FrameIndex t_start, std::span<const double> values) {
  out << "t,value\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    out << t_start + static_cast<FrameIndex>(k) << ',' << format_double(values[k]) << '\n';
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace stylegraph
