#include "stylegraph/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

#include "parallel.hpp"
#include "stylegraph/evalkit.hpp"

namespace stylegraph {

namespace {

constexpr double kLength = 5.0;
constexpr double kWidth = 2.0;
constexpr double kMinGap = 2.0;      // IDM s0
constexpr double kMaxAccel = 1.5;    // IDM a
constexpr double kComfortDecel = 2.0;
constexpr double kSafeDecel = 4.0;   // MOBIL b_safe
constexpr double kBaseChangeFrames = 40.0;

// Rows fill outward from row 0: 0, +1, -1, +2, -2, ...
double row_offset(std::size_t r) {
  const auto k = static_cast<double>((r + 1) / 2);
  return r % 2 == 1 ? k : -k;
}

struct LaneChange {
  FrameIndex start = 0;
  FrameIndex frames = 1;
  double y0 = 0.0;
  double y1 = 0.0;
};

struct Vehicle {
  std::string id;
  bool subject = false;
  double x = 0.0;
  double v = 0.0;
  double v0 = 0.0;
  std::size_t lane = 0;
  double lane_y = 0.0;  // lateral position ignoring the active lane change
  std::optional<LaneChange> change;
  double y = 0.0;
};

double quintic(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

double idm(double v, double v0, double headway, const Vehicle* leader, double gap) {
  double a = kMaxAccel * (1.0 - (v0 > 0.0 ? std::pow(v / v0, 4) : 1.0));
  if (leader) {
    const double dv = v - leader->v;
    const double s_star = kMinGap + std::max(0.0, v * headway + v * dv / (2.0 * std::sqrt(kMaxAccel * kComfortDecel)));
    const double s = std::max(gap, 0.1);
    a -= kMaxAccel * (s_star / s) * (s_star / s);
  }
  return a;
}

class Simulator {
 public:
  Simulator(const GeneratorParams& p, FrameIndex horizon) : p_(p), horizon_(horizon), rng_(p.seed) {}

  Episode run() {
    place();
    plan_script();
    std::vector<TrajectoryPoint> points;
    points.reserve(vehicles_.size() * static_cast<std::size_t>(horizon_));
    std::set<std::pair<std::size_t, std::size_t>> collided;
    for (FrameIndex t = 0; t < horizon_; ++t) {
      update_lateral(t);
      for (const auto& veh : vehicles_) points.push_back({t, veh.id, AgentType::kCar, veh.x, veh.y});
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        for (std::size_t j = i + 1; j < vehicles_.size(); ++j) {
          if (std::abs(vehicles_[i].x - vehicles_[j].x) < kLength && std::abs(vehicles_[i].y - vehicles_[j].y) < kWidth) {
            collided.insert({i, j});
          }
        }
      }
      if (t + 1 < horizon_) step(t);
    }
    Episode e;
    e.trajectories = TrajectorySet::from_points(points, p_.frame_rate);
    e.truth.collisions = collided.size();
    for (const auto& veh : vehicles_) {
      e.truth.labels.emplace_back(veh.id, veh.subject ? subject_label() : BehaviorLabel::kConservative);
    }
    std::sort(truth_.begin(), truth_.end(), [](const auto& a, const auto& b) { return a.peak < b.peak; });
    e.truth.maneuvers = std::move(truth_);
    return e;
  }

 private:
  double lane_center(std::size_t lane) const { return static_cast<double>(lane) * p_.lane_width; }
  double dt() const { return 1.0 / p_.frame_rate; }

  BehaviorLabel subject_label() const {
    const bool aggressive = p_.desired_speed > p_.traffic_speed + 3.0 || p_.lane_change_rate > 0.0 ||
                            p_.weave_amplitude > 0.0 || !p_.script.empty();
    return aggressive ? BehaviorLabel::kAggressive : BehaviorLabel::kConservative;
  }

  void place() {
    const double min_spacing = kLength + kMinGap;
    if (p_.initial_gap < min_spacing) {
      throw PlacementError("initial gap " + format_double(p_.initial_gap) + " m is below the " +
                           format_double(min_spacing) + " m a vehicle occupies");
    }
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vehicle ego;
    ego.id = kSubjectId;
    ego.subject = true;
    ego.lane = p_.subject_lane;
    ego.lane_y = lane_center(ego.lane);
    ego.y = ego.lane_y;
    ego.x = p_.subject_offset;
    ego.v = ego.v0 = p_.desired_speed;
    vehicles_.push_back(ego);

    const std::size_t background = p_.n_vehicles - 1;
    std::vector<std::size_t> lanes;
    for (std::size_t l = 0; l < p_.lanes; ++l) {
      if (!(p_.clear_subject_lane && l == p_.subject_lane)) lanes.push_back(l);
    }
    if (background > 0 && lanes.empty()) throw PlacementError("no lane is open to background traffic");
    const double jitter = 0.1 * (p_.initial_gap - min_spacing);
    std::vector<std::size_t> row_of_lane(lanes.size(), 0);
    for (std::size_t j = 0; j < background; ++j) {
      const std::size_t li = j % lanes.size();
      const std::size_t lane = lanes[li];
      const double stagger = static_cast<double>(li) / static_cast<double>(lanes.size()) * p_.initial_gap;
      double x = 0.0;
      for (;;) {
        x = row_offset(row_of_lane[li]++) * p_.initial_gap + stagger + jitter * unit(rng_);
        if (lane != ego.lane || std::abs(x - ego.x) >= min_spacing + jitter + 1.0) break;
      }
      Vehicle veh;
      char buf[32];
      std::snprintf(buf, sizeof buf, "v%02zu", j + 1);
      veh.id = buf;
      veh.lane = lane;
      veh.lane_y = veh.y = lane_center(lane);
      veh.x = x;
      veh.v = std::max(0.0, p_.traffic_speed + p_.speed_spread * unit(rng_));
      vehicles_.push_back(veh);
    }
    // Followers get the desired speed that makes their starting gap an IDM equilibrium.
    for (auto& veh : vehicles_) {
      if (veh.subject) continue;
      veh.v0 = veh.v;
      const auto [leader, gap] = leader_of(veh);
      if (!leader) continue;
      const double s_star = kMinGap + veh.v * p_.headway_time;
      const double ratio = std::min(0.9, (s_star / gap) * (s_star / gap));
      veh.v0 = veh.v / std::pow(1.0 - ratio, 0.25);
    }
  }

  void plan_script() {
    for (const auto& m : p_.script) {
      const FrameIndex start = m.peak - m.duration / 2;
      switch (m.style) {
        case StyleKind::kOverspeeding:
          bursts_.push_back({start, std::max<FrameIndex>(1, m.duration), m.magnitude});
          truth_.push_back({kSubjectId, m.style, start, m.peak, start + m.duration});
          break;
        case StyleKind::kOvertaking:
        case StyleKind::kSuddenLaneChange:
          scripted_changes_.push_back(m);
          break;
        case StyleKind::kWeaving:
          add_weave(start, start + m.duration, m.magnitude > 0.0 ? m.magnitude : p_.weave_amplitude);
          break;
        case StyleKind::kConservative:
          break;
      }
    }
    if (p_.weave_amplitude > 0.0 && std::none_of(p_.script.begin(), p_.script.end(), [](const auto& m) {
          return m.style == StyleKind::kWeaving;
        })) {
      add_weave(0, horizon_ - 1, p_.weave_amplitude);
    }
  }

  void add_weave(FrameIndex start, FrameIndex end, double amplitude) {
    weaves_.push_back({start, end, amplitude});
    const auto period = std::max<FrameIndex>(4, p_.weave_period);
    // Lateral extrema sit a quarter period after the start, then every half period.
    for (double c = static_cast<double>(start) + static_cast<double>(period) / 4.0; c < static_cast<double>(end);
         c += static_cast<double>(period) / 2.0) {
      const auto peak = static_cast<FrameIndex>(std::llround(c));
      truth_.push_back({kSubjectId, StyleKind::kWeaving, peak - period / 4, peak, peak + period / 4});
    }
  }

  double weave_offset(FrameIndex t) const {
    double y = 0.0;
    const double period = static_cast<double>(std::max<FrameIndex>(4, p_.weave_period));
    for (const auto& w : weaves_) {
      if (t >= w.start && t <= w.end) {
        y += w.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t - w.start) / period);
      }
    }
    return y;
  }

  double target_speed(FrameIndex t) const {
    double v = p_.desired_speed;
    for (const auto& b : bursts_) {
      if (t >= b.start && t <= b.start + b.frames) {
        const double u = static_cast<double>(t - b.start) / static_cast<double>(b.frames);
        v += b.magnitude * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * u));
      }
    }
    return v;
  }

  std::pair<const Vehicle*, double> leader_of(const Vehicle& veh) const {
    const Vehicle* best = nullptr;
    double gap = 0.0;
    for (const auto& o : vehicles_) {
      if (&o == &veh || o.x <= veh.x) continue;
      if (std::abs(o.y - veh.y) >= kWidth + 0.25) continue;
      const double g = o.x - veh.x - kLength;
      if (!best || g < gap) {
        best = &o;
        gap = g;
      }
    }
    return {best, gap};
  }

  // Leader and follower of a hypothetical vehicle at x in `lane`.
  std::pair<const Vehicle*, const Vehicle*> neighbors_in_lane(const Vehicle& self, std::size_t lane) const {
    const Vehicle* ahead = nullptr;
    const Vehicle* behind = nullptr;
    const double y = lane_center(lane);
    for (const auto& o : vehicles_) {
      if (&o == &self || std::abs(o.y - y) >= 0.75 * p_.lane_width) continue;
      if (o.x >= self.x && (!ahead || o.x < ahead->x)) ahead = &o;
      if (o.x < self.x && (!behind || o.x > behind->x)) behind = &o;
    }
    return {ahead, behind};
  }

  bool safe_to_enter(const Vehicle& self, std::size_t lane) const {
    const auto [ahead, behind] = neighbors_in_lane(self, lane);
    if (ahead && ahead->x - self.x - kLength < kMinGap) return false;
    if (behind) {
      const double gap = self.x - behind->x - kLength;
      if (gap < kMinGap) return false;
      if (idm(behind->v, behind->v0, p_.headway_time, &self, gap) < -kSafeDecel) return false;
    }
    return true;
  }

  void begin_change(Vehicle& veh, std::size_t lane, FrameIndex t, FrameIndex frames, StyleKind style) {
    veh.change = LaneChange{t, std::max<FrameIndex>(2, frames), veh.lane_y, lane_center(lane)};
    veh.lane = lane;
    truth_.push_back({veh.id, style, t, t + frames / 2, t + frames});
  }

  void update_lateral(FrameIndex t) {
    auto& ego = vehicles_.front();
    for (const auto& m : scripted_changes_) {
      if (m.peak - m.duration / 2 != t || ego.change) continue;
      const auto lanes = static_cast<long>(p_.lanes);
      const auto lane = std::clamp(static_cast<long>(ego.lane) + m.lane_delta, 0L, lanes - 1);
      if (static_cast<std::size_t>(lane) == ego.lane) continue;
      begin_change(ego, static_cast<std::size_t>(lane), t, m.duration, m.style);
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (p_.lane_change_rate > 0.0 && !ego.change) {
      if (u(rng_) < p_.lane_change_rate / 100.0) try_random_change(ego, t);
    }
    if (p_.background_lane_change_rate > 0.0) {
      for (auto& veh : vehicles_) {
        if (veh.subject || veh.change) continue;
        if (u(rng_) < p_.background_lane_change_rate / 100.0) try_random_change(veh, t);
      }
    }
    for (auto& veh : vehicles_) {
      if (veh.change) {
        const auto& c = *veh.change;
        const double u = static_cast<double>(t - c.start) / static_cast<double>(c.frames);
        veh.lane_y = c.y0 + (c.y1 - c.y0) * quintic(u);
        if (t - c.start >= c.frames) veh.change.reset();
      }
      veh.y = veh.lane_y + (veh.subject ? weave_offset(t) : 0.0);
    }
  }

  void try_random_change(Vehicle& ego, FrameIndex t) {
    const double desired = ego.subject ? target_speed(t) : ego.v0;
    std::vector<std::size_t> options;
    if (ego.lane > 0) options.push_back(ego.lane - 1);
    if (ego.lane + 1 < p_.lanes) options.push_back(ego.lane + 1);
    const auto [lead, gap] = leader_of(ego);
    double best_gain = -1e9;
    std::optional<std::size_t> best;
    for (auto lane : options) {
      if (!ego.subject && p_.clear_subject_lane && lane == p_.subject_lane) continue;
      if (!safe_to_enter(ego, lane)) continue;
      const auto [ahead, behind] = neighbors_in_lane(ego, lane);
      const double new_gap = ahead ? ahead->x - ego.x - kLength : 1e9;
      const double gain = idm(ego.v, desired, p_.headway_time, ahead, new_gap) -
                          idm(ego.v, desired, p_.headway_time, lead, gap);
      if (gain > best_gain) {
        best_gain = gain;
        best = lane;
      }
    }
    if (!best) return;
    const bool blocked = lead && gap < 40.0 && lead->v < ego.v + 0.5;
    const auto frames = static_cast<FrameIndex>(
        std::llround(kBaseChangeFrames / std::cbrt(std::max(1e-3, p_.lateral_jerk_scale))));
    begin_change(ego, *best, t, frames, blocked ? StyleKind::kOvertaking : StyleKind::kSuddenLaneChange);
  }

  void step(FrameIndex t) {
    std::vector<double> accel(vehicles_.size());
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      const auto& veh = vehicles_[i];
      const auto [leader, gap] = leader_of(veh);
      if (veh.subject) {
        const double target = target_speed(t + 1);
        const double track = (target - veh.v) * p_.frame_rate;
        // The subject holds its scripted speed and only brakes to avoid contact.
        const bool close = leader && gap < kMinGap + 1.0 + std::max(0.0, veh.v - leader->v) * 2.0;
        accel[i] = close ? std::min(track, idm(veh.v, target, p_.headway_time, leader, gap)) : track;
      } else {
        accel[i] = idm(veh.v, veh.v0, p_.headway_time, leader, gap);
      }
    }
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      auto& veh = vehicles_[i];
      const double v1 = std::max(0.0, veh.v + accel[i] * dt());
      veh.x += 0.5 * (veh.v + v1) * dt();
      veh.v = v1;
    }
  }

  struct Burst {
    FrameIndex start;
    FrameIndex frames;
    double magnitude;
  };
  struct Weave {
    FrameIndex start;
    FrameIndex end;
    double amplitude;
  };

  GeneratorParams p_;
  FrameIndex horizon_;
  std::mt19937_64 rng_;
  std::vector<Vehicle> vehicles_;
  std::vector<Burst> bursts_;
  std::vector<Weave> weaves_;
  std::vector<ScriptedManeuver> scripted_changes_;
  std::vector<TruthManeuver> truth_;
};

void validate(const GeneratorParams& p, FrameIndex horizon) {
  if (horizon < 50) throw DomainError("horizon must be >= 50 frames");
  if (p.lanes < 2 || p.lanes > 8) throw DomainError("lanes must be in [2, 8]");
  if (p.n_vehicles < 1) throw DomainError("need at least one vehicle");
  if (p.n_vehicles > 1000) throw DomainError("n_vehicles exceeds the adjacency capacity of 1000");
  if (p.subject_lane >= p.lanes) throw DomainError("subject lane is off the road");
  for (double v : {p.desired_speed, p.speed_spread, p.headway_time, p.lane_change_rate,
                   p.background_lane_change_rate, p.lateral_jerk_scale,
                   p.weave_amplitude, p.traffic_speed}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("generator speeds and rates must be finite and >= 0");
  }
  if (!(p.frame_rate > 0.0)) throw DomainError("frame rate must be > 0");
  if (!(p.lane_width > kWidth)) throw DomainError("lane width must exceed the vehicle width");
}

}  // namespace

BehaviorLabel EpisodeTruth::label_of(const std::string& agent_id) const {
  for (const auto& [id, label] : labels) {
    if (id == agent_id) return label;
  }
  throw LookupError("no truth label for agent '" + agent_id + "'");
}

std::vector<TruthManeuver> EpisodeTruth::maneuvers_of(const std::string& agent_id, StyleKind style) const {
  std::vector<TruthManeuver> out;
  for (const auto& m : maneuvers) {
    if (m.agent_id == agent_id && m.style == style) out.push_back(m);
  }
  return out;
}

Episode simulate(const GeneratorParams& params, FrameIndex horizon) {
  validate(params, horizon);
  return Simulator(params, horizon).run();
}

GeneratorParams preset_params(const std::string& name) {
  GeneratorParams p;
  p.speed_spread = 0.5;
  if (name == "conservative") return p;
  if (name == "aggressive") {
    p.desired_speed = p.traffic_speed + 6.0;
    p.lane_change_rate = 1.0;
    p.lateral_jerk_scale = 3.0;
    return p;
  }
  throw DomainError("unknown preset '" + name + "'");
}

namespace {

// Middle of the gap between rows 0 and 1 of the first open lane.
double gap_middle(const GeneratorParams& p) { return 0.5 * p.initial_gap; }

// Longitudinal middle of the background pack.
double pack_center(const GeneratorParams& p) {
  const std::size_t open = p.clear_subject_lane ? p.lanes - 1 : p.lanes;
  const std::size_t rows = (p.n_vehicles - 1 + open - 1) / open;
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    lo = std::min(lo, row_offset(r));
    hi = std::max(hi, row_offset(r));
  }
  const double stagger = 0.5 * static_cast<double>(open - 1) / static_cast<double>(open);
  return (0.5 * (lo + hi) + stagger) * p.initial_gap;
}

}  // namespace

Episode scripted_episode(StyleKind style, std::uint64_t seed, const SceneOptions& options) {
  std::mt19937_64 rng(seed ^ 0x5DEECE66Dull);
  const FrameIndex horizon = options.horizon;
  if (horizon < 100) throw DomainError("scripted scenes need a horizon of at least 100 frames");
  std::uniform_int_distribution<FrameIndex> shift(-horizon / 15, horizon / 15);
  const FrameIndex peak = horizon / 2 + shift(rng);

  GeneratorParams p;
  p.seed = seed;
  p.lanes = options.lanes ? options.lanes : 4;
  p.speed_spread = options.speed_spread >= 0.0 ? options.speed_spread : 0.0;
  p.background_lane_change_rate = options.background_lane_change_rate;
  p.clear_subject_lane = true;
  p.subject_lane = 0;
  const std::size_t open_lanes = p.lanes - 1;

  ScriptedManeuver m;
  m.style = style;
  m.peak = peak;
  switch (style) {
    case StyleKind::kOverspeeding: {
      p.n_vehicles = options.n_vehicles ? options.n_vehicles : 1 + 6 * open_lanes;
      m.duration = 120;
      m.magnitude = 15.0;
      // Reach the middle of the pack at the peak of the burst.
      p.subject_offset = pack_center(p) - 0.25 * m.magnitude * static_cast<double>(m.duration) / p.frame_rate;
      break;
    }
    case StyleKind::kOvertaking:
      p.n_vehicles = options.n_vehicles ? options.n_vehicles : 1 + 4 * open_lanes;
      // Draw level with the middle of a lane-1 gap at the peak.
      p.subject_offset = gap_middle(p);
      m.duration = 30;
      // Speed up through the maneuver to pass the lane-1 vehicle ahead.
      p.script.push_back({StyleKind::kOverspeeding, peak, 40, 3.0, 0});
      break;
    case StyleKind::kSuddenLaneChange:
      p.n_vehicles = options.n_vehicles ? options.n_vehicles : 1 + 4 * open_lanes;
      // Cut in 3.5 m behind a lane-1 vehicle; the one behind is far enough
      // back that it does not have to brake.
      p.initial_gap = 30.0;
      p.subject_offset = p.initial_gap - 8.5;
      m.duration = 16;
      break;
    case StyleKind::kWeaving: {
      p.n_vehicles = options.n_vehicles ? options.n_vehicles : 1 + 4 * open_lanes;
      // 5.5 m ahead of a lane-1 vehicle: the set of neighbours within mu stays
      // fixed over the whole sway, so closeness moves only with the offset.
      p.subject_offset = 5.5;
      std::uniform_int_distribution<int> halves(4, 7);
      m.duration = halves(rng) * p.weave_period / 2;
      m.magnitude = 1.25;
      break;
    }
    case StyleKind::kConservative:
      p.n_vehicles = options.n_vehicles ? options.n_vehicles : 1 + 4 * open_lanes;
      p.subject_offset = gap_middle(p);
      return simulate(p, horizon);
  }
  p.script.push_back(m);
  return simulate(p, horizon);
}

SceneScore score_scene(StyleKind style, std::uint64_t seed, const SceneOptions& options,
                       const AnalysisConfig& config) {
  if (style == StyleKind::kConservative) throw TypeError("conservative scenes have no maneuver to time");
  const auto episode = scripted_episode(style, seed, options);
  const EpisodeAnalysis analysis(episode.trajectories, config);
  const auto report = analysis.report(episode.trajectories.index_of(kSubjectId), 0.0);
  const auto truth = episode.truth.maneuvers_of(kSubjectId, style);
  const double f = episode.trajectories.frame_rate_hz();

  SceneScore score;
  score.truth_points = truth.size();
  score.detected_points = style == StyleKind::kWeaving ? report.critical_points.size() : 1;
  double sum = 0.0;
  for (const auto& m : truth) {
    const auto peak = static_cast<double>(m.peak);
    const auto frame = detection_frame(report, style, peak);
    if (!frame) {
      score.missed = true;
      sum += static_cast<double>(report.t_end - report.t_start + 1) / f;
      continue;
    }
    sum += tde(static_cast<double>(*frame), peak, f);
  }
  score.tde_seconds = truth.empty() ? 0.0 : sum / static_cast<double>(truth.size());
  return score;
}

std::vector<std::string> preset_names() {
  return {"conservative", "aggressive", "overspeeding", "overtaking", "sudden_lane_change", "weaving"};
}

Episode preset_episode(const std::string& name, std::uint64_t seed, FrameIndex horizon) {
  if (name == "conservative" || name == "aggressive") {
    auto p = preset_params(name);
    p.seed = seed;
    return simulate(p, horizon);
  }
  SceneOptions o;
  o.horizon = horizon;
  return scripted_episode(parse_style_kind(name), seed, o);
}

std::vector<Sample> labeled_dataset(const GeneratorParams& aggressive, const GeneratorParams& conservative,
                                    std::size_t n, FrameIndex horizon, std::uint64_t first_seed,
                                    const AnalysisConfig& config, FeatureLayout layout) {
  validate(aggressive, horizon);
  validate(conservative, horizon);
  auto serial = config;
  serial.jobs = 1;
  std::vector<Sample> out(n);
  detail::parallel_for(n, config.jobs, [&](std::size_t i) {
    auto p = i % 2 == 0 ? aggressive : conservative;
    p.seed = first_seed + i;
    const auto episode = simulate(p, horizon);
    const EpisodeAnalysis analysis(episode.trajectories, serial);
    const auto report = analysis.report(episode.trajectories.index_of(kSubjectId), 0.0);
    out[i] = {extract_features(report, layout), episode.truth.label_of(kSubjectId)};
  });
  return out;
}

std::vector<Sample> synthetic_dataset(std::size_t n, std::uint64_t seed, FrameIndex horizon,
                                      const AnalysisConfig& config, FeatureLayout layout,
                                      const DatasetBands& bands) {
  constexpr std::size_t kIters = 30;
  constexpr std::size_t kSeeds = 5;
  auto aggressive = preset_params("aggressive");
  auto conservative = preset_params("conservative");
  aggressive.seed = conservative.seed = seed;
  aggressive =
      calibrate({BehaviorLabel::kAggressive, bands.aggressive}, aggressive, kIters, horizon, kSeeds, config).params;
  conservative = calibrate({BehaviorLabel::kConservative, bands.conservative}, conservative, kIters, horizon, kSeeds,
                           config)
                     .params;
  return labeled_dataset(aggressive, conservative, n, horizon, seed + 1000003, config, layout);
}

void write_truth_csv(std::ostream& out, const EpisodeTruth& truth) {
  out << "agent_id,label\n";
  for (const auto& [id, label] : truth.labels) out << id << ',' << behavior_label_name(label) << '\n';
  out << "\nagent_id,style,start,peak,end\n";
  for (const auto& m : truth.maneuvers) {
    out << m.agent_id << ',' << style_kind_name(m.style) << ',' << m.start << ',' << m.peak << ',' << m.end << '\n';
  }
}

namespace {

using Json = nlohmann::json;

Json params_json(const GeneratorParams& p) {
  Json script = Json::array();
  for (const auto& m : p.script) {
    script.push_back({{"style", style_kind_name(m.style)},
                      {"peak", m.peak},
                      {"duration", m.duration},
                      {"magnitude", m.magnitude},
                      {"lane_delta", m.lane_delta}});
  }
  return {{"lanes", p.lanes},
          {"n_vehicles", p.n_vehicles},
          {"desired_speed", p.desired_speed},
          {"speed_spread", p.speed_spread},
          {"headway_time", p.headway_time},
          {"lane_change_rate", p.lane_change_rate},
          {"background_lane_change_rate", p.background_lane_change_rate},
          {"lateral_jerk_scale", p.lateral_jerk_scale},
          {"weave_amplitude", p.weave_amplitude},
          {"seed", p.seed},
          {"traffic_speed", p.traffic_speed},
          {"frame_rate", p.frame_rate},
          {"lane_width", p.lane_width},
          {"initial_gap", p.initial_gap},
          {"weave_period", p.weave_period},
          {"subject_lane", p.subject_lane},
          {"subject_offset", p.subject_offset},
          {"clear_subject_lane", p.clear_subject_lane},
          {"script", script}};
}

template <typename T>
void take(const Json& doc, const char* key, T& field) {
  if (!doc.contains(key)) return;
  try {
    field = doc.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("generator field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string params_to_json(const GeneratorParams& params) { return params_json(params).dump(2); }

GeneratorParams params_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(0, std::string("generator params: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("generator params must be a JSON object");
  const GeneratorParams defaults;
  const auto known = params_json(defaults);
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("unknown generator field '" + key + "'");
  }
  GeneratorParams p;
  take(doc, "lanes", p.lanes);
  take(doc, "n_vehicles", p.n_vehicles);
  take(doc, "desired_speed", p.desired_speed);
  take(doc, "speed_spread", p.speed_spread);
  take(doc, "headway_time", p.headway_time);
  take(doc, "lane_change_rate", p.lane_change_rate);
  take(doc, "background_lane_change_rate", p.background_lane_change_rate);
  take(doc, "lateral_jerk_scale", p.lateral_jerk_scale);
  take(doc, "weave_amplitude", p.weave_amplitude);
  take(doc, "seed", p.seed);
  take(doc, "traffic_speed", p.traffic_speed);
  take(doc, "frame_rate", p.frame_rate);
  take(doc, "lane_width", p.lane_width);
  take(doc, "initial_gap", p.initial_gap);
  take(doc, "weave_period", p.weave_period);
  take(doc, "subject_lane", p.subject_lane);
  take(doc, "subject_offset", p.subject_offset);
  take(doc, "clear_subject_lane", p.clear_subject_lane);
  if (doc.contains("script")) {
    if (!doc["script"].is_array()) throw ConfigError("generator field 'script' must be a list");
    for (const auto& m : doc["script"]) {
      if (!m.is_object()) throw ConfigError("script entries must be objects");
      ScriptedManeuver s;
      std::string style = std::string(style_kind_name(s.style));
      take(m, "style", style);
      s.style = parse_style_kind(style);
      take(m, "peak", s.peak);
      take(m, "duration", s.duration);
      take(m, "magnitude", s.magnitude);
      take(m, "lane_delta", s.lane_delta);
      p.script.push_back(s);
    }
  }
  return p;
}

std::string calibration_to_json(const CalibrationResult& result) {
  Json doc = {{"converged", result.converged},
              {"iterations", result.iterations},
              {"achieved",
               {{"sle_max", result.achieved.sle_max},
                {"sie_max", result.achieved.sie_max},
                {"weaving_points", result.achieved.weaving_points}}},
              {"params", params_json(result.params)}};
  return doc.dump(2);
}

Measurement measure(const GeneratorParams& params, FrameIndex horizon, std::size_t seeds,
                    const AnalysisConfig& config) {
  if (seeds == 0) throw DomainError("need at least one seed");
  Measurement m;
  for (std::size_t k = 0; k < seeds; ++k) {
    auto p = params;
    p.seed = params.seed + k;
    const auto episode = simulate(p, horizon);
    const EpisodeAnalysis analysis(episode.trajectories, config);
    const auto report = analysis.report(episode.trajectories.index_of(kSubjectId), 0.0);
    m.sle_max += report.sle_max();
    double sie = 0.0;
    for (const auto& c : report.curves) sie = std::max(sie, c.sie_max);
    m.sie_max += sie;
    m.weaving_points += static_cast<double>(report.critical_points.size());
  }
  const double n = static_cast<double>(seeds);
  m.sle_max /= n;
  m.sie_max /= n;
  m.weaving_points /= n;
  return m;
}

namespace {

struct Knob {
  double GeneratorParams::*field;
  double floor;
  double ceiling;
  double first_step;
};

double shortfall(const CalibrationTarget& target, const Measurement& m) {
  if (target.label == BehaviorLabel::kAggressive) return std::max(0.0, target.sle_threshold - m.sle_max);
  return std::max(0.0, m.sle_max - target.sle_threshold) + m.weaving_points;
}

}  // namespace

CalibrationResult calibrate(const CalibrationTarget& target, const GeneratorParams& start, std::size_t max_iters,
                            FrameIndex horizon, std::size_t seeds, const AnalysisConfig& config) {
  if (max_iters == 0) throw DomainError("max_iters must be >= 1");
  if (!std::isfinite(target.sle_threshold)) throw DomainError("calibration threshold must be finite");
  validate(start, horizon);

  const bool up = target.label == BehaviorLabel::kAggressive;
  const std::vector<Knob> knobs = {
      {&GeneratorParams::desired_speed, start.traffic_speed, start.traffic_speed + 20.0, 2.0},
      {&GeneratorParams::lane_change_rate, 0.0, 5.0, 0.5},
      {&GeneratorParams::speed_spread, 0.0, 5.0, 0.5},
      {&GeneratorParams::weave_amplitude, 0.0, 2.0, 0.5},
      {&GeneratorParams::lateral_jerk_scale, 1.0, 27.0, 1.0},
  };

  CalibrationResult best;
  best.params = start;
  best.achieved = measure(start, horizon, seeds, config);
  double best_gap = shortfall(target, best.achieved);
  for (std::size_t iter = 0; iter < max_iters && best_gap > 0.0; ++iter) {
    best.iterations = iter + 1;
    const auto& knob = knobs[iter % knobs.size()];
    const double current = best.params.*knob.field;
    const double offset = current - knob.floor;
    // The multiplicative step, then the end of the knob's range if the step
    // alone does not help.
    double step = 0.0;
    if (up) {
      step = offset <= 0.0 ? knob.floor + knob.first_step : knob.floor + 2.0 * offset;
    } else {
      step = offset < knob.first_step / 4.0 ? knob.floor : knob.floor + 0.5 * offset;
    }
    for (double value : {step, up ? knob.ceiling : knob.floor}) {
      value = std::clamp(value, knob.floor, knob.ceiling);
      if (value == current) continue;
      auto trial = best.params;
      trial.*knob.field = value;
      const auto m = measure(trial, horizon, seeds, config);
      const double gap = shortfall(target, m);
      if (gap < best_gap) {
        best.params = trial;
        best.achieved = m;
        best_gap = gap;
        break;
      }
    }
  }
  best.converged = best_gap == 0.0;
  if (!best.converged) {
    throw CalibrationFailure("calibration did not reach the " + std::string(behavior_label_name(target.label)) +
                                 " band in " + std::to_string(max_iters) + " iterations",
                             best);
  }
  return best;
}

}  // namespace stylegraph
