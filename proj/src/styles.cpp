#include "stylegraph/styles.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <ostream>

#include "parallel.hpp"
#include "stylegraph/error.hpp"

namespace stylegraph {

using nlohmann::json;

namespace {

constexpr StyleKind kCurveKinds[] = {StyleKind::kOverspeeding, StyleKind::kOvertaking,
                                     StyleKind::kSuddenLaneChange};

void check_kind(CentralityKind have, StyleKind kind) {
  if (style_centrality(kind) != have) {
    throw TypeError(std::string(style_kind_name(kind)) + " is estimated from " +
                    std::string(centrality_kind_name(style_centrality(kind))) + " centrality, got " +
                    std::string(centrality_kind_name(have)));
  }
}

void finish_curve(StyleCurve& c) {
  c.sle_max = 0.0;
  c.t_sle = c.t_start;
  for (std::size_t k = 0; k < c.sle.size(); ++k) {
    if (c.sle[k] > c.sle_max) {
      c.sle_max = c.sle[k];
      c.t_sle = c.t_start + static_cast<FrameIndex>(k);
    }
  }
  c.sie_max = c.sie.empty() ? 0.0 : *std::max_element(c.sie.begin(), c.sie.end());
}

std::uint64_t noise_seed(std::uint64_t seed, AgentIndex agent, CentralityKind kind) {
  const std::uint64_t salt = 2 * static_cast<std::uint64_t>(agent) + (kind == CentralityKind::kDegree ? 1 : 2);
  return seed ^ (0x9E3779B97F4A7C15ull * salt);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json poly_json(const CentralityPolynomial& p) {
  return {{"kind", centrality_kind_name(p.kind)}, {"beta", p.beta},       {"degree", p.degree},
          {"alpha", p.alpha},                     {"t_start", p.t_start}, {"t_end", p.t_end},
          {"origin", p.origin},                   {"kappa", p.kappa}};
}

json report_json(const StyleReport& r) {
  json curves = json::array();
  for (const auto& c : r.curves) {
    curves.push_back({{"style", style_kind_name(c.kind)},
                      {"t_start", c.t_start},
                      {"sle_max", c.sle_max},
                      {"t_sle", c.t_sle},
                      {"sie_max", c.sie_max},
                      {"sle", c.sle},
                      {"sie", c.sie}});
  }
  json points = json::array();
  for (const auto& p : r.critical_points) points.push_back({{"t", p.t}, {"sharpness", p.sharpness}});
  return {{"agent_id", r.agent_id},
          {"t_start", r.t_start},
          {"t_end", r.t_end},
          {"curves", curves},
          {"weaving", {{"count", r.critical_points.size()}, {"critical_points", points}}},
          {"degree_fit", poly_json(r.degree_fit)},
          {"closeness_fit", poly_json(r.closeness_fit)},
          {"conservative_tol", r.conservative_tol},
          {"conservative", r.conservative}};
}

}  // namespace

std::string_view style_kind_name(StyleKind kind) noexcept {
  switch (kind) {
    case StyleKind::kOverspeeding: return "overspeeding";
    case StyleKind::kOvertaking: return "overtaking";
    case StyleKind::kSuddenLaneChange: return "sudden_lane_change";
    case StyleKind::kWeaving: return "weaving";
    case StyleKind::kConservative: return "conservative";
  }
  return "unknown";
}

StyleKind parse_style_kind(std::string_view name) {
  for (auto k : {StyleKind::kOverspeeding, StyleKind::kOvertaking, StyleKind::kSuddenLaneChange,
                 StyleKind::kWeaving, StyleKind::kConservative}) {
    if (style_kind_name(k) == name) return k;
  }
  throw DomainError("unknown style '" + std::string(name) + "'");
}

CentralityKind style_centrality(StyleKind kind) {
  switch (kind) {
    case StyleKind::kOverspeeding: return CentralityKind::kDegree;
    case StyleKind::kOvertaking:
    case StyleKind::kSuddenLaneChange:
    case StyleKind::kWeaving: return CentralityKind::kCloseness;
    case StyleKind::kConservative: break;
  }
  throw TypeError("conservative has no centrality estimator");
}

SleCurve style_likelihood(const CentralityPolynomial& p, StyleKind kind) {
  if (kind == StyleKind::kWeaving) throw TypeError("weaving likelihood is the critical-point count");
  check_kind(p.kind, kind);
  SleCurve c;
  c.t_start = p.t_start;
  c.t_max = p.t_start;
  for (FrameIndex t = p.t_start; t <= p.t_end; ++t) {
    const double v = std::abs(eval_poly(p, static_cast<double>(t), 1));
    if (v > c.max) {
      c.max = v;
      c.t_max = t;
    }
    c.values.push_back(v);
  }
  return c;
}

std::vector<double> style_intensity(const CentralityPolynomial& p, StyleKind kind) {
  if (kind == StyleKind::kWeaving) throw TypeError("weaving intensity is the per-point sharpness");
  check_kind(p.kind, kind);
  std::vector<double> out;
  for (FrameIndex t = p.t_start; t <= p.t_end; ++t) out.push_back(std::abs(eval_poly(p, static_cast<double>(t), 2)));
  return out;
}

StyleCurve style_curve(const CentralitySeries& series, StyleKind kind, const AnalysisConfig& config) {
  if (kind == StyleKind::kWeaving) throw TypeError("weaving has no SLE curve");
  check_kind(series.kind, kind);
  if (series.values.empty()) throw DomainError("cannot estimate styles on an empty series");
  StyleCurve c;
  c.kind = kind;
  c.t_start = series.t_start;
  const auto n = series.size();
  const auto w = config.fit_window == 0 || config.fit_window >= n ? n : config.fit_window;
  const double alpha = select_alpha(w, config.degree, config.delta, config.origin);
  WindowFitter fitter(w, config.degree, alpha, config.origin);
  fitter.set_level_removal(true);
  if (w == n) {
    const auto p = fitter.fit(series, 0);
    c.sle = style_likelihood(p, kind).values;
    c.sie = style_intensity(p, kind);
  } else {
    std::vector<CentralityPolynomial> fits;
    fits.reserve(n - w + 1);
    for (std::size_t off = 0; off + w <= n; ++off) fits.push_back(fitter.fit(series, off));
    c.sle.resize(n);
    c.sie.resize(n);
    // Each frame reads the fit centered on it. Frames within half a window of
    // either end reuse the outermost fit at its center: regularization shrinks
    // the coefficients unevenly, so extrapolated derivatives are not comparable.
    const auto half = static_cast<std::ptrdiff_t>((w - 1) / 2);
    for (std::size_t k = 0; k < n; ++k) {
      const auto off = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k) - half, 0,
                                                  static_cast<std::ptrdiff_t>(n - w));
      const auto& p = fits[static_cast<std::size_t>(off)];
      const double t = static_cast<double>(series.t_start) + static_cast<double>(off + half);
      c.sle[k] = std::abs(eval_poly(p, t, 1));
      c.sie[k] = std::abs(eval_poly(p, t, 2));
    }
  }
  finish_curve(c);
  return c;
}

FrameIndex CriticalPoint::frame() const noexcept { return static_cast<FrameIndex>(std::llround(t)); }

std::vector<CriticalPoint> detect_weaving(const CentralitySeries& series, const WeavingOptions& options) {
  if (series.kind != CentralityKind::kCloseness) throw TypeError("weaving is detected on closeness series");
  if (options.stride == 0) throw DomainError("weaving stride must be > 0");
  if (options.window < 3) throw DomainError("weaving window must hold at least 3 frames");
  if (options.window > series.size()) {
    throw DomainError("weaving window " + std::to_string(options.window) + " exceeds series length " +
                      std::to_string(series.size()));
  }
  if (!(options.eps_ball > 0.0)) throw DomainError("eps_ball must be > 0");

  const WindowFitter fitter(options.window, 2, 0.0, TimeOrigin::kWindowCenter);
  const auto& z = series.values;
  const auto n = static_cast<FrameIndex>(z.size());
  const auto reach = static_cast<FrameIndex>(std::floor(options.eps_ball));
  std::vector<CriticalPoint> points;
  for (std::size_t off = 0; off + options.window <= z.size(); off += options.stride) {
    const auto p = fitter.fit(series, off);
    if (p.beta[2] == 0.0) continue;
    const double tc = p.origin - p.beta[1] / (2.0 * p.beta[2]);
    if (!(tc > static_cast<double>(p.t_start) && tc < static_cast<double>(p.t_end))) continue;

    const FrameIndex c = static_cast<FrameIndex>(std::llround(tc)) - series.t_start;
    double dev = 0.0;
    for (FrameIndex k = std::max<FrameIndex>(0, c - reach); k <= std::min(n - 1, c + reach); ++k) {
      dev = std::max(dev, std::abs(z[static_cast<std::size_t>(k)] - z[static_cast<std::size_t>(c)]));
    }
    const double sharpness = dev / options.eps_ball;
    if (!(sharpness > options.sharp_tol)) continue;

    auto near = std::find_if(points.begin(), points.end(),
                             [&](const CriticalPoint& q) { return std::abs(q.t - tc) <= options.eps_ball; });
    if (near == points.end()) {
      points.push_back({tc, sharpness});
    } else if (sharpness > near->sharpness) {
      *near = {tc, sharpness};
    }
  }
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  return points;
}

const StyleCurve& StyleReport::curve(StyleKind kind) const {
  for (const auto& c : curves) {
    if (c.kind == kind) return c;
  }
  throw TypeError(std::string(style_kind_name(kind)) + " has no SLE curve");
}

double StyleReport::sle_max() const noexcept {
  double m = 0.0;
  for (const auto& c : curves) m = std::max(m, c.sle_max);
  return m;
}

double StyleReport::weaving_sie_max() const noexcept {
  double m = 0.0;
  for (const auto& p : critical_points) m = std::max(m, p.sharpness);
  return m;
}

bool classify_conservative(const StyleReport& report, double tol) {
  return report.sle_max() <= tol && report.critical_points.empty();
}

EpisodeAnalysis::EpisodeAnalysis(const TrajectorySet& ts, const AnalysisConfig& config) : ts_(ts), config_(config) {
  config_.validate();
  if (ts.empty()) return;
  snapshots_.reserve(ts.frame_count());
  degrees_.reserve(ts.frame_count());
  AdjacencyState state(config_.capacity, config_.dwell);
  for (FrameIndex t = ts.first_frame(); t <= ts.last_frame(); ++t) {
    snapshots_.push_back(build_snapshot(ts.at(t), config_.mu, t));
    state = update_adjacency(std::move(state), snapshots_.back(), frame_speeds(ts, t));
    std::vector<int> deg(ts.agent_count(), -1);
    for (const auto& [agent, row] : state.rows()) deg[agent] = static_cast<int>(state.degree(agent));
    degrees_.push_back(std::move(deg));
  }
  epochs_ = state.epoch() + 1;
}

const GraphSnapshot& EpisodeAnalysis::snapshot(FrameIndex t) const {
  return snapshots_.at(static_cast<std::size_t>(t - ts_.first_frame()));
}

std::pair<FrameIndex, FrameIndex> EpisodeAnalysis::window(AgentIndex agent) const {
  if (agent >= ts_.agent_count()) throw LookupError("unknown agent index " + std::to_string(agent));
  return ts_.longest_presence(agent);
}

CentralitySeries EpisodeAnalysis::degree_series(AgentIndex agent) const {
  const auto [lo, hi] = window(agent);
  CentralitySeries s;
  s.agent = agent;
  s.kind = CentralityKind::kDegree;
  s.t_start = lo;
  s.t_end = hi;
  for (FrameIndex t = lo; t <= hi; ++t) {
    const int d = degrees_[static_cast<std::size_t>(t - ts_.first_frame())][agent];
    if (d < 0) throw LookupError("agent " + std::to_string(agent) + " is not mapped at frame " + std::to_string(t));
    s.values.push_back(static_cast<double>(d));
  }
  if (config_.series_noise > 0.0) {
    s = inject_series_noise(s, config_.series_noise, noise_seed(config_.seed, agent, s.kind));
  }
  return s;
}

CentralitySeries EpisodeAnalysis::closeness_series(AgentIndex agent) const {
  const auto [lo, hi] = window(agent);
  CentralitySeries s;
  s.agent = agent;
  s.kind = CentralityKind::kCloseness;
  s.t_start = lo;
  s.t_end = hi;
  for (FrameIndex t = lo; t <= hi; ++t) s.values.push_back(closeness(snapshot(t), agent));
  if (config_.series_noise > 0.0) {
    s = inject_series_noise(s, config_.series_noise, noise_seed(config_.seed, agent, s.kind));
  }
  return s;
}

StyleReport EpisodeAnalysis::report(AgentIndex agent, double tol) const {
  const auto ds = degree_series(agent);
  const auto cs = closeness_series(agent);
  StyleReport r;
  r.agent = agent;
  r.agent_id = ts_.agent_id(agent);
  r.t_start = ds.t_start;
  r.t_end = ds.t_end;
  for (auto kind : kCurveKinds) r.curves.push_back(style_curve(kind == StyleKind::kOverspeeding ? ds : cs, kind, config_));
  if (cs.size() >= config_.weave_window) {
    r.critical_points =
        detect_weaving(cs, {config_.weave_window, config_.weave_stride, config_.eps_ball, config_.sharp_tol});
  }
  const auto n = ds.size();
  const double alpha = select_alpha(n, config_.degree, config_.delta, config_.origin);
  r.degree_fit = fit_tikhonov(ds, config_.degree, alpha, config_.origin);
  r.closeness_fit = fit_tikhonov(cs, config_.degree, alpha, config_.origin);
  r.conservative_tol = tol;
  r.conservative = classify_conservative(r, tol);
  return r;
}

std::vector<StyleReport> EpisodeAnalysis::reports() const {
  std::vector<StyleReport> out(ts_.agent_count());
  detail::parallel_for(out.size(), config_.jobs, [&](std::size_t a) { out[a] = report(a, 0.0); });
  double tol = 0.0;
  if (config_.conservative_tol) {
    tol = *config_.conservative_tol;
  } else {
    std::vector<double> maxima;
    for (const auto& r : out) maxima.push_back(r.sle_max());
    tol = 0.05 * median(std::move(maxima));
  }
  for (auto& r : out) {
    r.conservative_tol = tol;
    r.conservative = classify_conservative(r, tol);
  }
  return out;
}

std::vector<StyleReport> analyze_episode(const TrajectorySet& ts, const AnalysisConfig& config) {
  return EpisodeAnalysis(ts, config).reports();
}

StyleReport style_report(const TrajectorySet& ts, AgentIndex agent, const AnalysisConfig& config) {
  if (agent >= ts.agent_count()) throw LookupError("unknown agent index " + std::to_string(agent));
  const EpisodeAnalysis episode(ts, config);
  if (config.conservative_tol) return episode.report(agent, *config.conservative_tol);
  auto all = episode.reports();
  return std::move(all[agent]);
}

std::string report_to_json(const StyleReport& report) { return report_json(report).dump(2) + "\n"; }

std::string reports_to_json(std::span<const StyleReport> reports) {
  json doc = json::array();
  for (const auto& r : reports) doc.push_back(report_json(r));
  return doc.dump(2) + "\n";
}

void write_curve_csv(std::ostream& out, const StyleCurve& curve) {
  out << "t,sle,sie,marker\n";
  for (std::size_t k = 0; k < curve.sle.size(); ++k) {
    const auto t = curve.t_start + static_cast<FrameIndex>(k);
    out << t << ',' << format_double(curve.sle[k]) << ',' << format_double(curve.sie[k]) << ','
        << (t == curve.t_sle ? "t_sle" : "") << '\n';
  }
}

}  // namespace stylegraph
