#include "stylegraph/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <json.hpp>

#include "stylegraph/error.hpp"

namespace stylegraph {

EventEstimate aggregate_annotations(std::span<const Annotation> annotations) {
  if (annotations.empty()) throw DomainError("annotation set is empty");
  EventEstimate e;
  e.s_star = annotations.front().start;
  e.e_star = annotations.front().end;
  for (const auto& a : annotations) {
    if (a.start > a.end) {
      throw DomainError("annotation by '" + a.participant + "' ends before it starts");
    }
    e.s_star = std::min(e.s_star, a.start);
    e.e_star = std::max(e.e_star, a.end);
  }
  e.counts.assign(static_cast<std::size_t>(e.e_star - e.s_star + 1), 0);
  for (const auto& a : annotations) {
    for (FrameIndex t = a.start; t <= a.end; ++t) ++e.counts[static_cast<std::size_t>(t - e.s_star)];
  }
  std::size_t total = 0;
  for (auto c : e.counts) total += c;
  // Integer counts make the expectation exact up to one final division.
  long double weighted = 0.0L;
  e.pmf.reserve(e.counts.size());
  for (std::size_t k = 0; k < e.counts.size(); ++k) {
    e.pmf.push_back(static_cast<double>(e.counts[k]) / static_cast<double>(total));
    weighted += static_cast<long double>(e.s_star + static_cast<FrameIndex>(k)) * e.counts[k];
  }
  e.expected = static_cast<double>(weighted / static_cast<long double>(total));
  e.expected = std::clamp(e.expected, static_cast<double>(e.s_star), static_cast<double>(e.e_star));
  return e;
}

double tde(double t_sle, double expected_t, double frame_rate_hz) {
  if (!(frame_rate_hz > 0.0)) throw DomainError("frame rate must be > 0");
  return std::abs(t_sle - expected_t) / frame_rate_hz;
}

std::optional<FrameIndex> detection_frame(const StyleReport& report, StyleKind style, double expected_t) {
  if (style == StyleKind::kWeaving) {
    if (report.critical_points.empty()) return std::nullopt;
    auto best = std::min_element(report.critical_points.begin(), report.critical_points.end(),
                                 [&](const CriticalPoint& a, const CriticalPoint& b) {
                                   return std::abs(a.t - expected_t) < std::abs(b.t - expected_t);
                                 });
    return best->frame();
  }
  return report.curve(style).t_sle;
}

std::vector<EvalRecord> evaluate_agent(const StyleReport& report, std::span<const Annotation> annotations,
                                       std::span<const StyleKind> requested, double frame_rate_hz) {
  std::vector<EvalRecord> out;
  for (auto style : requested) {
    EvalRecord rec;
    rec.style = style;
    rec.agent_id = report.agent_id;
    rec.frame_rate = frame_rate_hz;
    std::vector<Annotation> mine;
    for (const auto& a : annotations) {
      if (a.style == style) mine.push_back(a);
    }
    if (mine.empty()) {
      rec.skipped = true;
      rec.warning = "no annotations for " + std::string(style_kind_name(style));
      out.push_back(rec);
      continue;
    }
    rec.expected_t = aggregate_annotations(mine).expected;
    const auto t = detection_frame(report, style, rec.expected_t);
    if (!t) {
      rec.skipped = true;
      rec.warning = "no critical points detected";
      out.push_back(rec);
      continue;
    }
    rec.t_sle = *t;
    rec.tde_seconds = tde(static_cast<double>(*t), rec.expected_t, frame_rate_hz);
    out.push_back(rec);
  }
  return out;
}

std::vector<EvalRecord> evaluate_episode(const TrajectorySet& ts, const std::string& agent_id,
                                         std::span<const Annotation> annotations, std::span<const StyleKind> requested,
                                         const AnalysisConfig& config) {
  const auto report = style_report(ts, ts.index_of(agent_id), config);
  return evaluate_agent(report, annotations, requested, ts.frame_rate_hz());
}

std::map<StyleKind, double> mean_tde(std::span<const EvalRecord> records) {
  std::map<StyleKind, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.skipped) continue;
    auto& [sum, n] = acc[r.style];
    sum += r.tde_seconds;
    ++n;
  }
  std::map<StyleKind, double> out;
  for (const auto& [style, sn] : acc) out[style] = sn.first / static_cast<double>(sn.second);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

FrameIndex parse_frame(std::string_view s, std::size_t line) {
  FrameIndex v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "expected an integer frame, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::vector<Annotation> parse_annotation_csv(std::string_view text) {
  std::vector<Annotation> out;
  std::size_t line = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto raw = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line;
    if (raw.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = raw;
    for (auto comma = rest.find(','); comma != std::string_view::npos; comma = rest.find(',')) {
      f.push_back(trim(rest.substr(0, comma)));
      rest = rest.substr(comma + 1);
    }
    f.push_back(trim(rest));
    if (f.size() != 4) throw ParseError(line, "expected 4 fields, got " + std::to_string(f.size()));
    if (out.empty() && f[0] == "participant") continue;
    Annotation a;
    a.participant = std::string(f[0]);
    try {
      a.style = parse_style_kind(f[1]);
    } catch (const DomainError& e) {
      throw ParseError(line, e.what());
    }
    a.start = parse_frame(f[2], line);
    a.end = parse_frame(f[3], line);
    if (a.start > a.end) throw ParseError(line, "start_frame exceeds end_frame");
    out.push_back(std::move(a));
  }
  if (out.empty()) throw EmptyInputError("annotation file has no rows");
  return out;
}

std::string evaluation_to_json(std::span<const EvalRecord> records) {
  using nlohmann::json;
  json rows = json::array();
  for (const auto& r : records) {
    json row = {{"style", style_kind_name(r.style)}, {"agent_id", r.agent_id}, {"skipped", r.skipped}};
    if (r.skipped) {
      row["warning"] = r.warning;
    } else {
      row["t_sle"] = r.t_sle;
      row["expected_t"] = r.expected_t;
      row["frame_rate"] = r.frame_rate;
      row["tde_seconds"] = r.tde_seconds;
    }
    rows.push_back(row);
  }
  json means = json::object();
  for (const auto& [style, m] : mean_tde(records)) means[std::string(style_kind_name(style))] = m;
  return json{{"records", rows}, {"mean_tde_seconds", means}}.dump(2) + "\n";
}

}  // namespace stylegraph
