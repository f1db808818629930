#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylegraph/centrality.hpp"
#include "stylegraph/config.hpp"
#include "stylegraph/polyfit.hpp"

namespace stylegraph {

enum class StyleKind { kOverspeeding, kOvertaking, kSuddenLaneChange, kWeaving, kConservative };

std::string_view style_kind_name(StyleKind kind) noexcept;
/// Accepts the names produced by style_kind_name; throws DomainError otherwise.
StyleKind parse_style_kind(std::string_view name);

/// Centrality a style is read from: degree for overspeeding, closeness for the rest.
/// Throws TypeError for kConservative, which has no estimator of its own.
CentralityKind style_centrality(StyleKind kind);

struct SleCurve {
  FrameIndex t_start = 0;
  std::vector<double> values;
  double max = 0.0;
  FrameIndex t_max = 0;  // earliest frame attaining max
};

/// |first derivative| of the polynomial at each frame of its window.
/// Throws TypeError if the polynomial's centrality does not drive `kind`.
SleCurve style_likelihood(const CentralityPolynomial& p, StyleKind kind);
/// |second derivative| at each frame of the window.
std::vector<double> style_intensity(const CentralityPolynomial& p, StyleKind kind);

/// SLE/SIE of one style over an agent's analysis window.
struct StyleCurve {
  StyleKind kind = StyleKind::kOverspeeding;
  FrameIndex t_start = 0;
  std::vector<double> sle;
  std::vector<double> sie;
  double sle_max = 0.0;
  FrameIndex t_sle = 0;
  double sie_max = 0.0;
};

/// Sliding-window version of style_likelihood/style_intensity: frame t reads
/// the derivative of a fit over the `fit_window` frames around it (clamped to
/// the series). A fit_window of 0, or one longer than the series, falls back
/// to one fit over the whole series.
StyleCurve style_curve(const CentralitySeries& series, StyleKind kind, const AnalysisConfig& config);

struct CriticalPoint {
  double t = 0.0;  // fractional frame where the window fit has zero slope
  double sharpness = 0.0;

  FrameIndex frame() const noexcept;
};

struct WeavingOptions {
  std::size_t window = 11;
  std::size_t stride = 2;
  double eps_ball = 2.0;
  double sharp_tol = 1e-6;
};

/// Quadratic fits over sliding windows; each fit's vertex that lies strictly
/// inside its window and whose sharpness exceeds sharp_tol is a critical
/// point. Sharpness is max |z(t) - z(t_c)| / eps over the frames within eps
/// of t_c. Points closer than eps to an admitted one are merged, keeping the
/// sharper. Result sorted by t.
std::vector<CriticalPoint> detect_weaving(const CentralitySeries& series, const WeavingOptions& options);

struct StyleReport {
  std::string agent_id;
  AgentIndex agent = 0;
  FrameIndex t_start = 0;
  FrameIndex t_end = -1;
  /// Overspeeding, overtaking, sudden lane change, in that order.
  std::vector<StyleCurve> curves;
  std::vector<CriticalPoint> critical_points;
  CentralityPolynomial degree_fit;
  CentralityPolynomial closeness_fit;
  double conservative_tol = 0.0;
  bool conservative = false;

  /// Throws TypeError for weaving/conservative.
  const StyleCurve& curve(StyleKind kind) const;
  double sle_max() const noexcept;
  /// Sharpest critical point, 0 when there are none.
  double weaving_sie_max() const noexcept;
};

/// True iff every style's sle_max is <= tol and no critical point was found.
bool classify_conservative(const StyleReport& report, double tol);

/// Graphs, centralities and adjacency replay for one episode, shared by all
/// per-agent reports.
class EpisodeAnalysis {
 public:
  EpisodeAnalysis(const TrajectorySet& ts, const AnalysisConfig& config);

  const TrajectorySet& trajectories() const noexcept { return ts_; }
  const AnalysisConfig& config() const noexcept { return config_; }

  /// Longest run of frames in which the agent is observed.
  std::pair<FrameIndex, FrameIndex> window(AgentIndex agent) const;
  CentralitySeries degree_series(AgentIndex agent) const;
  CentralitySeries closeness_series(AgentIndex agent) const;
  std::size_t epoch_count() const noexcept { return epochs_; }

  /// Report with the conservative flag evaluated at `tol`.
  StyleReport report(AgentIndex agent, double tol) const;
  /// Reports for every agent; an unset conservative_tol resolves to 5% of
  /// the median sle_max across them.
  std::vector<StyleReport> reports() const;

 private:
  const GraphSnapshot& snapshot(FrameIndex t) const;

  const TrajectorySet& ts_;
  AnalysisConfig config_;
  std::vector<GraphSnapshot> snapshots_;
  std::vector<std::vector<int>> degrees_;  // [frame][agent], -1 when unmapped
  std::size_t epochs_ = 0;
};

std::vector<StyleReport> analyze_episode(const TrajectorySet& ts, const AnalysisConfig& config);
StyleReport style_report(const TrajectorySet& ts, AgentIndex agent, const AnalysisConfig& config);

std::string report_to_json(const StyleReport& report);
std::string reports_to_json(std::span<const StyleReport> reports);
/// Columns t,sle,sie,marker; the marker column reads "t_sle" on the peak row.
void write_curve_csv(std::ostream& out, const StyleCurve& curve);

}  // namespace stylegraph
