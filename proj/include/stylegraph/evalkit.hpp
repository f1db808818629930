#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylegraph/styles.hpp"

namespace stylegraph {

/// One annotator's closed interval [start, end] for an event.
struct Annotation {
  std::string participant;
  StyleKind style = StyleKind::kOverspeeding;
  FrameIndex start = 0;
  FrameIndex end = 0;
};

struct EventEstimate {
  FrameIndex s_star = 0;
  FrameIndex e_star = 0;
  std::vector<std::size_t> counts;  // c_t for t in [s_star, e_star]
  std::vector<double> pmf;          // counts normalized to sum 1
  double expected = 0.0;            // E[T] in frames
};

/// Per-frame annotator counts over [min start, max end], their PMF and mean.
EventEstimate aggregate_annotations(std::span<const Annotation> annotations);

/// |t_sle - expected| / f seconds.
double tde(double t_sle, double expected_t, double frame_rate_hz);

struct EvalRecord {
  StyleKind style = StyleKind::kOverspeeding;
  std::string agent_id;
  FrameIndex t_sle = 0;
  double expected_t = 0.0;
  double frame_rate = 1.0;
  double tde_seconds = 0.0;
  bool skipped = false;
  std::string warning;
};

/// Detection frame for a style against an annotation centered at `expected_t`:
/// the SLE argmax for curve styles, the nearest critical point for weaving.
/// Returns nullopt when weaving found no critical point.
std::optional<FrameIndex> detection_frame(const StyleReport& report, StyleKind style, double expected_t);

/// One record per annotated style of `agent`; styles in `requested` with no
/// annotation yield a skipped record carrying a warning.
std::vector<EvalRecord> evaluate_agent(const StyleReport& report, std::span<const Annotation> annotations,
                                       std::span<const StyleKind> requested, double frame_rate_hz);

std::vector<EvalRecord> evaluate_episode(const TrajectorySet& ts, const std::string& agent_id,
                                         std::span<const Annotation> annotations, std::span<const StyleKind> requested,
                                         const AnalysisConfig& config);

/// Mean TDE per style over the non-skipped records.
std::map<StyleKind, double> mean_tde(std::span<const EvalRecord> records);

/// `participant,style,start_frame,end_frame` with optional header.
std::vector<Annotation> parse_annotation_csv(std::string_view text);
std::string evaluation_to_json(std::span<const EvalRecord> records);

}  // namespace stylegraph
