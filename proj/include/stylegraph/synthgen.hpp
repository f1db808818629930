#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stylegraph/classify.hpp"
#include "stylegraph/error.hpp"
#include "stylegraph/styles.hpp"

namespace stylegraph {

/// A maneuver forced on the subject vehicle. Lane changes (overtaking,
/// sudden lane change) are centered on `peak` and last `duration` frames.
/// Overspeeding raises the subject's speed by `magnitude` m/s along a raised
/// cosine over the same span. Weaving oscillates laterally with amplitude
/// `magnitude` (meters) over the span, at the params' weave period.
struct ScriptedManeuver {
  StyleKind style = StyleKind::kOvertaking;
  FrameIndex peak = 0;
  FrameIndex duration = 30;
  double magnitude = 0.0;
  int lane_delta = 1;
};

/// The subject is agent "ego"; every other vehicle is background traffic.
struct GeneratorParams {
  std::size_t lanes = 4;
  std::size_t n_vehicles = 10;
  /// Subject cruise speed (m/s).
  double desired_speed = 10.0;
  /// Desired speeds of all vehicles are perturbed by U(-spread, spread).
  double speed_spread = 0.0;
  double headway_time = 1.0;
  /// Subject lane-change attempts per 100 frames, gated by gap acceptance.
  double lane_change_rate = 0.0;
  /// Same, per background vehicle.
  double background_lane_change_rate = 0.0;
  /// Lane-change lateral jerk relative to a 4 s change; duration scales by its cube root.
  double lateral_jerk_scale = 1.0;
  /// Subject lateral oscillation amplitude (m) over the whole episode; 0 disables.
  double weave_amplitude = 0.0;
  std::uint64_t seed = 0;

  double traffic_speed = 10.0;
  double frame_rate = 10.0;
  double lane_width = 3.5;
  /// Center-to-center spacing of background vehicles within a lane (m).
  double initial_gap = 20.0;
  FrameIndex weave_period = 40;
  std::size_t subject_lane = 0;
  /// Subject start position relative to row 0 of the first open lane (m).
  /// Background rows are filled outward from row 0: 0, +1, -1, +2, ...
  double subject_offset = 0.0;
  /// Keep background vehicles out of the subject's starting lane, at placement
  /// and in their own lane changes.
  bool clear_subject_lane = false;
  std::vector<ScriptedManeuver> script;
};

struct TruthManeuver {
  std::string agent_id;
  StyleKind style = StyleKind::kOvertaking;
  FrameIndex start = 0;
  FrameIndex peak = 0;
  FrameIndex end = 0;
};

struct EpisodeTruth {
  std::vector<std::pair<std::string, BehaviorLabel>> labels;  // agent order
  std::vector<TruthManeuver> maneuvers;
  /// Vehicle pairs whose footprints overlapped at some frame.
  std::size_t collisions = 0;

  BehaviorLabel label_of(const std::string& agent_id) const;
  std::vector<TruthManeuver> maneuvers_of(const std::string& agent_id, StyleKind style) const;
};

struct Episode {
  TrajectorySet trajectories;
  EpisodeTruth truth;
};

inline constexpr const char* kSubjectId = "ego";

/// Point-mass highway traffic: IDM longitudinal control, quintic lane-change
/// splines, MOBIL-style gap acceptance. Deterministic in (params, horizon).
Episode simulate(const GeneratorParams& params, FrameIndex horizon);

/// JSON object with one key per field; `script` is a list of maneuvers.
/// Missing keys keep their defaults, unknown keys raise ConfigError.
std::string params_to_json(const GeneratorParams& params);
GeneratorParams params_from_json(const std::string& text);

/// Parameter presets: "conservative" and "aggressive".
GeneratorParams preset_params(const std::string& name);

struct SceneOptions {
  std::size_t n_vehicles = 0;  // 0 keeps the scene's own count
  std::size_t lanes = 0;       // 0 keeps the scene's own count
  double speed_spread = -1.0;  // negative keeps the scene's own spread
  double background_lane_change_rate = 0.0;
  FrameIndex horizon = 300;
};

/// Single-maneuver episode for one style with the peak at a seed-dependent
/// frame near the middle of the horizon.
Episode scripted_episode(StyleKind style, std::uint64_t seed, const SceneOptions& options = {});

/// Subject detections of a scripted scene scored against its truth peaks.
/// Weaving averages over the scripted extrema, each matched to the nearest
/// critical point; a scene with no detection scores the whole window.
struct SceneScore {
  double tde_seconds = 0.0;
  std::size_t truth_points = 0;
  std::size_t detected_points = 0;
  bool missed = false;
};

SceneScore score_scene(StyleKind style, std::uint64_t seed, const SceneOptions& options,
                       const AnalysisConfig& config);

/// Names accepted by simulate --preset: the two parameter presets and one
/// scripted scene per style.
std::vector<std::string> preset_names();
Episode preset_episode(const std::string& name, std::uint64_t seed, FrameIndex horizon);

/// `n` subject samples alternating aggressive and conservative parameters,
/// episode i seeded first_seed + i; labels come from the generator truth.
std::vector<Sample> labeled_dataset(const GeneratorParams& aggressive, const GeneratorParams& conservative,
                                    std::size_t n, FrameIndex horizon, std::uint64_t first_seed,
                                    const AnalysisConfig& config, FeatureLayout layout);

/// sle_max bands for synthetic_dataset, in default-config units.
struct DatasetBands {
  double aggressive = 1.5e-3;
  double conservative = 1e-3;
};

/// Calibrates both presets to their bands (conservative also needs zero
/// weaving points), then draws `n` labeled samples.
std::vector<Sample> synthetic_dataset(std::size_t n, std::uint64_t seed, FrameIndex horizon,
                                      const AnalysisConfig& config, FeatureLayout layout,
                                      const DatasetBands& bands = {});

/// `agent_id,label` then a blank line then `agent_id,style,start,peak,end`.
void write_truth_csv(std::ostream& out, const EpisodeTruth& truth);

/// Target band for the subject's measured estimates. Aggressive: sle_max >=
/// sle_threshold. Conservative: sle_max <= sle_threshold and no weaving points.
struct CalibrationTarget {
  BehaviorLabel label = BehaviorLabel::kConservative;
  double sle_threshold = 0.0;
};

struct Measurement {
  double sle_max = 0.0;
  double sie_max = 0.0;
  double weaving_points = 0.0;
};

struct CalibrationResult {
  GeneratorParams params;
  Measurement achieved;
  std::size_t iterations = 0;
  bool converged = false;
};

class CalibrationFailure : public Error {
 public:
  CalibrationFailure(const std::string& message, CalibrationResult best)
      : Error(ErrorCode::kCalibration, message), best_(std::move(best)) {}
  const CalibrationResult& best() const noexcept { return best_; }

 private:
  CalibrationResult best_;
};

/// Mean subject estimates over `seeds` episodes starting at params.seed.
Measurement measure(const GeneratorParams& params, FrameIndex horizon, std::size_t seeds,
                    const AnalysisConfig& config);

std::string calibration_to_json(const CalibrationResult& result);

/// Simulate, measure, adjust one parameter by a multiplicative step, repeat.
/// Throws CalibrationFailure with the best parameters seen when the band is
/// not reached within max_iters.
CalibrationResult calibrate(const CalibrationTarget& target, const GeneratorParams& start, std::size_t max_iters,
                            FrameIndex horizon, std::size_t seeds, const AnalysisConfig& config);

}  // namespace stylegraph
