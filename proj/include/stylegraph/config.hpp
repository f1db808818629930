#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "stylegraph/graph.hpp"
#include "stylegraph/polyfit.hpp"

namespace stylegraph {

/// Every tunable of the analysis pipeline. Defaults are the documented ones.
struct AnalysisConfig {
  double mu = 10.0;
  std::size_t capacity = 1000;
  FrameIndex dwell = 10;

  int degree = 2;
  double delta = 2.0;
  TimeOrigin origin = TimeOrigin::kWindowCenter;
  /// Frames per sliding fit for the SLE/SIE curves; 0 fits the whole window once.
  std::size_t fit_window = 21;

  std::size_t weave_window = 11;
  std::size_t weave_stride = 2;
  double eps_ball = 2.0;
  double sharp_tol = 1e-6;

  /// Unset: 5% of the median per-agent sle_max of the episode.
  std::optional<double> conservative_tol;

  /// Uniform noise amplitude added to centrality series before fitting.
  double series_noise = 0.0;
  std::uint64_t seed = 0;

  /// Worker threads for per-agent work; 0 uses the hardware concurrency.
  unsigned jobs = 1;

  AdjacencyOptions adjacency() const { return {mu, capacity, dwell}; }
  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

enum class FeatureLayout { kCoefficients, kExtended };
enum class ModelKind { kPerceptron, kLogistic };

struct TrainConfig {
  ModelKind model = ModelKind::kPerceptron;
  std::size_t hidden = 32;
  double learning_rate = 1e-3;
  std::size_t epochs = 2000;
  std::uint64_t seed = 0;
};

struct RunConfig {
  AnalysisConfig analysis;
  TrainConfig train;
  FeatureLayout layout = FeatureLayout::kExtended;
  double frame_rate = 10.0;
  std::uint64_t seed = 0;
  std::string input;
  std::string output;

  void validate() const;
};

std::string feature_layout_name(FeatureLayout layout);
FeatureLayout parse_feature_layout(const std::string& name);
std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// JSON document form. Unknown keys and out-of-range values raise ConfigError;
/// missing keys keep their defaults.
std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);

}  // namespace stylegraph
