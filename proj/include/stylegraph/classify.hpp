#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stylegraph/config.hpp"
#include "stylegraph/styles.hpp"

namespace stylegraph {

enum class BehaviorLabel { kAggressive, kConservative };

std::string_view behavior_label_name(BehaviorLabel label) noexcept;
BehaviorLabel parse_behavior_label(std::string_view name);

/// Coefficients: closeness beta then degree beta (2(d+1) values). Extended
/// appends sle_max for overspeeding, overtaking and sudden lane change, the
/// sharpest critical point and the critical point count.
std::size_t feature_length(FeatureLayout layout, int degree);

/// Throws IncompleteInputError when either fit is missing.
std::vector<double> extract_features(const StyleReport& report, FeatureLayout layout);

struct Sample {
  std::vector<double> features;
  BehaviorLabel label = BehaviorLabel::kConservative;
};

/// Per-feature mean and standard deviation; constant features get scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(std::span<const Sample> samples);
  std::vector<double> apply(std::span<const double> features) const;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

/// Perceptron: two ReLU hidden layers and a softmax output trained on the
/// mean squared error against one-hot targets. Logistic: softmax output only,
/// trained on cross-entropy. Output 0 is aggressive, output 1 conservative.
struct Model {
  ModelKind kind = ModelKind::kPerceptron;
  FeatureLayout layout = FeatureLayout::kExtended;
  TrainConfig config;
  Standardizer standardizer;
  std::vector<DenseLayer> layers;
  /// Loss before each epoch and after the last one.
  std::vector<double> loss_trace;

  std::size_t input_dim() const;
  std::size_t parameter_count() const;
};

/// Seeded initialization: He-normal weights, zero biases, identity standardizer.
Model init_model(std::size_t input_dim, const TrainConfig& config, FeatureLayout layout = FeatureLayout::kExtended);

/// Fits the standardizer on `samples`, then runs full-batch gradient descent.
/// Throws DegenerateDatasetError unless each class has >= 2 samples.
Model train(std::span<const Sample> samples, const TrainConfig& config,
            FeatureLayout layout = FeatureLayout::kExtended);

struct Prediction {
  BehaviorLabel label = BehaviorLabel::kConservative;
  std::array<double, 2> scores{};
};

/// Exact ties go to conservative. Throws TypeError on a length mismatch.
Prediction predict(const Model& model, std::span<const double> features);
std::vector<Prediction> predict_all(const Model& model, std::span<const Sample> samples, unsigned jobs = 1);

/// Softmax output for an already standardized input.
std::array<double, 2> forward(const Model& model, std::span<const double> standardized);

/// Mean loss over the samples (raw features, standardized by the model).
double loss(const Model& model, std::span<const Sample> samples);

/// Gradient of `scale` times the loss, flattened layer by layer (weights
/// row-major, then bias).
std::vector<double> gradient(const Model& model, std::span<const Sample> samples, double scale = 1.0);

std::vector<double> flatten_parameters(const Model& model);
void assign_parameters(Model& model, std::span<const double> values);

/// Largest |analytic - central difference| / max(|analytic|, |numeric|, 1e-6)
/// over all parameters. Throws DomainError unless h > 0.
double gradient_check(const Model& model, const Sample& sample, double h);

/// Sum over true classes of frequency times recall.
double weighted_accuracy(std::span<const BehaviorLabel> predictions, std::span<const BehaviorLabel> labels);

/// Deterministic split: a seeded shuffle, then the last `test_fraction` held out.
struct Split {
  std::vector<Sample> train;
  std::vector<Sample> test;
};
Split split_dataset(std::span<const Sample> samples, double test_fraction, std::uint64_t seed);

/// `label,f0,f1,...` rows with a header. Parsing accepts a missing header and
/// requires every row to have the same width.
std::string samples_to_csv(std::span<const Sample> samples);
std::vector<Sample> parse_samples_csv(std::string_view text);

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

}  // namespace stylegraph
