#include "stylegraph/classify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "parallel.hpp"
#include "stylegraph/error.hpp"
#include "stylegraph/io.hpp"

namespace stylegraph {

namespace {

using Json = nlohmann::json;

constexpr int kModelVersion = 1;

std::size_t class_index(BehaviorLabel label) { return label == BehaviorLabel::kAggressive ? 0 : 1; }

void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

struct Batch {
  Eigen::MatrixXd x;  // in x N, standardized
  Eigen::MatrixXd y;  // 2 x N one-hot
};

Batch make_batch(const Model& model, std::span<const Sample> samples) {
  const auto in = static_cast<Eigen::Index>(model.input_dim());
  Batch b{Eigen::MatrixXd(in, static_cast<Eigen::Index>(samples.size())),
          Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(samples.size()))};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.size() != model.input_dim()) {
      throw TypeError("sample has " + std::to_string(samples[i].features.size()) + " features, model expects " +
                      std::to_string(model.input_dim()));
    }
    const auto z = model.standardizer.apply(samples[i].features);
    const auto c = static_cast<Eigen::Index>(i);
    b.x.col(c) = Eigen::Map<const Eigen::VectorXd>(z.data(), in);
    b.y(static_cast<Eigen::Index>(class_index(samples[i].label)), c) = 1.0;
  }
  return b;
}

// Pre-activations and activations of every layer; acts[0] is the input.
struct Pass {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> acts;
};

Pass run_forward(const Model& model, const Eigen::MatrixXd& x) {
  Pass p;
  p.acts.push_back(x);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    Eigen::MatrixXd z = layer.weights * p.acts.back();
    z.colwise() += layer.bias;
    p.pre.push_back(z);
    if (l + 1 == model.layers.size()) {
      softmax_columns(z);
    } else {
      z = z.cwiseMax(0.0);
    }
    p.acts.push_back(std::move(z));
  }
  return p;
}

double batch_loss(const Model& model, const Eigen::MatrixXd& probs, const Eigen::MatrixXd& y) {
  const auto n = static_cast<double>(y.cols());
  if (model.kind == ModelKind::kLogistic) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      Eigen::Index k = 0;
      y.col(c).maxCoeff(&k);
      s -= std::log(std::max(probs(k, c), 1e-300));
    }
    return s / n;
  }
  return (y - probs).squaredNorm() / n;
}

std::vector<double> batch_gradient(const Model& model, const Batch& b, double scale) {
  const auto pass = run_forward(model, b.x);
  const auto& probs = pass.acts.back();
  const double n = static_cast<double>(b.x.cols());
  Eigen::MatrixXd dz;
  if (model.kind == ModelKind::kLogistic) {
    dz = (probs - b.y) * (scale / n);
  } else {
    const Eigen::MatrixXd g = (probs - b.y) * (2.0 * scale / n);
    // Softmax Jacobian: dz = p * (g - <p, g>).
    const Eigen::RowVectorXd dot = (probs.array() * g.array()).colwise().sum();
    dz = (probs.array() * (g.rowwise() - dot).array()).matrix();
  }
  std::vector<Eigen::MatrixXd> dw(model.layers.size());
  std::vector<Eigen::VectorXd> db(model.layers.size());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    dw[l] = dz * pass.acts[l].transpose();
    db[l] = dz.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd da = model.layers[l].weights.transpose() * dz;
      dz = (da.array() * (pass.pre[l - 1].array() > 0.0).cast<double>()).matrix();
    }
  }
  std::vector<double> out;
  out.reserve(model.parameter_count());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    for (Eigen::Index r = 0; r < dw[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < dw[l].cols(); ++c) out.push_back(dw[l](r, c));
    }
    for (Eigen::Index r = 0; r < db[l].size(); ++r) out.push_back(db[l](r));
  }
  return out;
}

Json layer_json(const DenseLayer& layer) {
  std::vector<double> w;
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
  }
  return {{"rows", layer.weights.rows()},
          {"cols", layer.weights.cols()},
          {"weights", w},
          {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}};
}

}  // namespace

std::string_view behavior_label_name(BehaviorLabel label) noexcept {
  return label == BehaviorLabel::kAggressive ? "aggressive" : "conservative";
}

BehaviorLabel parse_behavior_label(std::string_view name) {
  if (name == "aggressive") return BehaviorLabel::kAggressive;
  if (name == "conservative") return BehaviorLabel::kConservative;
  throw DomainError("unknown behavior label '" + std::string(name) + "'");
}

std::size_t feature_length(FeatureLayout layout, int degree) {
  if (degree < 0) throw DomainError("degree must be >= 0");
  const auto coeffs = 2 * static_cast<std::size_t>(degree + 1);
  return layout == FeatureLayout::kExtended ? coeffs + 5 : coeffs;
}

std::vector<double> extract_features(const StyleReport& report, FeatureLayout layout) {
  const auto& c = report.closeness_fit;
  const auto& d = report.degree_fit;
  if (c.beta.empty() || d.beta.empty()) {
    throw IncompleteInputError("agent '" + report.agent_id + "' is missing a centrality fit");
  }
  if (c.beta.size() != d.beta.size()) throw IncompleteInputError("closeness and degree fits differ in degree");
  std::vector<double> f(c.beta.begin(), c.beta.end());
  f.insert(f.end(), d.beta.begin(), d.beta.end());
  if (layout == FeatureLayout::kExtended) {
    for (auto kind : {StyleKind::kOverspeeding, StyleKind::kOvertaking, StyleKind::kSuddenLaneChange}) {
      f.push_back(report.curve(kind).sle_max);
    }
    f.push_back(report.weaving_sie_max());
    f.push_back(static_cast<double>(report.critical_points.size()));
  }
  for (double v : f) {
    if (!std::isfinite(v)) throw IncompleteInputError("agent '" + report.agent_id + "' has a non-finite feature");
  }
  return f;
}

Standardizer Standardizer::fit(std::span<const Sample> samples) {
  if (samples.empty()) throw EmptyInputError("no samples to standardize");
  const std::size_t k = samples.front().features.size();
  Standardizer s{std::vector<double>(k, 0.0), std::vector<double>(k, 1.0)};
  for (const auto& x : samples) {
    if (x.features.size() != k) throw TypeError("samples differ in feature length");
    for (std::size_t j = 0; j < k; ++j) s.mean[j] += x.features[j];
  }
  const auto n = static_cast<double>(samples.size());
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(k, 0.0);
  for (const auto& x : samples) {
    for (std::size_t j = 0; j < k; ++j) var[j] += (x.features[j] - s.mean[j]) * (x.features[j] - s.mean[j]);
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> features) const {
  if (features.size() != mean.size()) {
    throw TypeError("expected " + std::to_string(mean.size()) + " features, got " + std::to_string(features.size()));
  }
  std::vector<double> z(features.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = (features[j] - mean[j]) / scale[j];
  return z;
}

std::size_t Model::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Model init_model(std::size_t input_dim, const TrainConfig& config, FeatureLayout layout) {
  if (input_dim == 0) throw DomainError("model needs at least one input feature");
  if (config.model == ModelKind::kPerceptron && config.hidden == 0) throw DomainError("hidden width must be >= 1");
  Model m;
  m.kind = config.model;
  m.layout = layout;
  m.config = config;
  m.standardizer = {std::vector<double>(input_dim, 0.0), std::vector<double>(input_dim, 1.0)};
  std::vector<std::size_t> widths = {input_dim};
  if (config.model == ModelKind::kPerceptron) widths.insert(widths.end(), {config.hidden, config.hidden});
  widths.push_back(2);
  std::mt19937_64 rng(config.seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(widths[l])));
    DenseLayer layer{Eigen::MatrixXd(widths[l + 1], widths[l]), Eigen::VectorXd::Zero(widths[l + 1])};
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = normal(rng);
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

Model train(std::span<const Sample> samples, const TrainConfig& config, FeatureLayout layout) {
  std::array<std::size_t, 2> counts{};
  for (const auto& s : samples) ++counts[class_index(s.label)];
  if (counts[0] < 2 || counts[1] < 2) {
    throw DegenerateDatasetError("training needs >= 2 samples of each class (got " + std::to_string(counts[0]) +
                                 " aggressive, " + std::to_string(counts[1]) + " conservative)");
  }
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw DomainError("learning rate must be positive");
  }
  Model m = init_model(samples.front().features.size(), config, layout);
  m.standardizer = Standardizer::fit(samples);
  const Batch b = make_batch(m, samples);
  auto params = flatten_parameters(m);
  m.loss_trace.reserve(config.epochs + 1);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    m.loss_trace.push_back(batch_loss(m, run_forward(m, b.x).acts.back(), b.y));
    const auto g = batch_gradient(m, b, 1.0);
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= config.learning_rate * g[k];
    assign_parameters(m, params);
  }
  m.loss_trace.push_back(batch_loss(m, run_forward(m, b.x).acts.back(), b.y));
  return m;
}

std::array<double, 2> forward(const Model& model, std::span<const double> standardized) {
  if (standardized.size() != model.input_dim()) {
    throw TypeError("expected " + std::to_string(model.input_dim()) + " features, got " +
                    std::to_string(standardized.size()));
  }
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::VectorXd>(standardized.data(), static_cast<Eigen::Index>(standardized.size()));
  const auto p = run_forward(model, x).acts.back();
  return {p(0, 0), p(1, 0)};
}

Prediction predict(const Model& model, std::span<const double> features) {
  Prediction p;
  p.scores = forward(model, model.standardizer.apply(features));
  p.label = p.scores[0] > p.scores[1] ? BehaviorLabel::kAggressive : BehaviorLabel::kConservative;
  return p;
}

std::vector<Prediction> predict_all(const Model& model, std::span<const Sample> samples, unsigned jobs) {
  std::vector<Prediction> out(samples.size());
  detail::parallel_for(samples.size(), jobs, [&](std::size_t i) { out[i] = predict(model, samples[i].features); });
  return out;
}

double loss(const Model& model, std::span<const Sample> samples) {
  if (samples.empty()) throw EmptyInputError("no samples");
  const Batch b = make_batch(model, samples);
  return batch_loss(model, run_forward(model, b.x).acts.back(), b.y);
}

std::vector<double> gradient(const Model& model, std::span<const Sample> samples, double scale) {
  if (samples.empty()) throw EmptyInputError("no samples");
  return batch_gradient(model, make_batch(model, samples), scale);
}

std::vector<double> flatten_parameters(const Model& model) {
  std::vector<double> out;
  out.reserve(model.parameter_count());
  for (const auto& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.push_back(l.weights(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

void assign_parameters(Model& model, std::span<const double> values) {
  if (values.size() != model.parameter_count()) throw TypeError("parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = values[k++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = values[k++];
  }
}

double gradient_check(const Model& model, const Sample& sample, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be > 0");
  const std::span<const Sample> one(&sample, 1);
  const auto analytic = gradient(model, one);
  auto params = flatten_parameters(model);
  Model probe = model;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params[k];
    params[k] = keep + h;
    assign_parameters(probe, params);
    const double up = loss(probe, one);
    params[k] = keep - h;
    assign_parameters(probe, params);
    const double down = loss(probe, one);
    params[k] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

double weighted_accuracy(std::span<const BehaviorLabel> predictions, std::span<const BehaviorLabel> labels) {
  if (predictions.size() != labels.size()) throw DomainError("predictions and labels differ in length");
  if (labels.empty()) throw DomainError("no labels");
  std::array<double, 2> total{};
  std::array<double, 2> hit{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = class_index(labels[i]);
    total[c] += 1.0;
    if (predictions[i] == labels[i]) hit[c] += 1.0;
  }
  const auto n = static_cast<double>(labels.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    if (total[c] > 0.0) acc += (total[c] / n) * (hit[c] / total[c]);
  }
  return acc;
}

Split split_dataset(std::span<const Sample> samples, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw DomainError("test fraction must be in [0, 1)");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(samples.size())));
  Split s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i + n_test < order.size() ? s.train : s.test).push_back(samples[order[i]]);
  }
  return s;
}

std::string samples_to_csv(std::span<const Sample> samples) {
  std::ostringstream out;
  out << "label";
  const std::size_t k = samples.empty() ? 0 : samples.front().features.size();
  for (std::size_t j = 0; j < k; ++j) out << ",f" << j;
  out << '\n';
  for (const auto& s : samples) {
    out << behavior_label_name(s.label);
    for (double v : s.features) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

std::vector<Sample> parse_samples_csv(std::string_view text) {
  std::vector<Sample> out;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::vector<std::string_view> fields;
    for (std::size_t a = 0;;) {
      const auto b = line.find(',', a);
      fields.push_back(line.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a));
      if (b == std::string_view::npos) break;
      a = b + 1;
    }
    if (out.empty() && width == 0 && fields.front() == "label") {
      width = fields.size();
      continue;
    }
    if (fields.size() < 2) throw ParseError(line_no, "expected a label and at least one feature");
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw ParseError(line_no, "expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    }
    Sample s;
    try {
      s.label = parse_behavior_label(fields.front());
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v = 0.0;
      const auto f = fields[j];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ParseError(line_no, "feature " + std::to_string(j - 1) + " is not a finite number");
      }
      s.features.push_back(v);
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw EmptyInputError("no samples");
  return out;
}

std::string model_to_json(const Model& model) {
  Json layers = Json::array();
  for (const auto& l : model.layers) layers.push_back(layer_json(l));
  Json doc = {{"version", kModelVersion},
              {"kind", model_kind_name(model.kind)},
              {"layout", feature_layout_name(model.layout)},
              {"train",
               {{"hidden", model.config.hidden},
                {"learning_rate", model.config.learning_rate},
                {"epochs", model.config.epochs},
                {"seed", model.config.seed}}},
              {"standardizer", {{"mean", model.standardizer.mean}, {"scale", model.standardizer.scale}}},
              {"layers", layers}};
  if (!model.loss_trace.empty()) doc["final_loss"] = model.loss_trace.back();
  return doc.dump(2);
}

Model model_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(0, std::string("model: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kModelVersion) {
      throw ParseError(0, "unsupported model version " + doc.at("version").dump());
    }
    Model m;
    m.kind = parse_model_kind(doc.at("kind").get<std::string>());
    m.layout = parse_feature_layout(doc.at("layout").get<std::string>());
    const auto& t = doc.at("train");
    m.config.model = m.kind;
    m.config.hidden = t.at("hidden").get<std::size_t>();
    m.config.learning_rate = t.at("learning_rate").get<double>();
    m.config.epochs = t.at("epochs").get<std::size_t>();
    m.config.seed = t.at("seed").get<std::uint64_t>();
    m.standardizer.mean = doc.at("standardizer").at("mean").get<std::vector<double>>();
    m.standardizer.scale = doc.at("standardizer").at("scale").get<std::vector<double>>();
    std::size_t in = m.standardizer.mean.size();
    if (m.standardizer.scale.size() != in) throw ParseError(0, "standardizer mean and scale differ in length");
    for (const auto& lj : doc.at("layers")) {
      const auto rows = lj.at("rows").get<Eigen::Index>();
      const auto cols = lj.at("cols").get<Eigen::Index>();
      const auto w = lj.at("weights").get<std::vector<double>>();
      const auto b = lj.at("bias").get<std::vector<double>>();
      if (static_cast<std::size_t>(cols) != in || w.size() != static_cast<std::size_t>(rows * cols) ||
          b.size() != static_cast<std::size_t>(rows)) {
        throw ParseError(0, "layer " + std::to_string(m.layers.size()) + " has inconsistent shape");
      }
      DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::Map<const Eigen::VectorXd>(b.data(), rows)};
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
      m.layers.push_back(std::move(layer));
      in = static_cast<std::size_t>(rows);
    }
    const std::size_t expected = m.kind == ModelKind::kPerceptron ? 3 : 1;
    if (m.layers.size() != expected || in != 2) throw ParseError(0, "layer stack does not match the model kind");
    for (double v : flatten_parameters(m)) {
      if (!std::isfinite(v)) throw ParseError(0, "non-finite model parameter");
    }
    if (doc.contains("final_loss")) m.loss_trace.push_back(doc.at("final_loss").get<double>());
    return m;
  } catch (const Json::exception& e) {
    throw ParseError(0, std::string("model: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(0, std::string("model: ") + e.what());
  }
}

}  // namespace stylegraph
