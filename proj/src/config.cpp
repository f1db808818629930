#include "stylegraph/config.hpp"

#include <cmath>
#include <json.hpp>

#include "stylegraph/error.hpp"

namespace stylegraph {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ConfigError(field + " " + rule);
}

std::string origin_name(TimeOrigin o) { return o == TimeOrigin::kWindowStart ? "start" : "center"; }

TimeOrigin parse_origin(const std::string& s) {
  if (s == "start") return TimeOrigin::kWindowStart;
  if (s == "center") return TimeOrigin::kWindowCenter;
  throw ConfigError("time_origin must be 'start' or 'center', got '" + s + "'");
}

template <typename T>
void read(const json& doc, const char* key, T& field) {
  if (!doc.contains(key)) return;
  try {
    field = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

void reject_unknown(const json& doc, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

void AnalysisConfig::validate() const {
  require(mu > 0.0 && std::isfinite(mu), "mu", "must be a positive number");
  require(capacity >= 1, "capacity", "must be >= 1");
  require(dwell >= 0, "dwell", "must be >= 0");
  require(degree >= 0 && degree <= 8, "degree", "must be in [0, 8]");
  require(delta > 1.0 && std::isfinite(delta), "delta", "must be > 1");
  require(fit_window == 0 || fit_window >= static_cast<std::size_t>(degree + 1), "fit_window",
          "must be 0 or at least degree + 1");
  require(weave_window >= 3, "weave_window", "must be >= 3");
  require(weave_stride >= 1, "weave_stride", "must be >= 1");
  require(eps_ball > 0.0 && std::isfinite(eps_ball), "eps_ball", "must be > 0");
  require(sharp_tol >= 0.0 && std::isfinite(sharp_tol), "sharp_tol", "must be >= 0");
  require(!conservative_tol || (*conservative_tol >= 0.0 && std::isfinite(*conservative_tol)), "conservative_tol",
          "must be >= 0");
  require(series_noise >= 0.0 && std::isfinite(series_noise), "series_noise", "must be >= 0");
}

void RunConfig::validate() const {
  analysis.validate();
  require(frame_rate > 0.0 && std::isfinite(frame_rate), "frame_rate", "must be > 0");
  require(train.hidden >= 1, "train.hidden", "must be >= 1");
  require(train.learning_rate > 0.0 && std::isfinite(train.learning_rate), "train.learning_rate", "must be > 0");
}

std::string feature_layout_name(FeatureLayout layout) {
  return layout == FeatureLayout::kCoefficients ? "coefficients" : "extended";
}

FeatureLayout parse_feature_layout(const std::string& name) {
  if (name == "coefficients") return FeatureLayout::kCoefficients;
  if (name == "extended") return FeatureLayout::kExtended;
  throw ConfigError("feature_layout must be 'coefficients' or 'extended', got '" + name + "'");
}

std::string model_kind_name(ModelKind kind) { return kind == ModelKind::kPerceptron ? "perceptron" : "logistic"; }

ModelKind parse_model_kind(const std::string& name) {
  if (name == "perceptron") return ModelKind::kPerceptron;
  if (name == "logistic") return ModelKind::kLogistic;
  throw ConfigError("model must be 'perceptron' or 'logistic', got '" + name + "'");
}

std::string config_to_json(const RunConfig& c) {
  const auto& a = c.analysis;
  json analysis = {
      {"mu", a.mu},
      {"capacity", a.capacity},
      {"dwell", a.dwell},
      {"degree", a.degree},
      {"delta", a.delta},
      {"time_origin", origin_name(a.origin)},
      {"fit_window", a.fit_window},
      {"weave_window", a.weave_window},
      {"weave_stride", a.weave_stride},
      {"eps_ball", a.eps_ball},
      {"sharp_tol", a.sharp_tol},
      {"conservative_tol", a.conservative_tol ? json(*a.conservative_tol) : json(nullptr)},
      {"series_noise", a.series_noise},
      {"seed", a.seed},
      {"jobs", a.jobs},
  };
  json train = {
      {"model", model_kind_name(c.train.model)},
      {"hidden", c.train.hidden},
      {"learning_rate", c.train.learning_rate},
      {"epochs", c.train.epochs},
      {"seed", c.train.seed},
  };
  json doc = {
      {"version", 1},
      {"analysis", analysis},
      {"train", train},
      {"feature_layout", feature_layout_name(c.layout)},
      {"frame_rate", c.frame_rate},
      {"seed", c.seed},
      {"input", c.input},
      {"output", c.output},
  };
  return doc.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  reject_unknown(doc, {"version", "analysis", "train", "feature_layout", "frame_rate", "seed", "input", "output"},
                 "config");
  RunConfig c;
  int version = 1;
  read(doc, "version", version);
  if (version != 1) throw ConfigError("unsupported config version " + std::to_string(version));

  if (doc.contains("analysis")) {
    const auto& a = doc.at("analysis");
    if (!a.is_object()) throw ConfigError("analysis must be an object");
    reject_unknown(a,
                   {"mu", "capacity", "dwell", "degree", "delta", "time_origin", "fit_window", "weave_window",
                    "weave_stride", "eps_ball", "sharp_tol", "conservative_tol", "series_noise", "seed", "jobs"},
                   "analysis");
    auto& o = c.analysis;
    read(a, "mu", o.mu);
    read(a, "capacity", o.capacity);
    read(a, "dwell", o.dwell);
    read(a, "degree", o.degree);
    read(a, "delta", o.delta);
    if (a.contains("time_origin")) {
      std::string s;
      read(a, "time_origin", s);
      o.origin = parse_origin(s);
    }
    read(a, "fit_window", o.fit_window);
    read(a, "weave_window", o.weave_window);
    read(a, "weave_stride", o.weave_stride);
    read(a, "eps_ball", o.eps_ball);
    read(a, "sharp_tol", o.sharp_tol);
    if (a.contains("conservative_tol") && !a.at("conservative_tol").is_null()) {
      double tol = 0.0;
      read(a, "conservative_tol", tol);
      o.conservative_tol = tol;
    }
    read(a, "series_noise", o.series_noise);
    read(a, "seed", o.seed);
    read(a, "jobs", o.jobs);
  }
  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    if (!t.is_object()) throw ConfigError("train must be an object");
    reject_unknown(t, {"model", "hidden", "learning_rate", "epochs", "seed"}, "train");
    if (t.contains("model")) {
      std::string s;
      read(t, "model", s);
      c.train.model = parse_model_kind(s);
    }
    read(t, "hidden", c.train.hidden);
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "epochs", c.train.epochs);
    read(t, "seed", c.train.seed);
  }
  if (doc.contains("feature_layout")) {
    std::string s;
    read(doc, "feature_layout", s);
    c.layout = parse_feature_layout(s);
  }
  read(doc, "frame_rate", c.frame_rate);
  read(doc, "seed", c.seed);
  read(doc, "input", c.input);
  read(doc, "output", c.output);
  c.validate();
  return c;
}

}  // namespace stylegraph
