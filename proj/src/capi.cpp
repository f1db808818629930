#include "stylegraph/stylegraph.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "stylegraph/classify.hpp"
#include "stylegraph/config.hpp"
#include "stylegraph/error.hpp"
#include "stylegraph/evalkit.hpp"
#include "stylegraph/io.hpp"
#include "stylegraph/polyfit.hpp"
#include "stylegraph/styles.hpp"
#include "stylegraph/synthgen.hpp"

namespace sg = stylegraph;

struct sg_trajectories {
  sg::TrajectorySet ts;
};

struct sg_analysis {
  sg::TrajectorySet ts;
  sg::RunConfig config;
  std::unique_ptr<sg::EpisodeAnalysis> analysis;
  std::vector<sg::StyleReport> reports;
};

struct sg_episode {
  sg::Episode episode;
};

struct sg_model {
  sg::Model model;
};

namespace {

thread_local std::string last_error;

sg_status fail(sg_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename Fn>
sg_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return SG_OK;
  } catch (const sg::Error& e) {
    return fail(static_cast<sg_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SG_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

sg::RunConfig run_config(const char* json) {
  if (!json || !*json) return {};
  return sg::config_from_json(json);
}

const sg::StyleReport& report_of(const sg_analysis* a, const char* agent_id) {
  const auto index = a->ts.index_of(agent_id);
  for (const auto& r : a->reports) {
    if (r.agent == index) return r;
  }
  throw sg::LookupError(std::string("no report for agent '") + agent_id + "'");
}

std::vector<sg::StyleKind> parse_style_list(const char* csv) {
  std::vector<sg::StyleKind> out;
  if (!csv) return out;
  std::stringstream in(csv);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (!name.empty()) out.push_back(sg::parse_style_kind(name));
  }
  return out;
}

}  // namespace

#define SG_REQUIRE(ptr)                                                      \
  do {                                                                       \
    if (!(ptr)) return fail(SG_ERR_INVALID_ARGUMENT, #ptr " must not be null"); \
  } while (0)

extern "C" {

void sg_string_free(char* s) { std::free(s); }

const char* sg_version(void) { return "0.1.0"; }

const char* sg_status_name(sg_status status) {
  switch (status) {
    case SG_OK:
      return "ok";
    case SG_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case SG_ERR_INTERNAL:
      return "internal";
    default:
      if (status >= SG_ERR_PARSE && status <= SG_ERR_CONFIG) {
        return sg::error_code_name(static_cast<sg::ErrorCode>(status));
      }
      return "unknown";
  }
}

const char* sg_last_error(void) { return last_error.c_str(); }

sg_status sg_config_default(char** json_out) {
  SG_REQUIRE(json_out);
  return guarded([&] { *json_out = copy_string(sg::config_to_json(sg::RunConfig{})); });
}

sg_status sg_config_normalize(const char* json, char** json_out) {
  SG_REQUIRE(json_out);
  return guarded([&] {
    const auto c = run_config(json);
    c.validate();
    *json_out = copy_string(sg::config_to_json(c));
  });
}

sg_status sg_trajectories_parse_csv(const char* text, double frame_rate_hz, sg_trajectories** out) {
  SG_REQUIRE(text);
  SG_REQUIRE(out);
  return guarded([&] { *out = new sg_trajectories{sg::parse_trajectory_csv(text, frame_rate_hz)}; });
}

sg_status sg_trajectories_read_csv(const char* path, double frame_rate_hz, sg_trajectories** out) {
  SG_REQUIRE(path);
  SG_REQUIRE(out);
  return guarded([&] { *out = new sg_trajectories{sg::read_trajectory_csv(path, frame_rate_hz)}; });
}

sg_status sg_trajectories_to_csv(const sg_trajectories* ts, char** csv_out) {
  SG_REQUIRE(ts);
  SG_REQUIRE(csv_out);
  return guarded([&] { *csv_out = copy_string(sg::to_trajectory_csv(ts->ts)); });
}

sg_status sg_trajectories_agent_count(const sg_trajectories* ts, size_t* out) {
  SG_REQUIRE(ts);
  SG_REQUIRE(out);
  *out = ts->ts.agent_count();
  return SG_OK;
}

sg_status sg_trajectories_frame_count(const sg_trajectories* ts, size_t* out) {
  SG_REQUIRE(ts);
  SG_REQUIRE(out);
  *out = ts->ts.frame_count();
  return SG_OK;
}

void sg_trajectories_free(sg_trajectories* ts) { delete ts; }

sg_status sg_analysis_create(const sg_trajectories* ts, const char* config_json, sg_analysis** out) {
  SG_REQUIRE(ts);
  SG_REQUIRE(out);
  return guarded([&] {
    auto a = std::make_unique<sg_analysis>();
    a->ts = ts->ts;
    a->config = run_config(config_json);
    a->config.validate();
    a->analysis = std::make_unique<sg::EpisodeAnalysis>(a->ts, a->config.analysis);
    a->reports = a->analysis->reports();
    *out = a.release();
  });
}

void sg_analysis_free(sg_analysis* analysis) { delete analysis; }

sg_status sg_analysis_report_json(const sg_analysis* analysis, const char* agent_id, char** json_out) {
  SG_REQUIRE(analysis);
  SG_REQUIRE(json_out);
  return guarded([&] {
    *json_out = copy_string(agent_id ? sg::report_to_json(report_of(analysis, agent_id))
                                     : sg::reports_to_json(analysis->reports));
  });
}

sg_status sg_analysis_curve_csv(const sg_analysis* analysis, const char* agent_id, const char* style, char** csv_out) {
  SG_REQUIRE(analysis);
  SG_REQUIRE(agent_id);
  SG_REQUIRE(style);
  SG_REQUIRE(csv_out);
  return guarded([&] {
    std::ostringstream out;
    sg::write_curve_csv(out, report_of(analysis, agent_id).curve(sg::parse_style_kind(style)));
    *csv_out = copy_string(out.str());
  });
}

sg_status sg_analysis_features(const sg_analysis* analysis, const char* agent_id, const char* layout, double* values,
                               size_t capacity, size_t* length) {
  SG_REQUIRE(analysis);
  SG_REQUIRE(agent_id);
  SG_REQUIRE(length);
  if (capacity > 0 && !values) return fail(SG_ERR_INVALID_ARGUMENT, "values must not be null");
  return guarded([&] {
    const auto l = layout ? sg::parse_feature_layout(layout) : analysis->config.layout;
    const auto f = sg::extract_features(report_of(analysis, agent_id), l);
    *length = f.size();
    std::copy_n(f.begin(), std::min(capacity, f.size()), values);
  });
}

sg_status sg_analysis_classify_json(const sg_analysis* analysis, const sg_model* model, char** json_out) {
  SG_REQUIRE(analysis);
  SG_REQUIRE(model);
  SG_REQUIRE(json_out);
  return guarded([&] {
    auto doc = nlohmann::json::array();
    for (const auto& r : analysis->reports) {
      const auto p = sg::predict(model->model, sg::extract_features(r, model->model.layout));
      doc.push_back({{"agent_id", r.agent_id},
                     {"label", sg::behavior_label_name(p.label)},
                     {"scores", {{"aggressive", p.scores[0]}, {"conservative", p.scores[1]}}}});
    }
    *json_out = copy_string(doc.dump(2));
  });
}

sg_status sg_evaluate_json(const sg_trajectories* ts, const char* annotations_csv, const char* agent_id,
                           const char* styles_csv, const char* config_json, char** json_out) {
  SG_REQUIRE(ts);
  SG_REQUIRE(annotations_csv);
  SG_REQUIRE(agent_id);
  SG_REQUIRE(json_out);
  return guarded([&] {
    const auto config = run_config(config_json);
    config.validate();
    const auto annotations = sg::parse_annotation_csv(annotations_csv);
    auto requested = parse_style_list(styles_csv);
    if (requested.empty()) {
      for (const auto& a : annotations) {
        if (std::find(requested.begin(), requested.end(), a.style) == requested.end()) requested.push_back(a.style);
      }
    }
    const auto records = sg::evaluate_episode(ts->ts, agent_id, annotations, requested, config.analysis);
    *json_out = copy_string(sg::evaluation_to_json(records));
  });
}

sg_status sg_simulate_preset(const char* preset, uint64_t seed, int64_t horizon, sg_episode** out) {
  SG_REQUIRE(preset);
  SG_REQUIRE(out);
  return guarded([&] { *out = new sg_episode{sg::preset_episode(preset, seed, horizon)}; });
}

sg_status sg_simulate_params(const char* params_json, int64_t horizon, sg_episode** out) {
  SG_REQUIRE(params_json);
  SG_REQUIRE(out);
  return guarded([&] { *out = new sg_episode{sg::simulate(sg::params_from_json(params_json), horizon)}; });
}

sg_status sg_preset_params_json(const char* preset, char** json_out) {
  SG_REQUIRE(preset);
  SG_REQUIRE(json_out);
  return guarded([&] { *json_out = copy_string(sg::params_to_json(sg::preset_params(preset))); });
}

sg_status sg_episode_trajectories(const sg_episode* episode, sg_trajectories** out) {
  SG_REQUIRE(episode);
  SG_REQUIRE(out);
  return guarded([&] { *out = new sg_trajectories{episode->episode.trajectories}; });
}

sg_status sg_episode_truth_csv(const sg_episode* episode, char** csv_out) {
  SG_REQUIRE(episode);
  SG_REQUIRE(csv_out);
  return guarded([&] {
    std::ostringstream out;
    sg::write_truth_csv(out, episode->episode.truth);
    *csv_out = copy_string(out.str());
  });
}

void sg_episode_free(sg_episode* episode) { delete episode; }

sg_status sg_calibrate_json(const char* label, double sle_threshold, const char* start_params_json, size_t max_iters,
                            int64_t horizon, size_t seeds, const char* config_json, char** json_out) {
  SG_REQUIRE(label);
  SG_REQUIRE(json_out);
  *json_out = nullptr;
  return guarded([&] {
    const auto config = run_config(config_json);
    config.validate();
    const sg::CalibrationTarget target{sg::parse_behavior_label(label), sle_threshold};
    const auto start = start_params_json ? sg::params_from_json(start_params_json) : sg::preset_params(label);
    try {
      *json_out = copy_string(sg::calibration_to_json(sg::calibrate(target, start, max_iters, horizon, seeds,
                                                                    config.analysis)));
    } catch (const sg::CalibrationFailure& e) {
      *json_out = copy_string(sg::calibration_to_json(e.best()));
      throw;
    }
  });
}

sg_status sg_condition_study_json(int degree, size_t t_min, size_t t_max, double delta, const char* origin,
                                  char** json_out) {
  SG_REQUIRE(json_out);
  return guarded([&] {
    auto o = sg::TimeOrigin::kWindowStart;
    if (origin && std::string(origin) == "center") {
      o = sg::TimeOrigin::kWindowCenter;
    } else if (origin && std::string(origin) != "start") {
      throw sg::DomainError(std::string("origin must be 'start' or 'center', got '") + origin + "'");
    }
    auto doc = nlohmann::json::array();
    for (const auto& r : sg::condition_study(degree, t_min, t_max, delta, o)) {
      doc.push_back({{"T", r.samples}, {"kappa", r.kappa}, {"alpha", r.alpha}, {"kappa_alpha", r.kappa_alpha}});
    }
    *json_out = copy_string(doc.dump(2));
  });
}

sg_status sg_dataset_synthetic_csv(size_t n, uint64_t seed, int64_t horizon, const char* config_json,
                                   char** csv_out) {
  SG_REQUIRE(csv_out);
  return guarded([&] {
    const auto config = run_config(config_json);
    config.validate();
    const auto samples = sg::synthetic_dataset(n, seed, horizon, config.analysis, config.layout);
    *csv_out = copy_string(sg::samples_to_csv(samples));
  });
}

sg_status sg_dataset_split_csv(const char* samples_csv, double test_fraction, uint64_t seed, char** train_out,
                                char** test_out) {
  SG_REQUIRE(samples_csv);
  SG_REQUIRE(train_out);
  SG_REQUIRE(test_out);
  return guarded([&] {
    const auto split = sg::split_dataset(sg::parse_samples_csv(samples_csv), test_fraction, seed);
    auto train = copy_string(sg::samples_to_csv(split.train));
    try {
      *test_out = copy_string(sg::samples_to_csv(split.test));
    } catch (...) {
      std::free(train);
      throw;
    }
    *train_out = train;
  });
}

sg_status sg_model_train(const char* samples_csv, const char* config_json, sg_model** out) {
  SG_REQUIRE(samples_csv);
  SG_REQUIRE(out);
  return guarded([&] {
    const auto config = run_config(config_json);
    config.validate();
    const auto samples = sg::parse_samples_csv(samples_csv);
    *out = new sg_model{sg::train(samples, config.train, config.layout)};
  });
}

sg_status sg_model_from_json(const char* json, sg_model** out) {
  SG_REQUIRE(json);
  SG_REQUIRE(out);
  return guarded([&] { *out = new sg_model{sg::model_from_json(json)}; });
}

sg_status sg_model_to_json(const sg_model* model, char** json_out) {
  SG_REQUIRE(model);
  SG_REQUIRE(json_out);
  return guarded([&] { *json_out = copy_string(sg::model_to_json(model->model)); });
}

sg_status sg_model_input_dim(const sg_model* model, size_t* out) {
  SG_REQUIRE(model);
  SG_REQUIRE(out);
  *out = model->model.input_dim();
  return SG_OK;
}

sg_status sg_model_predict(const sg_model* model, const double* features, size_t length, int* label_out,
                           double* scores_out) {
  SG_REQUIRE(model);
  SG_REQUIRE(features);
  SG_REQUIRE(label_out);
  return guarded([&] {
    const auto p = sg::predict(model->model, std::span<const double>(features, length));
    *label_out = p.label == sg::BehaviorLabel::kAggressive ? 0 : 1;
    if (scores_out) {
      scores_out[0] = p.scores[0];
      scores_out[1] = p.scores[1];
    }
  });
}

sg_status sg_model_accuracy(const sg_model* model, const char* samples_csv, double* out) {
  SG_REQUIRE(model);
  SG_REQUIRE(samples_csv);
  SG_REQUIRE(out);
  return guarded([&] {
    const auto samples = sg::parse_samples_csv(samples_csv);
    std::vector<sg::BehaviorLabel> preds;
    std::vector<sg::BehaviorLabel> labels;
    for (const auto& s : samples) {
      preds.push_back(sg::predict(model->model, s.features).label);
      labels.push_back(s.label);
    }
    *out = sg::weighted_accuracy(preds, labels);
  });
}

void sg_model_free(sg_model* model) { delete model; }

}  // extern "C"
