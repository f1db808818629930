#ifndef STYLEGRAPH_H
#define STYLEGRAPH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SG_API __declspec(dllexport)
#else
#define SG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Non-zero values mirror stylegraph::ErrorCode. */
typedef enum sg_status {
  SG_OK = 0,
  SG_ERR_PARSE = 1,
  SG_ERR_ORDERING = 2,
  SG_ERR_EMPTY_INPUT = 3,
  SG_ERR_DOMAIN = 4,
  SG_ERR_LOOKUP = 5,
  SG_ERR_CAPACITY = 6,
  SG_ERR_RANGE = 7,
  SG_ERR_SINGULAR = 8,
  SG_ERR_TYPE = 9,
  SG_ERR_INCOMPLETE_INPUT = 10,
  SG_ERR_DEGENERATE_DATASET = 11,
  SG_ERR_CALIBRATION = 12,
  SG_ERR_PLACEMENT = 13,
  SG_ERR_IO = 14,
  SG_ERR_CONFIG = 15,
  SG_ERR_INVALID_ARGUMENT = 64, /* null handle or pointer */
  SG_ERR_INTERNAL = 99
} sg_status;

typedef struct sg_trajectories sg_trajectories;
typedef struct sg_analysis sg_analysis;
typedef struct sg_episode sg_episode;
typedef struct sg_model sg_model;

/* Strings returned through char** are heap copies owned by the caller. */
SG_API void sg_string_free(char* s);
SG_API const char* sg_version(void);
SG_API const char* sg_status_name(sg_status status);
/* Message of the last failed call on this thread, "" if none. */
SG_API const char* sg_last_error(void);

/* Run configuration as JSON (see README). NULL or "" means defaults. */
SG_API sg_status sg_config_default(char** json_out);
SG_API sg_status sg_config_normalize(const char* json, char** json_out);

/* Trajectories: `t,agent_id,agent_type,x,y` CSV. */
SG_API sg_status sg_trajectories_parse_csv(const char* text, double frame_rate_hz, sg_trajectories** out);
SG_API sg_status sg_trajectories_read_csv(const char* path, double frame_rate_hz, sg_trajectories** out);
SG_API sg_status sg_trajectories_to_csv(const sg_trajectories* ts, char** csv_out);
SG_API sg_status sg_trajectories_agent_count(const sg_trajectories* ts, size_t* out);
SG_API sg_status sg_trajectories_frame_count(const sg_trajectories* ts, size_t* out);
SG_API void sg_trajectories_free(sg_trajectories* ts);

/* Analysis of one episode. Copies the trajectories. */
SG_API sg_status sg_analysis_create(const sg_trajectories* ts, const char* config_json, sg_analysis** out);
SG_API void sg_analysis_free(sg_analysis* analysis);
/* agent_id NULL: every agent, as a JSON array; otherwise one JSON object. */
SG_API sg_status sg_analysis_report_json(const sg_analysis* analysis, const char* agent_id, char** json_out);
/* `t,sle,sie,marker` CSV for one of overspeeding, overtaking, sudden_lane_change. */
SG_API sg_status sg_analysis_curve_csv(const sg_analysis* analysis, const char* agent_id, const char* style,
                                       char** csv_out);
/* Writes up to `capacity` features; *length gets the full feature count. */
SG_API sg_status sg_analysis_features(const sg_analysis* analysis, const char* agent_id, const char* layout,
                                      double* values, size_t capacity, size_t* length);
/* Per-agent predictions as a JSON array. */
SG_API sg_status sg_analysis_classify_json(const sg_analysis* analysis, const sg_model* model, char** json_out);

/* TDE of one agent against `participant,style,start_frame,end_frame` CSV.
   styles_csv lists the requested styles ("overtaking,weaving"); NULL means
   every annotated style. */
SG_API sg_status sg_evaluate_json(const sg_trajectories* ts, const char* annotations_csv, const char* agent_id,
                                  const char* styles_csv, const char* config_json, char** json_out);

/* Synthetic episodes. */
SG_API sg_status sg_simulate_preset(const char* preset, uint64_t seed, int64_t horizon, sg_episode** out);
SG_API sg_status sg_simulate_params(const char* params_json, int64_t horizon, sg_episode** out);
SG_API sg_status sg_preset_params_json(const char* preset, char** json_out);
SG_API sg_status sg_episode_trajectories(const sg_episode* episode, sg_trajectories** out);
SG_API sg_status sg_episode_truth_csv(const sg_episode* episode, char** csv_out);
SG_API void sg_episode_free(sg_episode* episode);

/* label: "aggressive" or "conservative". start_params_json NULL starts from the
   preset of the same name. On SG_ERR_CALIBRATION *json_out still receives the
   best parameters found. */
SG_API sg_status sg_calibrate_json(const char* label, double sle_threshold, const char* start_params_json,
                                   size_t max_iters, int64_t horizon, size_t seeds, const char* config_json,
                                   char** json_out);

/* Condition numbers for window lengths t_min..t_max as a JSON array. */
SG_API sg_status sg_condition_study_json(int degree, size_t t_min, size_t t_max, double delta, const char* origin,
                                         char** json_out);

/* Labeled samples as `label,f0,f1,...` CSV. */
SG_API sg_status sg_dataset_synthetic_csv(size_t n, uint64_t seed, int64_t horizon, const char* config_json,
                                          char** csv_out);

/* Seeded shuffle of `label,f0,...` CSV; the last test_fraction of rows is held out. */
SG_API sg_status sg_dataset_split_csv(const char* samples_csv, double test_fraction, uint64_t seed, char** train_out,
                                      char** test_out);

/* Training reads the train section and layout of config_json. */
SG_API sg_status sg_model_train(const char* samples_csv, const char* config_json, sg_model** out);
SG_API sg_status sg_model_from_json(const char* json, sg_model** out);
SG_API sg_status sg_model_to_json(const sg_model* model, char** json_out);
SG_API sg_status sg_model_input_dim(const sg_model* model, size_t* out);
/* label_out: 0 aggressive, 1 conservative. scores_out may be NULL, else holds 2. */
SG_API sg_status sg_model_predict(const sg_model* model, const double* features, size_t length, int* label_out,
                                  double* scores_out);
/* Weighted accuracy of the model on `label,f0,...` CSV. */
SG_API sg_status sg_model_accuracy(const sg_model* model, const char* samples_csv, double* out);
SG_API void sg_model_free(sg_model* model);

#ifdef __cplusplus
}
#endif

#endif
