/* C interface to the recourse library. All functions return an rbr_status;
 * on failure rbr_last_error_message() describes the error for the calling thread.
 * Strings returned through char** are owned by the caller; free with rbr_string_free. */
#ifndef RBR_RBR_H
#define RBR_RBR_H

#include <stddef.h>
#include <stdint.h>

#if defined(RBR_BUILDING_LIBRARY)
#define RBR_API __attribute__((visibility("default")))
#else
#define RBR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rbr_status {
  RBR_OK = 0,
  RBR_ERR_INVALID_ARGUMENT = 1,
  RBR_ERR_SCHEMA = 2,
  RBR_ERR_PARSE = 3,
  RBR_ERR_DEGENERATE_DATA = 4,
  RBR_ERR_DEGENERATE_NEIGHBORHOOD = 5,
  RBR_ERR_ALREADY_FAVORABLE = 6,
  RBR_ERR_INVALID_BRACKET = 7,
  RBR_ERR_VERSION_MISMATCH = 8,
  RBR_ERR_MALFORMED_FILE = 9,
  RBR_ERR_IO = 10,
  RBR_ERR_CONFIG = 11,
  RBR_ERR_INTERNAL = 12
} rbr_status;

typedef enum rbr_method { RBR_METHOD_KDE = 0, RBR_METHOD_ROBUST = 1, RBR_METHOD_WACHTER = 2 } rbr_method;

typedef struct rbr_config rbr_config;
typedef struct rbr_dataset rbr_dataset;
typedef struct rbr_model rbr_model;
typedef struct rbr_sample_set rbr_sample_set;
typedef struct rbr_recourse_result rbr_recourse_result;

/* Settings for a single recourse request. Initialise with rbr_recourse_params_default. */
typedef struct rbr_recourse_params {
  rbr_method method;
  double delta_plus;
  double eps0;
  double eps1;
  double sigma;
  double zeta;
  const int* frozen_mask; /* optional, one entry per feature, nonzero = frozen */
  double wachter_lambda;
} rbr_recourse_params;

RBR_API const char* rbr_version(void);
RBR_API const char* rbr_last_error_message(void);
RBR_API const char* rbr_status_name(rbr_status status);
RBR_API void rbr_string_free(char* s);

/* config */
RBR_API rbr_status rbr_config_load(const char* path, rbr_config** out);
RBR_API rbr_status rbr_config_parse(const char* text, rbr_config** out);
RBR_API rbr_status rbr_config_render(const rbr_config* cfg, char** out);
RBR_API rbr_status rbr_config_output_dir(const rbr_config* cfg, char** out);
RBR_API void rbr_config_free(rbr_config* cfg);

/* datasets */
RBR_API rbr_status rbr_dataset_generate_synthetic(long n, double noise_std, uint64_t seed, rbr_dataset** out);
RBR_API rbr_status rbr_dataset_load_csv(const char* path, const char* schema, rbr_dataset** out);
RBR_API rbr_status rbr_dataset_split(const rbr_dataset* data, double train_fraction, uint64_t seed, int scale,
                                     rbr_dataset** train, rbr_dataset** test);
RBR_API rbr_status rbr_dataset_shape(const rbr_dataset* data, size_t* rows, size_t* dim);
RBR_API rbr_status rbr_dataset_row(const rbr_dataset* data, size_t row, double* out, size_t dim, int* label);
RBR_API rbr_status rbr_dataset_to_json(const rbr_dataset* data, char** out);
RBR_API void rbr_dataset_free(rbr_dataset* data);

/* classifier; cfg may be NULL for default training settings */
RBR_API rbr_status rbr_model_train(const rbr_dataset* train, const rbr_config* cfg, uint64_t seed, rbr_model** out);
RBR_API rbr_status rbr_model_save(const rbr_model* model, const char* path);
RBR_API rbr_status rbr_model_load(const char* path, rbr_model** out);
RBR_API rbr_status rbr_model_input_dim(const rbr_model* model, size_t* dim);
RBR_API rbr_status rbr_model_predict_proba(const rbr_model* model, const double* x, size_t dim, double* out);
RBR_API rbr_status rbr_model_accuracy(const rbr_model* model, const rbr_dataset* data, double* out);
RBR_API rbr_status rbr_model_auc(const rbr_model* model, const rbr_dataset* data, double* out);
RBR_API void rbr_model_free(rbr_model* model);

/* local sample sets; cfg may be NULL for default sampler settings */
RBR_API rbr_status rbr_sample_set_build(const double* x0, size_t dim, const rbr_dataset* data, const rbr_model* model,
                                        const rbr_config* cfg, uint64_t seed, rbr_sample_set** out);
RBR_API rbr_status rbr_sample_set_save(const rbr_sample_set* ls, const char* path);
RBR_API rbr_status rbr_sample_set_load(const char* path, rbr_sample_set** out);
RBR_API rbr_status rbr_sample_set_boundary(const rbr_sample_set* ls, double* out, size_t dim);
RBR_API void rbr_sample_set_free(rbr_sample_set* ls);

/* recourse; ls may be NULL for Wachter, model may be NULL for the Bayesian methods */
RBR_API void rbr_recourse_params_default(rbr_recourse_params* params);
RBR_API rbr_status rbr_recourse(const rbr_recourse_params* params, const double* x0, size_t dim,
                                const rbr_sample_set* ls, const rbr_model* model, rbr_recourse_result** out);
RBR_API rbr_status rbr_recourse_result_x_prime(const rbr_recourse_result* r, double* out, size_t dim);
RBR_API rbr_status rbr_recourse_result_cost(const rbr_recourse_result* r, double* out);
RBR_API rbr_status rbr_recourse_result_converged(const rbr_recourse_result* r, int* out);
RBR_API rbr_status rbr_recourse_result_to_json(const rbr_recourse_result* r, char** out);
RBR_API void rbr_recourse_result_free(rbr_recourse_result* r);

/* experiment commands; outputs are written under out_dir */
RBR_API rbr_status rbr_run_train(const rbr_config* cfg, const char* out_dir);
RBR_API rbr_status rbr_run_sample(const rbr_config* cfg, const char* out_dir);
RBR_API rbr_status rbr_run_recourse(const rbr_config* cfg, const char* out_dir);
RBR_API rbr_status rbr_run_benchmark(const rbr_config* cfg, const char* out_dir);
RBR_API rbr_status rbr_run_sweep(const rbr_config* cfg, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
