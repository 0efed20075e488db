#ifndef RANDSEL_H
#define RANDSEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum RsStatus {
  RS_STATUS_OK = 0,
  RS_STATUS_NULL_POINTER = 1,
  RS_STATUS_INVALID_ARGUMENT = 2,
  RS_STATUS_IO = 3,
  RS_STATUS_PARSE = 4,
  RS_STATUS_SCHEMA = 5,
  RS_STATUS_DEGENERATE_DATA = 6,
  RS_STATUS_COVERAGE = 7,
  RS_STATUS_NUMERIC = 8,
  RS_STATUS_INFEASIBLE = 9,
  RS_STATUS_SOLVER = 10,
  RS_STATUS_BUFFER_TOO_SMALL = 11,
  RS_STATUS_PANIC = 12,
} RsStatus;

typedef struct RsDataset RsDataset;

typedef struct RsModel RsModel;

typedef struct RsTrace RsTrace;

/**
 * Selection parameters; obtain defaults from [`rs_select_config_default`].
 */
typedef struct RsSelectConfig {
  size_t tasks;
  size_t subsample;
  double cull;
  double top_fraction;
  size_t fix_after;
  bool fixing;
  double sigma0;
  bool balanced;
  uint64_t seed;
  size_t min_coverage;
  /**
   * Force the delta label kernel for binary labels.
   */
  bool delta_label_kernel;
  /**
   * Use every row in every task instead of bootstrap samples.
   */
  bool full_rows;
} RsSelectConfig;

/**
 * Training parameters; obtain defaults from [`rs_train_config_default`].
 */
typedef struct RsTrainConfig {
  /**
   * Size of the default bandwidth grid.
   */
  size_t sigma_count;
  /**
   * LPBoost box parameter; values <= 0 tune it on a validation split.
   */
  double d;
  double validation_fraction;
  /**
   * Negatives per positive in each learner's rows; <= 0 disables.
   */
  double negative_ratio;
  uint64_t seed;
} RsTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The caller
 * owns the string and releases it with [`rs_string_free`].
 */
char *rs_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void rs_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rs_version(void);

/**
 * Loads a CSV dataset. `label_column` is a header name, or a column index
 * when `has_header` is false.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum RsStatus rs_dataset_load_csv(const char *path,
                                  const char *label_column,
                                  bool has_header,
                                  struct RsDataset **out);

/**
 * Builds a binary dataset from a row-major `m x n` matrix and labels in
 * {+1, -1}.
 *
 * # Safety
 * `x` must hold `m * n` values and `y` must hold `m` values.
 */
enum RsStatus rs_dataset_from_arrays(const double *x,
                                     size_t m,
                                     size_t n,
                                     const double *y,
                                     struct RsDataset **out);

/**
 * XOR data: features 0 and 1 are +-1 and the label is their product.
 * `noise` is 0 for uniform and 1 for Gaussian noise features.
 *
 * # Safety
 * `out` must be writable.
 */
enum RsStatus rs_dataset_gen_xor(size_t n_features,
                                 size_t m,
                                 uint32_t noise,
                                 uint64_t seed,
                                 struct RsDataset **out);

/**
 * # Safety
 * `data` must be a live dataset handle.
 */
size_t rs_dataset_n_samples(const struct RsDataset *data);

/**
 * # Safety
 * `data` must be a live dataset handle.
 */
size_t rs_dataset_n_features(const struct RsDataset *data);

/**
 * # Safety
 * `data` must be null or a handle not yet freed.
 */
void rs_dataset_free(struct RsDataset *data);

struct RsSelectConfig rs_select_config_default(void);

/**
 * Runs feature selection to completion.
 *
 * # Safety
 * `data` and `config` must be valid; `out` must be writable.
 */
enum RsStatus rs_select(const struct RsDataset *data,
                        const struct RsSelectConfig *config,
                        struct RsTrace **out);

/**
 * # Safety
 * `trace` must be a live trace handle.
 */
size_t rs_trace_n_iterations(const struct RsTrace *trace);

/**
 * Copies the final active feature indices into `features`. `len` receives
 * the number of features even when the buffer is too small.
 *
 * # Safety
 * `features` must hold `capacity` values (or be null with capacity 0);
 * `len` must be writable.
 */
enum RsStatus rs_trace_final_features(const struct RsTrace *trace,
                                      size_t *features,
                                      size_t capacity,
                                      size_t *len);

/**
 * Estimated contribution of `feature` at `iteration`. Fails when the
 * feature was not active then or had no estimate.
 *
 * # Safety
 * `trace` must be a live trace handle; `value` must be writable.
 */
enum RsStatus rs_trace_contribution(const struct RsTrace *trace,
                                    size_t iteration,
                                    size_t feature,
                                    double *value);

/**
 * Serialises the trace as JSON into a new string.
 *
 * # Safety
 * `trace` must be a live trace handle; `out` must be writable.
 */
enum RsStatus rs_trace_to_json(const struct RsTrace *trace, char **out);

/**
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum RsStatus rs_trace_from_json(const char *json, struct RsTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void rs_trace_free(struct RsTrace *trace);

struct RsTrainConfig rs_train_config_default(void);

/**
 * Fits the multiple-kernel predictor on the trace's feature sets.
 *
 * # Safety
 * Handles and `config` must be valid; `out` must be writable.
 */
enum RsStatus rs_train(const struct RsDataset *data,
                       const struct RsTrace *trace,
                       const struct RsTrainConfig *config,
                       struct RsModel **out);

/**
 * Same as [`rs_train`] with explicit bandwidths instead of the default grid.
 *
 * # Safety
 * As [`rs_train`]; `sigmas` must hold `n_sigmas` values.
 */
enum RsStatus rs_train_with_sigmas(const struct RsDataset *data,
                                   const struct RsTrace *trace,
                                   const struct RsTrainConfig *config,
                                   const double *sigmas,
                                   size_t n_sigmas,
                                   struct RsModel **out);

/**
 * Scores `n_rows` row-major points. `scores` receives the ensemble score
 * and `classes` the predicted class id (binary: 0 is +1, 1 is -1).
 *
 * # Safety
 * `x` must hold `n_rows * n_features` values; `scores` and `classes` must
 * hold `n_rows` values each.
 */
enum RsStatus rs_model_predict(const struct RsModel *model,
                               const double *x,
                               size_t n_rows,
                               size_t n_features,
                               double *scores,
                               size_t *classes);

/**
 * # Safety
 * `model` must be a live handle; `path` must be NUL-terminated.
 */
enum RsStatus rs_model_save(const struct RsModel *model, const char *path);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum RsStatus rs_model_load(const char *path, struct RsModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void rs_model_free(struct RsModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDSEL_H */
