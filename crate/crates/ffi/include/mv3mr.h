#ifndef MV3MR_H
#define MV3MR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Mv3mrStatus {
  MV3MR_STATUS_OK = 0,
  MV3MR_STATUS_NULL_POINTER = 1,
  MV3MR_STATUS_INVALID_ARGUMENT = 2,
  MV3MR_STATUS_INVALID_DATA = 3,
  MV3MR_STATUS_IO = 4,
  MV3MR_STATUS_PARSE = 5,
  MV3MR_STATUS_NUMERICAL = 6,
  MV3MR_STATUS_UNDEFINED_METRIC = 7,
  MV3MR_STATUS_BUFFER_TOO_SMALL = 8,
  MV3MR_STATUS_PANIC = 9,
} Mv3mrStatus;

/**
 * Which rows of a dataset to address.
 */
typedef enum Mv3mrSplit {
  MV3MR_SPLIT_LABELED = 0,
  MV3MR_SPLIT_UNLABELED = 1,
  MV3MR_SPLIT_TEST = 2,
  /**
   * Labeled followed by unlabeled rows.
   */
  MV3MR_SPLIT_TRAIN = 3,
} Mv3mrSplit;

typedef struct Mv3mrConfig Mv3mrConfig;

typedef struct Mv3mrDataset Mv3mrDataset;

typedef struct Mv3mrModel Mv3mrModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread. Valid until the
 * next `mv3mr_*` call on the same thread; never null.
 */
const char *mv3mr_last_error_message(void);

/**
 * Loads a dataset manifest.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum Mv3mrStatus mv3mr_dataset_load(const char *path, struct Mv3mrDataset **out);

/**
 * Sample, label and view counts of a dataset.
 *
 * # Safety
 * `data` must be a live dataset handle; output pointers may be null.
 */
enum Mv3mrStatus mv3mr_dataset_shape(const struct Mv3mrDataset *data,
                                     size_t *samples,
                                     size_t *labels,
                                     size_t *views);

/**
 * Number of rows in a split (one of the `MV3MR_SPLIT_*` values).
 *
 * # Safety
 * `data` must be a live dataset handle and `len` a valid pointer.
 */
enum Mv3mrStatus mv3mr_dataset_split_len(const struct Mv3mrDataset *data,
                                         uint32_t split,
                                         size_t *len);

/**
 * # Safety
 * `data` must be null or a handle from [`mv3mr_dataset_load`] not yet freed.
 */
void mv3mr_dataset_free(struct Mv3mrDataset *data);

/**
 * A configuration holding the library defaults.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum Mv3mrStatus mv3mr_config_new(struct Mv3mrConfig **out);

/**
 * Reads a `key = value` configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum Mv3mrStatus mv3mr_config_load(const char *path, struct Mv3mrConfig **out);

/**
 * Sets one configuration field using the config-file syntax, e.g.
 * `key = "gamma_a"`, `value = "0.01"`. The configuration is unchanged on
 * error.
 *
 * # Safety
 * `cfg` must be a live configuration handle; `key` and `value` must be
 * NUL-terminated strings.
 */
enum Mv3mrStatus mv3mr_config_set(struct Mv3mrConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be null or a configuration handle not yet freed.
 */
void mv3mr_config_free(struct Mv3mrConfig *cfg);

/**
 * Learns the classifier together with the kernel and graph weights.
 *
 * # Safety
 * `data` and `cfg` must be live handles and `out` a valid pointer.
 */
enum Mv3mrStatus mv3mr_fit(const struct Mv3mrDataset *data,
                           const struct Mv3mrConfig *cfg,
                           struct Mv3mrModel **out);

/**
 * Trains with kernel and graph weights frozen at `1/V`.
 *
 * # Safety
 * As [`mv3mr_fit`].
 */
enum Mv3mrStatus mv3mr_fit_uniform(const struct Mv3mrDataset *data,
                                   const struct Mv3mrConfig *cfg,
                                   struct Mv3mrModel **out);

/**
 * Writes a model file atomically.
 *
 * # Safety
 * `model` must be a live model handle and `path` a NUL-terminated string.
 */
enum Mv3mrStatus mv3mr_model_save(const struct Mv3mrModel *model, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum Mv3mrStatus mv3mr_model_load(const char *path, struct Mv3mrModel **out);

/**
 * Label, view and training-sample counts plus the number of objective
 * values recorded.
 *
 * # Safety
 * `model` must be a live model handle; output pointers may be null.
 */
enum Mv3mrStatus mv3mr_model_shape(const struct Mv3mrModel *model,
                                   size_t *labels,
                                   size_t *views,
                                   size_t *train_samples,
                                   size_t *trace_len);

/**
 * Copies the kernel weights `β` and graph weights `θ`; each buffer must
 * hold one value per view.
 *
 * # Safety
 * `beta` and `theta` must point to at least `capacity` writable doubles.
 */
enum Mv3mrStatus mv3mr_model_weights(const struct Mv3mrModel *model,
                                     double *beta,
                                     double *theta,
                                     size_t capacity);

/**
 * Copies the objective trace `O_0, O_1, …`.
 *
 * # Safety
 * `trace` must point to at least `capacity` writable doubles.
 */
enum Mv3mrStatus mv3mr_model_trace(const struct Mv3mrModel *model, double *trace, size_t capacity);

/**
 * Scores the rows of `split` (an `MV3MR_SPLIT_*` value) into `scores` (row-major, one row per
 * sample, one column per label). `rows` receives the row count; when the
 * buffer is too small nothing is written and `BUFFER_TOO_SMALL` is
 * returned.
 *
 * # Safety
 * `model` and `data` must be live handles; `scores` must point to at least
 * `capacity` writable doubles.
 */
enum Mv3mrStatus mv3mr_predict(const struct Mv3mrModel *model,
                               const struct Mv3mrDataset *data,
                               uint32_t split,
                               double *scores,
                               size_t capacity,
                               size_t *rows);

/**
 * # Safety
 * `model` must be null or a model handle not yet freed.
 */
void mv3mr_model_free(struct Mv3mrModel *model);

/**
 * 11-point interpolated average precision. `truth[i]` is nonzero for
 * positives.
 *
 * # Safety
 * `scores` and `truth` must each point to `len` readable elements.
 */
enum Mv3mrStatus mv3mr_average_precision(const double *scores,
                                         const uint8_t *truth,
                                         size_t len,
                                         double *out);

/**
 * Area under the ROC curve with half credit for ties.
 *
 * # Safety
 * As [`mv3mr_average_precision`].
 */
enum Mv3mrStatus mv3mr_auc(const double *scores, const uint8_t *truth, size_t len, double *out);

/**
 * Mean ranking loss of a row-major `rows × cols` score matrix. Rows with
 * an empty or full label set are skipped; `excluded` receives their count.
 *
 * # Safety
 * `scores` and `truth` must each point to `rows * cols` readable elements;
 * `excluded` may be null.
 */
enum Mv3mrStatus mv3mr_ranking_loss(const double *scores,
                                    const uint8_t *truth,
                                    size_t rows,
                                    size_t cols,
                                    double *out,
                                    size_t *excluded);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MV3MR_H */
