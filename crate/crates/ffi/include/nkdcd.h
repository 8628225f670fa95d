#ifndef NKDCD_H
#define NKDCD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NkdcdStatus {
  NKDCD_STATUS_OK = 0,
  NKDCD_STATUS_NULL_POINTER = 1,
  NKDCD_STATUS_INVALID_ARGUMENT = 2,
  NKDCD_STATUS_IO = 3,
  NKDCD_STATUS_PARSE = 4,
  NKDCD_STATUS_DIMENSION = 5,
  NKDCD_STATUS_DIVERGED = 6,
  NKDCD_STATUS_UNDEFINED_METRIC = 7,
  NKDCD_STATUS_BUFFER_TOO_SMALL = 8,
  NKDCD_STATUS_PANIC = 9,
} NkdcdStatus;

/**
 * A time-series panel with optional truth matrix.
 */
typedef struct NkdcdDataset NkdcdDataset;

/**
 * A trained model together with its training configuration.
 */
typedef struct NkdcdModelHandle NkdcdModelHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *nkdcd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nkdcd_version(void);

/**
 * Sparse VAR(3) panel with default coupling and noise.
 */
enum NkdcdStatus nkdcd_generate_var3(size_t n, size_t t, uint64_t seed, struct NkdcdDataset **out);

/**
 * Lorenz-96 panel sampled every 0.1 time units.
 */
enum NkdcdStatus nkdcd_generate_lorenz96(size_t n,
                                         double forcing,
                                         size_t t,
                                         uint64_t seed,
                                         struct NkdcdDataset **out);

/**
 * Dataset from a row-major `rows x cols` buffer; `truth` (`cols x cols`
 * bytes, nonzero = edge) may be null.
 *
 * # Safety
 * `values` must point to `rows * cols` doubles and `truth`, when non-null, to
 * `cols * cols` bytes.
 */
enum NkdcdStatus nkdcd_dataset_from_values(const double *values,
                                           size_t rows,
                                           size_t cols,
                                           const uint8_t *truth,
                                           struct NkdcdDataset **out);

/**
 * Reads a CSV panel and optional truth CSV (`truth_path` may be null).
 *
 * # Safety
 * Paths must be null or NUL-terminated strings.
 */
enum NkdcdStatus nkdcd_dataset_load_csv(const char *path,
                                        const char *truth_path,
                                        struct NkdcdDataset **out);

/**
 * # Safety
 * `ds` must be a live dataset handle; output pointers must be valid.
 */
enum NkdcdStatus nkdcd_dataset_shape(const struct NkdcdDataset *ds, size_t *rows, size_t *cols);

/**
 * Copies the row-major values into `out` (capacity `len`).
 *
 * # Safety
 * `ds` must be a live dataset handle and `out` must hold `len` doubles.
 */
enum NkdcdStatus nkdcd_dataset_values(const struct NkdcdDataset *ds, double *out, size_t len);

/**
 * Z-scores every column in place.
 *
 * # Safety
 * `ds` must be a live dataset handle.
 */
enum NkdcdStatus nkdcd_dataset_standardize(struct NkdcdDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void nkdcd_dataset_free(struct NkdcdDataset *ds);

/**
 * Trains a model. `config_json` holds a JSON training config (missing
 * fields take defaults) or is null for the defaults.
 *
 * # Safety
 * `ds` must be a live dataset handle; `config_json` null or NUL-terminated.
 */
enum NkdcdStatus nkdcd_train(const struct NkdcdDataset *ds,
                             const char *config_json,
                             struct NkdcdModelHandle **out);

/**
 * # Safety
 * `model` must be a live model handle; `n` and `max_lag` valid pointers.
 */
enum NkdcdStatus nkdcd_model_dims(const struct NkdcdModelHandle *model, size_t *n, size_t *max_lag);

/**
 * Row-major `n x n` causal scores; entry `(i, j)` scores `j -> i`.
 *
 * # Safety
 * `model` must be a live model handle and `out` must hold `len` doubles.
 */
enum NkdcdStatus nkdcd_model_scores(const struct NkdcdModelHandle *model, double *out, size_t len);

/**
 * Row-major `n x n` block norms of lag `lag` (1-based).
 *
 * # Safety
 * `model` must be a live model handle and `out` must hold `len` doubles.
 */
enum NkdcdStatus nkdcd_model_lag_norms(const struct NkdcdModelHandle *model,
                                       size_t lag,
                                       double *out,
                                       size_t len);

/**
 * AUROC of a model's scores against the dataset's truth matrix.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum NkdcdStatus nkdcd_model_auroc(const struct NkdcdModelHandle *model,
                                   const struct NkdcdDataset *ds,
                                   int include_self,
                                   double *out);

/**
 * AUROC of arbitrary row-major `n x n` scores against `n x n` truth bytes.
 *
 * # Safety
 * `scores` must hold `n * n` doubles and `truth` `n * n` bytes.
 */
enum NkdcdStatus nkdcd_auroc(const double *scores,
                             const uint8_t *truth,
                             size_t n,
                             int include_self,
                             double *out);

/**
 * Writes the model as a JSON checkpoint.
 *
 * # Safety
 * `model` must be a live handle and `path` NUL-terminated.
 */
enum NkdcdStatus nkdcd_model_save(const struct NkdcdModelHandle *model, const char *path);

/**
 * # Safety
 * `path` must be NUL-terminated and `out` valid.
 */
enum NkdcdStatus nkdcd_model_load(const char *path, struct NkdcdModelHandle **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void nkdcd_model_free(struct NkdcdModelHandle *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NKDCD_H */
