/* C interface to the dmm density-matrix embedding and classification
 * library. Generated by cbindgen; do not edit by hand. */

#ifndef DMM_H
#define DMM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Per-class bandwidth selection rule.
 */
typedef enum DmmBandwidth {
  /**
   * Plug-in rule h = (mean per-dimension std) · n^(−1/(r+4)).
   */
  DMM_BANDWIDTH_SCOTT = 0,
  /**
   * Leave-one-out log-likelihood over a power-of-two grid around Scott.
   */
  DMM_BANDWIDTH_CROSS_VALIDATED = 1,
} DmmBandwidth;

/**
 * KDE kernel shape.
 */
typedef enum DmmKernel {
  DMM_KERNEL_GAUSSIAN = 0,
  DMM_KERNEL_EPANECHNIKOV = 1,
} DmmKernel;

/**
 * Class priors carried by the fitted model.
 */
typedef enum DmmPriorMode {
  /**
   * Equal weight per class; the MAP rule then equals the ML rule.
   */
  DMM_PRIOR_MODE_UNIFORM = 0,
  /**
   * Training-set class frequencies.
   */
  DMM_PRIOR_MODE_EMPIRICAL = 1,
} DmmPriorMode;

/**
 * Decision rule applied to per-class log-densities.
 */
typedef enum DmmRule {
  /**
   * argmax of the class log-density.
   */
  DMM_RULE_MAXIMUM_LIKELIHOOD = 0,
  /**
   * argmax of log-prior + class log-density.
   */
  DMM_RULE_MAXIMUM_A_POSTERIORI = 1,
} DmmRule;

/**
 * Result code of every fallible entry point.
 */
typedef enum DmmStatus {
  /**
   * Success.
   */
  DMM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DMM_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  DMM_STATUS_INVALID_UTF8 = 2,
  /**
   * Invalid configuration (bad options, malformed model file).
   */
  DMM_STATUS_CONFIG = 3,
  /**
   * Invalid data content (malformed CSV, unknown category or label).
   */
  DMM_STATUS_DATA = 4,
  /**
   * A row did not fit the schema.
   */
  DMM_STATUS_ENCODING = 5,
  /**
   * Numeric degeneracy (rank-zero operator, invalid bandwidth).
   */
  DMM_STATUS_NUMERIC = 6,
  /**
   * Buffer or argument shape mismatch.
   */
  DMM_STATUS_DIMENSION = 7,
  /**
   * Underlying file I/O failure.
   */
  DMM_STATUS_IO = 8,
  /**
   * An internal invariant failed; the handle is still safe to free.
   */
  DMM_STATUS_PANIC = 9,
} DmmStatus;

/**
 * Operator variant used for the fit.
 */
typedef enum DmmVariant {
  /**
   * Amplitudes are square roots of raw class counts.
   */
  DMM_VARIANT_COUNT_BASED = 0,
  /**
   * Amplitudes are square roots of smoothed per-class profiles.
   */
  DMM_VARIANT_CLASS_NORMALIZED = 1,
} DmmVariant;

/**
 * Labeled categorical dataset handle.
 */
typedef struct DmmDataset DmmDataset;

/**
 * Fitted model handle: schema, spectral basis, and per-class KDEs.
 */
typedef struct DmmModel DmmModel;

/**
 * Fit configuration; obtain defaults from [`dmm_fit_options_default`].
 */
typedef struct DmmFitOptions {
  enum DmmVariant variant;
  enum DmmKernel kernel;
  enum DmmBandwidth bandwidth;
  enum DmmPriorMode priors;
  /**
   * Latent dimensions to keep; 0 keeps every retained eigenvalue.
   */
  size_t rank;
  /**
   * Additive smoothing for class-normalized profiles (ignored by the
   * count-based variant). Must be ≥ 0.
   */
  double smoothing;
} DmmFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; never null, do not
 * free.
 */
const char *dmm_version(void);

/**
 * Message describing the most recent failure on this thread (empty
 * string if none). Valid until the next failing call on the thread; do
 * not free.
 */
const char *dmm_last_error(void);

/**
 * Default fit configuration: count-based variant, gaussian kernel,
 * Scott bandwidth, uniform priors, full rank, no smoothing.
 */
struct DmmFitOptions dmm_fit_options_default(void);

/**
 * Loads a labeled categorical CSV (header row; q feature columns plus a
 * label column). `label_column` may be null: a column named "label" is
 * used if present, otherwise the last column. On success writes a new
 * handle to `out`.
 *
 * # Safety
 * `path` and (if non-null) `label_column` must be NUL-terminated;
 * `out` must point to writable storage for one pointer.
 */
enum DmmStatus dmm_dataset_load_csv(const char *path,
                                    const char *label_column,
                                    struct DmmDataset **out);

/**
 * Number of rows; 0 if `ds` is null.
 */
size_t dmm_dataset_rows(const struct DmmDataset *ds);

/**
 * Number of categorical feature columns (blocks); 0 if `ds` is null.
 */
size_t dmm_dataset_blocks(const struct DmmDataset *ds);

/**
 * Total one-hot dimension (sum of block category counts); 0 if `ds` is
 * null.
 */
size_t dmm_dataset_dim(const struct DmmDataset *ds);

/**
 * Number of distinct labels; 0 if `ds` is null.
 */
size_t dmm_dataset_classes(const struct DmmDataset *ds);

/**
 * Releases a dataset handle; null is ignored.
 *
 * # Safety
 * `ds` must be a handle from this library, freed at most once.
 */
void dmm_dataset_free(struct DmmDataset *ds);

/**
 * Fits the full pipeline (counts → amplitudes → spectrum → embedding →
 * per-class KDEs) on a dataset. `options` may be null for defaults. On
 * success writes a new model handle to `out`.
 *
 * # Safety
 * `out` must point to writable storage for one pointer; `ds` and (if
 * non-null) `options` must be live.
 */
enum DmmStatus dmm_model_fit(const struct DmmDataset *ds,
                             const struct DmmFitOptions *options,
                             struct DmmModel **out);

/**
 * Loads a model saved by [`dmm_model_save`], validating its internal
 * consistency. On success writes a new handle to `out`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must point to writable storage
 * for one pointer.
 */
enum DmmStatus dmm_model_load(const char *path, struct DmmModel **out);

/**
 * Writes the model as canonical JSON (byte-reproducible across runs).
 *
 * # Safety
 * `model` must be a live handle; `path` must be NUL-terminated.
 */
enum DmmStatus dmm_model_save(const struct DmmModel *model, const char *path);

/**
 * Latent dimension r; 0 if `model` is null.
 */
size_t dmm_model_rank(const struct DmmModel *model);

/**
 * Ambient one-hot dimension d; 0 if `model` is null.
 */
size_t dmm_model_dim(const struct DmmModel *model);

/**
 * Number of categorical feature columns expected per row; 0 if `model`
 * is null.
 */
size_t dmm_model_blocks(const struct DmmModel *model);

/**
 * Number of classes; 0 if `model` is null.
 */
size_t dmm_model_classes(const struct DmmModel *model);

/**
 * Label string for a class index, or null if out of range. Owned by the
 * model handle; do not free.
 */
const char *dmm_model_label(const struct DmmModel *model, size_t index);

/**
 * Copies the model's retained eigenvalues (descending) into `out`.
 * `cap` must be at least the model rank.
 *
 * # Safety
 * `out` must point to `cap` writable doubles.
 */
enum DmmStatus dmm_model_eigenvalues(const struct DmmModel *model, double *out, size_t cap);

/**
 * Embeds one row of category strings (feature columns in schema order)
 * into latent coordinates. `len` must equal the model's block count and
 * `cap` must be at least its rank; writes rank doubles to `out`.
 *
 * # Safety
 * `values` must point to `len` NUL-terminated strings; `out` must point
 * to `cap` writable doubles.
 */
enum DmmStatus dmm_model_embed_row(const struct DmmModel *model,
                                   const char *const *values,
                                   size_t len,
                                   double *out,
                                   size_t cap);

/**
 * Classifies one row of category strings. Writes the predicted class
 * index to `out_label`; the string form is available via
 * [`dmm_model_label`].
 *
 * # Safety
 * `values` must point to `len` NUL-terminated strings; `out_label` must
 * point to writable storage for one `usize`.
 */
enum DmmStatus dmm_model_classify_row(const struct DmmModel *model,
                                      const char *const *values,
                                      size_t len,
                                      enum DmmRule rule,
                                      size_t *out_label);

/**
 * Releases a model handle; null is ignored.
 *
 * # Safety
 * `model` must be a handle from this library, freed at most once.
 */
void dmm_model_free(struct DmmModel *model);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DMM_H */
