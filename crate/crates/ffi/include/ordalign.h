#ifndef ORDALIGN_H
#define ORDALIGN_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum OaStatus {
  OA_STATUS_OK = 0,
  /**
   * Invalid input: bad configuration, malformed file, unknown label.
   */
  OA_STATUS_VALIDATION = 1,
  /**
   * Numerical failure during optimization.
   */
  OA_STATUS_NUMERICAL = 2,
  /**
   * File could not be read or written.
   */
  OA_STATUS_IO = 3,
  /**
   * A required pointer argument was null or an index out of range.
   */
  OA_STATUS_NULL_ARGUMENT = 4,
} OaStatus;

/**
 * Opaque dataset handle.
 */
typedef struct OaDataset OaDataset;

/**
 * Opaque solve-result handle: the rounded per-clip assignments together
 * with convergence information.
 */
typedef struct OaResult OaResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. Valid until
 * the next failing call on the same thread. Never null.
 */
const char *oa_last_error_message(void);

/**
 * Reads a dataset manifest (JSON) and its referenced feature files.
 * On success stores a new handle in `out`; free it with
 * [`oa_dataset_free`].
 */
enum OaStatus oa_dataset_read(const char *manifest_path, struct OaDataset **out);

/**
 * Generates a synthetic benchmark dataset with default structure
 * parameters. `n_clips` must be positive.
 */
enum OaStatus oa_dataset_generate(uintptr_t n_clips, uint64_t seed, struct OaDataset **out);

/**
 * Frees a dataset handle. Passing null is a no-op.
 */
void oa_dataset_free(struct OaDataset *dataset);

/**
 * Number of clips in the dataset.
 */
uintptr_t oa_dataset_num_clips(const struct OaDataset *dataset);

/**
 * Number of labels, background included.
 */
uintptr_t oa_dataset_num_labels(const struct OaDataset *dataset);

/**
 * Number of feature intervals in one clip, or 0 for a bad index.
 */
uintptr_t oa_dataset_clip_len(const struct OaDataset *dataset, uintptr_t clip_index);

/**
 * Runs the weakly supervised alignment over all clips of the dataset and
 * stores a result handle in `out`; free it with [`oa_result_free`].
 *
 * `lambda` is the ridge regularization (must be positive), `kappa_bg`
 * the linear penalty on assigning background, `bg_weight` the squared
 * class weight of background in the clustering cost, `gap_tol` the
 * duality-gap stopping threshold, and `max_iter` the iteration cap.
 */
enum OaStatus oa_solve(const struct OaDataset *dataset,
                       double lambda,
                       double kappa_bg,
                       double bg_weight,
                       double gap_tol,
                       uintptr_t max_iter,
                       struct OaResult **out);

/**
 * Frees a result handle. Passing null is a no-op.
 */
void oa_result_free(struct OaResult *result);

/**
 * Number of Frank-Wolfe iterations performed.
 */
uintptr_t oa_result_iterations(const struct OaResult *result);

/**
 * Final duality gap at termination.
 */
double oa_result_final_gap(const struct OaResult *result);

/**
 * Copies the rounded 0-based slot index of every interval of one clip
 * into `slots_out` (capacity `capacity`). Returns the number of
 * intervals, or 0 for a bad handle or index. If the clip has more
 * intervals than `capacity`, nothing is copied; call again with a larger
 * buffer (the returned length tells you how large).
 */
uintptr_t oa_result_slots(const struct OaResult *result,
                          uintptr_t clip_index,
                          uintptr_t *slots_out,
                          uintptr_t capacity);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ORDALIGN_H */
