#ifndef OKMEANS_H
#define OKMEANS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define OK_STATUS_SUCCESS 0

#define OK_STATUS_NULL_POINTER 1

#define OK_STATUS_INVALID 2

#define OK_STATUS_TIMEOUT 3

#define OK_STATUS_INFEASIBLE 4

#define OK_STATUS_BUFFER_TOO_SMALL 5

#define OK_STATUS_PANIC 6

#define OK_ALGO_NK 0

#define OK_ALGO_KMPP 1

#define OK_ALGO_KMM 2

#define OK_ALGO_LS 3

#define OK_ALGO_UNIFORM 4

#define OK_CORESET_OFF 0

#define OK_CORESET_PRACTICAL 1

#define OK_CORESET_THEORETICAL 2

/**
 * Opaque dataset handle.
 */
typedef struct OkDataset OkDataset;

/**
 * Opaque clustering result handle.
 */
typedef struct OkResult OkResult;

/**
 * Options for [`ok_cluster`].
 */
typedef struct OkClusterOptions {
  size_t k;
  size_t z;
  /**
   * One of `OK_ALGO_*`.
   */
  int32_t algo;
  /**
   * One of `OK_CORESET_*`.
   */
  int32_t coreset;
  /**
   * Seeds to try; the smallest final objective wins. May be null when
   * `n_seeds` is 0, in which case seed 0 is used.
   */
  const uint64_t *seeds;
  size_t n_seeds;
  /**
   * Seconds for all seeds together; `<= 0` means no limit.
   */
  double timeout_seconds;
  /**
   * Opt guess for NK-means; `<= 0` searches the guess grid.
   */
  double opt_guess;
} OkClusterOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *ok_last_error_message(void);

/**
 * Copy `n * d` row-major coordinates (and optionally `n` weights) into a new
 * dataset.
 *
 * # Safety
 * `coords` must point to `n * d` readable doubles; `weights` must be null or
 * point to `n` readable doubles; `out` must be a valid pointer.
 */
int32_t ok_dataset_new(const double *coords,
                       size_t n,
                       size_t d,
                       const double *weights,
                       struct OkDataset **out);

/**
 * # Safety
 * `ds` must be null or a handle from [`ok_dataset_new`] not yet freed.
 */
void ok_dataset_free(struct OkDataset *ds);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t ok_dataset_len(const struct OkDataset *ds);

/**
 * Dimension, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t ok_dataset_dim(const struct OkDataset *ds);

/**
 * Run the full pipeline: optional coreset, the chosen algorithm, then
 * exactly `z` outliers discarded from the full dataset.
 *
 * # Safety
 * `ds` must be a live dataset handle, `opts` a valid options struct whose
 * `seeds` points to `n_seeds` readable values, and `out` a valid pointer.
 */
int32_t ok_cluster(const struct OkDataset *ds,
                   const struct OkClusterOptions *opts,
                   struct OkResult **out);

/**
 * # Safety
 * `r` must be null or a handle from [`ok_cluster`] not yet freed.
 */
void ok_result_free(struct OkResult *r);

/**
 * z-cost of the result on the full dataset, or NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
double ok_result_objective(const struct OkResult *r);

/**
 * Seed of the winning run, or 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
uint64_t ok_result_seed(const struct OkResult *r);

/**
 * # Safety
 * `r` must be null or a live result handle.
 */
size_t ok_result_num_centers(const struct OkResult *r);

/**
 * # Safety
 * `r` must be null or a live result handle.
 */
size_t ok_result_num_discarded(const struct OkResult *r);

/**
 * Copy the centers, row-major, into `buf` of `len` doubles.
 *
 * # Safety
 * `r` must be a live result handle and `buf` must point to `len` writable doubles.
 */
int32_t ok_result_centers(const struct OkResult *r, double *buf, size_t len);

/**
 * Copy the ascending discarded indices into `buf` of `len` entries.
 *
 * # Safety
 * `r` must be a live result handle and `buf` must point to `len` writable entries.
 */
int32_t ok_result_discarded(const struct OkResult *r, size_t *buf, size_t len);

/**
 * z-cost of `k` row-major centers on the dataset.
 *
 * # Safety
 * `ds` must be a live dataset handle, `centers` must point to `k * dim`
 * readable doubles and `out_cost` must be a valid pointer.
 */
int32_t ok_z_cost(const struct OkDataset *ds,
                  const double *centers,
                  size_t k,
                  size_t z,
                  double *out_cost);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OKMEANS_H */
