#ifndef HIERSUM_H
#define HIERSUM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_UTF8 = 2,
  HS_STATUS_STRUCTURAL = 3,
  HS_STATUS_INPUT = 4,
  HS_STATUS_CONFIG = 5,
  HS_STATUS_CAPACITY = 6,
  HS_STATUS_PARSE = 7,
  HS_STATUS_IO = 8,
  HS_STATUS_OUT_OF_RANGE = 9,
  HS_STATUS_PANIC = 10,
} HsStatus;

/**
 * Weight function applied to aggregated facts.
 */
typedef enum HsWeightKind {
  HS_WEIGHT_KIND_ABS_DIFF = 0,
  HS_WEIGHT_KIND_COMPOSITION = 1,
  HS_WEIGHT_KIND_BOX_COX = 2,
} HsWeightKind;

/**
 * Opaque problem instance: space plus node weights.
 */
typedef struct HsInstance HsInstance;

/**
 * Opaque solver result.
 */
typedef struct HsSolution HsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds an instance from in-memory CSV text: `n_dims` hierarchy documents
 * (`id,parent_id,name`) and one facts document (`dim1..dimd,metric_pre,metric_cur`).
 *
 * # Safety
 * All pointers must be valid NUL-terminated strings; `hierarchies` must hold
 * `n_dims` of them. `out` must be writable.
 */
enum HsStatus hs_instance_from_csv(const char *const *hierarchies,
                                   size_t n_dims,
                                   const char *facts,
                                   enum HsWeightKind weight,
                                   double boxcox_m,
                                   struct HsInstance **out);

/**
 * Like [`hs_instance_from_csv`] but with explicit node weights (`dim1..dimd,weight`).
 *
 * # Safety
 * Same contract as [`hs_instance_from_csv`].
 */
enum HsStatus hs_instance_from_weights_csv(const char *const *hierarchies,
                                           size_t n_dims,
                                           const char *weights,
                                           struct HsInstance **out);

/**
 * Builds an instance from hierarchy and facts files on disk.
 *
 * # Safety
 * Same contract as [`hs_instance_from_csv`], with paths instead of contents.
 */
enum HsStatus hs_instance_from_files(const char *const *hierarchy_paths,
                                     size_t n_dims,
                                     const char *facts_path,
                                     enum HsWeightKind weight,
                                     double boxcox_m,
                                     struct HsInstance **out);

/**
 * Number of dimensions, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live instance handle.
 */
size_t hs_instance_dims(const struct HsInstance *inst);

/**
 * Number of product nodes, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live instance handle.
 */
uint64_t hs_instance_node_count(const struct HsInstance *inst);

/**
 * # Safety
 * `inst` must be null or a handle not freed before.
 */
void hs_instance_free(struct HsInstance *inst);

/**
 * Selects at most `k` non-overlapping segments.
 *
 * # Safety
 * `inst` must be a live instance handle and `out` writable.
 */
enum HsStatus hs_solve(const struct HsInstance *inst, size_t k, struct HsSolution **out);

/**
 * Number of segments, or 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live solution handle.
 */
size_t hs_solution_len(const struct HsSolution *sol);

/**
 * Total weight, or 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live solution handle.
 */
double hs_solution_total_weight(const struct HsSolution *sol);

/**
 * Weight and linear node index of segment `i` (segments are ordered by weight, heaviest first).
 *
 * # Safety
 * `sol` must be a live solution handle; `weight` and `index` may be null.
 */
enum HsStatus hs_solution_entry(const struct HsSolution *sol,
                                size_t i,
                                double *weight,
                                uint64_t *index);

/**
 * Full JSON report. Release the string with [`hs_string_free`].
 *
 * # Safety
 * `sol` must be a live solution handle and `out` writable.
 */
enum HsStatus hs_solution_to_json(const struct HsSolution *sol, char **out);

/**
 * # Safety
 * `sol` must be null or a handle not freed before.
 */
void hs_solution_free(struct HsSolution *sol);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not freed before.
 */
void hs_string_free(char *s);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *hs_last_error(void);

/**
 * Library version as a static string.
 */
const char *hs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HIERSUM_H */
