#ifndef TRACENT_H
#define TRACENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Entropy kinds for [`tracent_entropy`].
 */
typedef enum TracentEntropyKind {
  TRACENT_ENTROPY_KIND_SHANNON = 0,
  TRACENT_ENTROPY_KIND_LANDSBERG_VEDRAL,
  TRACENT_ENTROPY_KIND_RENYI,
  TRACENT_ENTROPY_KIND_TSALLIS,
} TracentEntropyKind;

typedef enum TracentPrefilter {
  TRACENT_PREFILTER_OFF = 0,
  TRACENT_PREFILTER_INTERSECT,
  TRACENT_PREFILTER_SUPERSET,
} TracentPrefilter;

/**
 * Result codes. `Ok` is zero; every library error has its own code.
 */
typedef enum TracentStatus {
  TRACENT_STATUS_OK = 0,
  TRACENT_STATUS_NULL_POINTER,
  TRACENT_STATUS_INVALID_UTF8,
  TRACENT_STATUS_MALFORMED_LINE,
  TRACENT_STATUS_UNBALANCED_EXIT,
  TRACENT_STATUS_EMPTY_TRACE,
  TRACENT_STATUS_TRACE_TOO_SHORT,
  TRACENT_STATUS_INVALID_CONFIG,
  TRACENT_STATUS_NON_FINITE,
  TRACENT_STATUS_GRID_MISMATCH,
  TRACENT_STATUS_UNSORTED_INPUT,
  TRACENT_STATUS_EMPTY_CORPUS,
  TRACENT_STATUS_DUPLICATE_TRACE_ID,
  TRACENT_STATUS_FORMAT_VERSION_MISMATCH,
  TRACENT_STATUS_CORRUPT_INDEX,
  TRACENT_STATUS_RAW_TRACES_UNAVAILABLE,
  TRACENT_STATUS_TOO_FEW_TRACES,
  TRACENT_STATUS_SPEC_NOT_IN_GRID,
  TRACENT_STATUS_IO,
  TRACENT_STATUS_CSV,
  TRACENT_STATUS_PANIC,
} TracentStatus;

/**
 * A corpus index.
 */
typedef struct TracentIndex TracentIndex;

/**
 * Ranked classes returned by [`tracent_index_query`].
 */
typedef struct TracentRanking TracentRanking;

/**
 * A parsed trace.
 */
typedef struct TracentTrace TracentTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none). Valid
 * until the next failing call on the same thread.
 */
const char *tracent_last_error(void);

/**
 * Library version, static string.
 */
const char *tracent_version(void);

/**
 * Parses trace text (one `<function> <entry|exit>` record per line).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TracentStatus tracent_trace_parse(const char *text, bool lenient, struct TracentTrace **out);

/**
 * Sets the id under which the trace is stored by [`tracent_index_ingest`].
 *
 * # Safety
 * `trace` must come from [`tracent_trace_parse`]; `id` NUL-terminated.
 */
enum TracentStatus tracent_trace_set_id(struct TracentTrace *trace, const char *id);

/**
 * Number of records, 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or come from [`tracent_trace_parse`].
 */
size_t tracent_trace_len(const struct TracentTrace *trace);

/**
 * # Safety
 * `trace` must be null or come from [`tracent_trace_parse`], and not be
 * used afterwards.
 */
void tracent_trace_free(struct TracentTrace *trace);

/**
 * Fingerprint of `trace` for a spec written `E,q,l,c` (e.g. `L,1e-5,3,FTD`).
 *
 * # Safety
 * Pointers must be valid; `spec` NUL-terminated.
 */
enum TracentStatus tracent_fingerprint(const struct TracentTrace *trace,
                                       const char *spec,
                                       double *out);

/**
 * Entropy (bits) of a probability vector of length `n`. `q` is ignored for
 * Shannon.
 *
 * # Safety
 * `probs` must point to `n` doubles; `out` must be valid.
 */
enum TracentStatus tracent_entropy(const double *probs,
                                   size_t n,
                                   enum TracentEntropyKind kind,
                                   double q,
                                   double *out);

/**
 * Empty index over the default 504-spec grid, or over the single spec
 * `spec` when it is not null.
 *
 * # Safety
 * `spec` must be null or NUL-terminated; `out` valid.
 */
enum TracentStatus tracent_index_new(const char *spec, bool retain_raw, struct TracentIndex **out);

/**
 * # Safety
 * `path` NUL-terminated; `out` valid.
 */
enum TracentStatus tracent_index_load(const char *path, struct TracentIndex **out);

/**
 * # Safety
 * `index` from this library; `path` NUL-terminated.
 */
enum TracentStatus tracent_index_save(const struct TracentIndex *index, const char *path);

/**
 * Fingerprints `trace` into `index` under `class_id`. The trace keeps its
 * id if one was set, otherwise the index assigns one.
 *
 * # Safety
 * Handles from this library; `class_id` NUL-terminated.
 */
enum TracentStatus tracent_index_ingest(struct TracentIndex *index,
                                        const struct TracentTrace *trace,
                                        const char *class_id);

/**
 * Number of stored traces, 0 for a null handle.
 *
 * # Safety
 * `index` null or from this library.
 */
size_t tracent_index_len(const struct TracentIndex *index);

/**
 * # Safety
 * `index` null or from this library, not used afterwards.
 */
void tracent_index_free(struct TracentIndex *index);

/**
 * Classes ranked at most `top` for `trace`. With `spec` null the whole
 * grid is compared under the `w`-norm; otherwise only that spec.
 *
 * # Safety
 * Handles from this library; `spec` null or NUL-terminated; `out` valid.
 */
enum TracentStatus tracent_index_query(const struct TracentIndex *index,
                                       const struct TracentTrace *trace,
                                       const char *spec,
                                       double w,
                                       enum TracentPrefilter prefilter,
                                       size_t top,
                                       struct TracentRanking **out);

/**
 * # Safety
 * `ranking` null or from [`tracent_index_query`].
 */
size_t tracent_ranking_len(const struct TracentRanking *ranking);

/**
 * Row `i` of a ranking. The string pointers live as long as the ranking.
 *
 * # Safety
 * `ranking` from [`tracent_index_query`]; out pointers valid or null
 * (null outputs are skipped).
 */
enum TracentStatus tracent_ranking_get(const struct TracentRanking *ranking,
                                       size_t i,
                                       const char **class_id,
                                       size_t *rank,
                                       const char **nearest_trace_id,
                                       double *distance);

/**
 * # Safety
 * `ranking` null or from [`tracent_index_query`], not used afterwards.
 */
void tracent_ranking_free(struct TracentRanking *ranking);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRACENT_H */
