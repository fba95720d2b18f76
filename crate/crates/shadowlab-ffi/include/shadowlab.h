#ifndef SHADOWLAB_H
#define SHADOWLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every shadowlab function.
typedef enum {
  SHADOWLAB_OK = 0,
  SHADOWLAB_ERR_NULL_ARGUMENT = 1,
  SHADOWLAB_ERR_UTF8 = 2,
  SHADOWLAB_ERR_PARSE = 3,
  SHADOWLAB_ERR_INVALID = 4,
  SHADOWLAB_ERR_RESOURCE = 5,
} shadowlab_status;

// An exact metric on the shift space (opaque).
typedef struct shadowlab_metric shadowlab_metric;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent error on this thread. The pointer is
// valid until the next shadowlab call on the same thread; do not free it.
const char *shadowlab_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `text` must have been returned by a shadowlab function and not freed yet.
void shadowlab_string_free(char *text);

// Creates a metric from a spec: "prod", "rate:dyadic", "rate:harmonic",
// "otw:block", or "otw:bad". On success `*out` owns the handle; release it
// with `shadowlab_metric_free`.
//
// # Safety
// `spec` must be NUL-terminated; `out` must be a valid pointer.
shadowlab_status shadowlab_metric_new(const char *spec, shadowlab_metric **out);

// Releases a metric handle.
//
// # Safety
// `metric` must be a handle from `shadowlab_metric_new`, not freed yet.
void shadowlab_metric_free(shadowlab_metric *metric);

// Exact distance between two point literals. On success, `*is_infinite_rank`
// is 1 with `*rank` = 0 for equal points, otherwise 0 with `*rank` the
// distance rank; `*value` receives the exact rational value as a string.
//
// # Safety
// All pointers must be valid; `x` and `y` NUL-terminated.
shadowlab_status shadowlab_distance(const shadowlab_metric *metric,
                                    const char *x,
                                    const char *y,
                                    int *is_infinite_rank,
                                    uint64_t *rank,
                                    char **value);

// Runs the full counterexample pipeline (build, certify, verify,
// cross-check) for the given exact L and delta0 literals and returns the
// result as a JSON document in `*out_json`. `*accepted` is 1 iff the
// certificate was verified and every sampled candidate exceeded L * delta.
//
// # Safety
// All pointers must be valid; `l` and `delta0` NUL-terminated.
shadowlab_status shadowlab_counterexample(const char *l,
                                          const char *delta0,
                                          int *accepted,
                                          char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHADOWLAB_H */
