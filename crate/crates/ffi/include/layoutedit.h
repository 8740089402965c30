#ifndef LAYOUTEDIT_H
#define LAYOUTEDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
enum LeStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  LE_STATUS_OK = 0,
  LE_STATUS_NULL_POINTER = 1,
  LE_STATUS_INVALID_UTF8 = 2,
  LE_STATUS_PARSE_ERROR = 3,
  LE_STATUS_VALIDATION_ERROR = 4,
  LE_STATUS_UNKNOWN_TARGET = 5,
  LE_STATUS_GRAMMAR_ERROR = 6,
  LE_STATUS_GRAPH_ERROR = 7,
  LE_STATUS_SOLVER_ERROR = 8,
  LE_STATUS_PANIC = 99,
};
#ifndef __cplusplus
typedef int32_t LeStatus;
#endif // __cplusplus

/**
 * Opaque design handle.
 */
typedef struct LeDesign LeDesign;

/**
 * Opaque relation graph handle.
 */
typedef struct LeGraph LeGraph;

/**
 * Center-based element geometry.
 */
typedef struct LeGeometry {
  double x;
  double y;
  double width;
  double height;
} LeGeometry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call on the same thread.
 */
const char *le_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *le_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void le_string_free(char *s);

/**
 * Parse a design document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
LeStatus le_design_parse(const char *json, struct LeDesign **out);

/**
 * # Safety
 * `d` must be NULL or a handle from this library, not yet freed.
 */
void le_design_free(struct LeDesign *d);

/**
 * Canonical design document.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
LeStatus le_design_to_json(const struct LeDesign *d, char **out);

/**
 * The `ELEMENT CONTENT: [...]` line.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
LeStatus le_design_content_sequence(const struct LeDesign *d, char **out);

/**
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
LeStatus le_design_element_count(const struct LeDesign *d, size_t *out);

/**
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
LeStatus le_design_element_geometry(const struct LeDesign *d, size_t id, struct LeGeometry *out);

/**
 * Build the relation graph with size tolerance `alpha`; `seed` fixes edge
 * directions.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
LeStatus le_graph_build(const struct LeDesign *d,
                        double alpha,
                        uint64_t seed,
                        struct LeGraph **out);

/**
 * New graph without the edges incident to element `target`.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
LeStatus le_graph_remove_node(const struct LeGraph *g, size_t target, struct LeGraph **out);

/**
 * The `SIZE RELATIONSHIP` and `POSITION RELATIONSHIP` lines.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
LeStatus le_graph_serialize(const struct LeGraph *g, char **out);

/**
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
LeStatus le_graph_edge_count(const struct LeGraph *g, size_t *out);

/**
 * # Safety
 * `g` must be NULL or a handle from this library, not yet freed.
 */
void le_graph_free(struct LeGraph *g);

/**
 * Parse an operation string and print it in canonical form.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
LeStatus le_operation_canonicalize(const char *text, char **out);

/**
 * Apply `op` to `d` with the repair solver, keeping the relations of `g`
 * (a graph pruned at the target, ids as in `d` with any added element in
 * place). `added_json` is the element document for an add, else NULL.
 *
 * # Safety
 * Handles must be live; strings NUL-terminated; `out` writable.
 */
LeStatus le_edit_solve(const struct LeDesign *d,
                       const struct LeGraph *g,
                       const char *op,
                       const char *added_json,
                       uint64_t seed,
                       struct LeDesign **out);

/**
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
LeStatus le_metrics_overlap(const struct LeDesign *d, double *out);

/**
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
LeStatus le_metrics_alignment(const struct LeDesign *d, double *out);

/**
 * Share of size and position edges of `g` still holding in `d`. A kind
 * with no edges reports NaN.
 *
 * # Safety
 * Handles must be live; outputs writable.
 */
LeStatus le_relation_satisfaction(const struct LeGraph *g,
                                  const struct LeDesign *d,
                                  double alpha,
                                  double *size_rel,
                                  double *pos_rel);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAYOUTEDIT_H */
