#ifndef KURAMOTO_H
#define KURAMOTO_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum KuraStatus {
  KURA_STATUS_OK = 0,
  KURA_STATUS_NULL_POINTER = 1,
  KURA_STATUS_INVALID_ARGUMENT = 2,
  KURA_STATUS_PARSE = 3,
  KURA_STATUS_INVALID_GRAPH = 4,
  KURA_STATUS_LENGTH_MISMATCH = 5,
  KURA_STATUS_NOT_EQUILIBRIUM = 6,
  KURA_STATUS_NUMERICAL = 7,
  KURA_STATUS_UNSUPPORTED = 8,
  KURA_STATUS_BUFFER_TOO_SMALL = 9,
  KURA_STATUS_PANIC = 10,
} KuraStatus;

/**
 * Integration direction for `kura_integrate`.
 */
typedef enum KuraDirection {
  KURA_DIRECTION_FORWARD = 0,
  KURA_DIRECTION_REVERSED = 1,
} KuraDirection;

/**
 * Opaque graph handle.
 */
typedef struct KuraGraph KuraGraph;

/**
 * Spectrum summary filled by `kura_spectrum`.
 */
typedef struct KuraSpectrum {
  size_t zero_count;
  size_t positive_count;
  size_t negative_count;
  /**
   * Largest eigenvalue outside the zero band; NaN if there is none.
   */
  double largest_nonzero;
} KuraSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *kura_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *kura_last_error_message(void);

/**
 * Builds a graph from a family string such as `"eye:2"` or `"complete:4"`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KuraStatus kura_graph_from_family(const char *spec, struct KuraGraph **out);

/**
 * Builds a graph from edge-list text: the vertex count on the first line,
 * then one `u v` pair per line.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KuraStatus kura_graph_from_edge_list(const char *text, struct KuraGraph **out);

/**
 * Releases a graph. NULL is ignored.
 *
 * # Safety
 * `g` must come from `kura_graph_from_*` and not be used afterwards.
 */
void kura_graph_free(struct KuraGraph *g);

/**
 * Number of vertices, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t kura_graph_vertex_count(const struct KuraGraph *g);

/**
 * Number of edges, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t kura_graph_edge_count(const struct KuraGraph *g);

/**
 * Writes the vector field at `phases` into `out` (`out_len >= n`).
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum KuraStatus kura_rhs(const struct KuraGraph *g,
                         const double *phases,
                         size_t len,
                         double *out,
                         size_t out_len);

/**
 * Energy at `phases`.
 *
 * # Safety
 * Pointers must be valid; `phases` must hold `len` values.
 */
enum KuraStatus kura_energy(const struct KuraGraph *g,
                            const double *phases,
                            size_t len,
                            double *out);

/**
 * Jacobian eigenvalues at `phases`, ascending, into `eigenvalues`
 * (`eig_len >= n`). `zero_tol` is relative to the spectral radius; pass 0
 * for the default. `summary` may be NULL.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum KuraStatus kura_spectrum(const struct KuraGraph *g,
                              const double *phases,
                              size_t len,
                              double zero_tol,
                              double *eigenvalues,
                              size_t eig_len,
                              struct KuraSpectrum *summary);

/**
 * Integrates from `phases` with fixed-step RK4 and writes the final state
 * into `out` (`out_len >= n`). `final_time` may be NULL.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum KuraStatus kura_integrate(const struct KuraGraph *g,
                               const double *phases,
                               size_t len,
                               enum KuraDirection direction,
                               double dt,
                               double t_end,
                               double *out,
                               size_t out_len,
                               double *final_time);

/**
 * Probes the heteroclinic digraph of a graph built from a family with a
 * known component catalog and returns it as DOT text in `*out`.
 *
 * # Safety
 * `g` must be a live handle and `out` a valid pointer. Release the string
 * with `kura_string_free`.
 */
enum KuraStatus kura_probe_dot(const struct KuraGraph *g, uint64_t seed, size_t trials, char **out);

/**
 * Releases a string returned by the library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void kura_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KURAMOTO_H */
