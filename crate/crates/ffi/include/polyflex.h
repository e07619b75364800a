#ifndef POLYFLEX_H
#define POLYFLEX_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Verdict codes for [`PfRigidity::verdict`].
 */
#define PF_VERDICT_NONE -1

#define PF_VERDICT_RIGID 0

#define PF_VERDICT_FLEXIBLE 1

typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_POINTER = 1,
  PF_STATUS_INVALID_ARGUMENT = 2,
  PF_STATUS_PARSE = 3,
  PF_STATUS_INFEASIBLE = 4,
  PF_STATUS_COMPUTATION = 5,
  PF_STATUS_PANIC = 6,
} PfStatus;

typedef enum PfGeometry {
  PF_GEOMETRY_E2 = 0,
  PF_GEOMETRY_S2 = 1,
  PF_GEOMETRY_H2 = 2,
  PF_GEOMETRY_DS2 = 3,
} PfGeometry;

typedef enum PfLocus {
  PF_LOCUS_CIRCLE = 0,
  PF_LOCUS_HOROCYCLE = 1,
  PF_LOCUS_EQUIDISTANT = 2,
} PfLocus;

/**
 * Opaque polygon handle.
 */
typedef struct PfPolygon PfPolygon;

/**
 * Opaque convex polyhedron handle.
 */
typedef struct PfPolyhedron PfPolyhedron;

typedef struct PfVerify {
  size_t quotient_dim;
  double gap_ratio;
  /**
   * Largest angle-sum residual over the kernel basis.
   */
  double angle_sum_residual;
  /**
   * 1 when the positivity check applied (convex, curved, quotient > 0).
   */
  int32_t positivity_checked;
  double min_positivity;
  int32_t pass;
} PfVerify;

typedef struct PfSolution {
  enum PfLocus locus;
  /**
   * Radius or distance of the locus, 0 for a horocycle.
   */
  double locus_size;
  double area;
  double solver_residual;
  double parameter;
} PfSolution;

typedef struct PfRigidity {
  size_t vertices;
  size_t edges;
  size_t faces;
  size_t flex_dim;
  size_t quotient_dim;
  double trivial_residual;
  double global_sum;
  int32_t verdict;
} PfRigidity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *pf_last_error(void);

/**
 * Library version as a static string.
 */
const char *pf_version(void);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must come from a `pf_*` function documented as returning an owned
 * string, or be null.
 */
void pf_string_free(char *s);

/**
 * Build a polygon from `n` vertices given as `3 * n` ambient coordinates.
 * Plane polygons use `z = 0`.
 *
 * # Safety
 * `coords` must point to `3 * n` doubles and `out` must be writable.
 */
enum PfStatus pf_polygon_new(enum PfGeometry geometry,
                             const double *coords,
                             size_t n,
                             struct PfPolygon **out);

/**
 * Parse a polygon from its JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum PfStatus pf_polygon_from_json(const char *json, struct PfPolygon **out);

/**
 * Serialize a polygon to JSON. Release the result with [`pf_string_free`].
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PfStatus pf_polygon_to_json(const struct PfPolygon *p, char **out);

/**
 * # Safety
 * `p` must be a handle from this library or null; it is invalid afterwards.
 */
void pf_polygon_free(struct PfPolygon *p);

/**
 * Number of vertices, 0 for a null handle.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t pf_polygon_vertex_count(const struct PfPolygon *p);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PfStatus pf_polygon_geometry(const struct PfPolygon *p, enum PfGeometry *out);

/**
 * Copy the `3 * n` ambient coordinates into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `p` must be a live handle and `buf` must hold `len` doubles.
 */
enum PfStatus pf_polygon_vertices(const struct PfPolygon *p, double *buf, size_t len);

/**
 * Area of a spherical or hyperbolic polygon; other models report
 * `InvalidArgument`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PfStatus pf_polygon_area(const struct PfPolygon *p, double *out);

/**
 * Compute the isometric deformation space, check the angle-sum identity on
 * its kernel basis and, for convex curved polygons, positivity of `b`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PfStatus pf_polygon_verify(const struct PfPolygon *p, struct PfVerify *out);

/**
 * Solve for the maximal-area polygon with the given edge lengths (S2 or H2).
 * `polygon_out` may be null when only the summary is wanted.
 *
 * # Safety
 * `lengths` must point to `n` doubles; `info` must be writable.
 */
enum PfStatus pf_solve_max_area(enum PfGeometry geometry,
                                const double *lengths,
                                size_t n,
                                struct PfSolution *info,
                                struct PfPolygon **polygon_out);

/**
 * Build a convex polyhedron from `nv` vertices (`3 * nv` doubles) and `nf`
 * faces. Face `f` uses `indices[offsets[f]..offsets[f + 1]]`, so `offsets`
 * holds `nf + 1` entries. Faces are oriented counterclockwise from outside.
 *
 * # Safety
 * All arrays must have the lengths described above; `out` must be writable.
 */
enum PfStatus pf_polyhedron_new(const double *coords,
                                size_t nv,
                                const size_t *offsets,
                                const size_t *indices,
                                size_t nf,
                                struct PfPolyhedron **out);

/**
 * Parse a polyhedron from JSON or OFF text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum PfStatus pf_polyhedron_from_text(const char *text, struct PfPolyhedron **out);

/**
 * # Safety
 * `p` must be a handle from this library or null; it is invalid afterwards.
 */
void pf_polyhedron_free(struct PfPolyhedron *p);

/**
 * Infinitesimal rigidity report. With `diagonals == 0` the face diagonal
 * constraints are dropped and the verdict is [`PF_VERDICT_NONE`].
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PfStatus pf_polyhedron_rigidity(const struct PfPolyhedron *p,
                                     int32_t diagonals,
                                     struct PfRigidity *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYFLEX_H */
