#ifndef KSNS_H
#define KSNS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum KsnsStatus {
  KSNS_STATUS_OK = 0,
  KSNS_STATUS_NULL_POINTER = 1,
  KSNS_STATUS_INVALID_ARGUMENT = 2,
  KSNS_STATUS_CONFIG = 3,
  KSNS_STATUS_MESH = 4,
  KSNS_STATUS_SOLVER = 5,
  KSNS_STATUS_IO = 6,
  KSNS_STATUS_BUFFER_TOO_SMALL = 7,
  KSNS_STATUS_PANIC = 8,
} KsnsStatus;

typedef enum KsnsRegime {
  KSNS_REGIME_BOUNDED = 0,
  KSNS_REGIME_BLOW_UP = 1,
  KSNS_REGIME_UNDECIDED = 2,
} KsnsRegime;

typedef enum KsnsStop {
  KSNS_STOP_FINAL_TIME = 0,
  KSNS_STOP_CEILING = 1,
  KSNS_STOP_STEP_FAILED = 2,
} KsnsStop;

/**
 * Opaque triangulation.
 */
typedef struct KsnsMesh KsnsMesh;

/**
 * Opaque time integrator for one scenario.
 */
typedef struct KsnsSimulation KsnsSimulation;

/**
 * One row of the diagnostics series.
 */
typedef struct KsnsRecord {
  uint64_t step;
  double time;
  double mass_n;
  double mass_c;
  double min_n;
  double max_n;
  double min_c;
  double max_c;
  double u_l2;
  double gradu_l2;
  double energy;
  uint32_t picard_iters;
  /**
   * Invariant bitmask; zero when every check passed.
   */
  uint32_t flags;
} KsnsRecord;

typedef struct KsnsRunSummary {
  uint64_t steps;
  double peak_n;
  enum KsnsRegime regime;
  enum KsnsStop stop;
} KsnsRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *ksns_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ksns_version(void);

/**
 * Generates a weakly acute triangulation of the disc of `radius` around
 * `(cx, cy)` with target edge length `h`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum KsnsStatus ksns_mesh_generate_disc(double cx,
                                        double cy,
                                        double radius,
                                        double h,
                                        struct KsnsMesh **out);

/**
 * Reads a mesh in the text format written by `ksns mesh gen`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum KsnsStatus ksns_mesh_read(const char *path, struct KsnsMesh **out);

/**
 * # Safety
 * `mesh` must be NULL or a live handle.
 */
size_t ksns_mesh_num_vertices(const struct KsnsMesh *mesh);

/**
 * # Safety
 * `mesh` must be NULL or a live handle.
 */
size_t ksns_mesh_num_triangles(const struct KsnsMesh *mesh);

/**
 * Writes whether every interior edge has opposite angles summing to at
 * most pi (and boundary edges at most pi/2).
 *
 * # Safety
 * `mesh` must be a live handle and `weakly_acute` writable.
 */
enum KsnsStatus ksns_mesh_check(const struct KsnsMesh *mesh, bool *weakly_acute);

/**
 * Copies interleaved vertex coordinates `x0 y0 x1 y1 ...` into `buf`.
 *
 * # Safety
 * `mesh` must be a live handle and `buf` must hold `len` doubles.
 */
enum KsnsStatus ksns_mesh_copy_vertices(const struct KsnsMesh *mesh, double *buf, size_t len);

/**
 * # Safety
 * `mesh` must be NULL or a handle not yet freed.
 */
void ksns_mesh_free(struct KsnsMesh *mesh);

/**
 * Builds a simulation from a named preset (`case350`, `case400`,
 * `case450`, `case450_refined`, `case450_phi50`). A positive `target_h` and
 * a nonnegative `final_time` override the preset values.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` writable.
 */
enum KsnsStatus ksns_simulation_from_preset(const char *name,
                                            double target_h,
                                            double final_time,
                                            struct KsnsSimulation **out);

/**
 * Builds a simulation from a preset on a caller-supplied mesh. The mesh
 * handle is borrowed and stays owned by the caller.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `mesh` a live handle and `out`
 * writable.
 */
enum KsnsStatus ksns_simulation_from_preset_on_mesh(const char *name,
                                                    const struct KsnsMesh *mesh,
                                                    double final_time,
                                                    struct KsnsSimulation **out);

/**
 * Builds a simulation from a `key = value` scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum KsnsStatus ksns_simulation_from_config(const char *path, struct KsnsSimulation **out);

/**
 * Replaces the state of `sim` with a checkpoint taken on the same mesh.
 *
 * # Safety
 * `sim` must be a live handle and `path` a NUL-terminated string.
 */
enum KsnsStatus ksns_simulation_load_checkpoint(struct KsnsSimulation *sim, const char *path);

/**
 * Advances one time step and writes its diagnostics record to `out`
 * (which may be NULL).
 *
 * # Safety
 * `sim` must be a live handle; `out` NULL or writable.
 */
enum KsnsStatus ksns_simulation_step(struct KsnsSimulation *sim, struct KsnsRecord *out);

/**
 * Integrates to the configured final time, the blow-up ceiling or a step
 * failure. A step failure is reported in the summary with status `Ok`, and
 * its message is left in [`ksns_last_error`].
 *
 * # Safety
 * `sim` must be a live handle; `out` NULL or writable.
 */
enum KsnsStatus ksns_simulation_run(struct KsnsSimulation *sim, struct KsnsRunSummary *out);

/**
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum KsnsStatus ksns_simulation_last_record(const struct KsnsSimulation *sim,
                                            struct KsnsRecord *out);

/**
 * Number of records in the series, including the initial one.
 *
 * # Safety
 * `sim` must be NULL or a live handle.
 */
size_t ksns_simulation_num_records(const struct KsnsSimulation *sim);

/**
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum KsnsStatus ksns_simulation_record(const struct KsnsSimulation *sim,
                                       size_t index,
                                       struct KsnsRecord *out);

/**
 * # Safety
 * `sim` must be NULL or a live handle.
 */
size_t ksns_simulation_num_vertices(const struct KsnsSimulation *sim);

/**
 * Copies the nodal cell density into `buf`.
 *
 * # Safety
 * `sim` must be a live handle and `buf` must hold `len` doubles.
 */
enum KsnsStatus ksns_simulation_copy_density(const struct KsnsSimulation *sim,
                                             double *buf,
                                             size_t len);

/**
 * Copies the nodal chemoattractant concentration into `buf`.
 *
 * # Safety
 * `sim` must be a live handle and `buf` must hold `len` doubles.
 */
enum KsnsStatus ksns_simulation_copy_concentration(const struct KsnsSimulation *sim,
                                                   double *buf,
                                                   size_t len);

/**
 * # Safety
 * `sim` must be a live handle and `path` a NUL-terminated string.
 */
enum KsnsStatus ksns_simulation_write_checkpoint(const struct KsnsSimulation *sim,
                                                 const char *path);

/**
 * Writes the current fields as a legacy VTK unstructured grid.
 *
 * # Safety
 * `sim` must be a live handle and `path` a NUL-terminated string.
 */
enum KsnsStatus ksns_simulation_write_vtk(const struct KsnsSimulation *sim, const char *path);

/**
 * # Safety
 * `sim` must be NULL or a handle not yet freed.
 */
void ksns_simulation_free(struct KsnsSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KSNS_H */
