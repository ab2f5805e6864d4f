#ifndef GEO_MAPF_H
#define GEO_MAPF_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GmStatus {
  GM_STATUS_OK = 0,
  GM_STATUS_NULL_ARGUMENT = 1,
  GM_STATUS_INVALID_ARGUMENT = 2,
  GM_STATUS_IO = 3,
  GM_STATUS_PARSE = 4,
  GM_STATUS_GENERATE = 5,
  GM_STATUS_TIMEOUT = 6,
  GM_STATUS_NO_SOLUTION = 7,
  GM_STATUS_HEURISTIC = 8,
  GM_STATUS_OUT_OF_RANGE = 9,
  GM_STATUS_BUFFER_TOO_SMALL = 10,
  GM_STATUS_PANIC = 11,
} GmStatus;

typedef enum GmWorld {
  GM_WORLD_MAZE = 0,
  GM_WORLD_BOX = 1,
} GmWorld;

/**
 * Opaque instance handle.
 */
typedef struct GmInstance GmInstance;

/**
 * Opaque solution handle.
 */
typedef struct GmSolution GmSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gm_version(void);

/**
 * Message left by the last failed call on this thread, or an empty string.
 * Valid until the next call into the library on the same thread.
 */
const char *gm_last_error_message(void);

/**
 * Reads an instance file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GmStatus gm_instance_read(const char *path, struct GmInstance **out);

/**
 * Writes an instance file.
 *
 * # Safety
 * `inst` must be a live handle and `path` a NUL-terminated string.
 */
enum GmStatus gm_instance_write(const struct GmInstance *inst, const char *path);

/**
 * Generates an instance. `size` is the box count for box worlds and the
 * cells per side for mazes.
 *
 * # Safety
 * `out` must be writable.
 */
enum GmStatus gm_instance_generate(enum GmWorld world,
                                   size_t size,
                                   size_t vertices,
                                   size_t k,
                                   size_t agents,
                                   double radius,
                                   uint64_t seed,
                                   struct GmInstance **out);

/**
 * Number of agents, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t gm_instance_num_agents(const struct GmInstance *inst);

/**
 * Number of roadmap vertices, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t gm_instance_num_vertices(const struct GmInstance *inst);

/**
 * # Safety
 * `inst` must be null or a handle not yet freed.
 */
void gm_instance_free(struct GmInstance *inst);

/**
 * Optimal CBS. `timeout_s <= 0` means no limit.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum GmStatus gm_solve_cbs(const struct GmInstance *inst,
                           double timeout_s,
                           struct GmSolution **out);

/**
 * Focal CBS ordered by conflict count. `w` may be `INFINITY`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum GmStatus gm_solve_focal(const struct GmInstance *inst,
                             double w,
                             double timeout_s,
                             struct GmSolution **out);

/**
 * Focal CBS ordered by depth, then φ from the evaluator at `endpoint`
 * (`host:port`, `unix:/path` or `exec:command`).
 *
 * # Safety
 * `inst` must be a live handle, `endpoint` a NUL-terminated string and
 * `out` writable.
 */
enum GmStatus gm_solve_focal_phi(const struct GmInstance *inst,
                                 double w,
                                 double timeout_s,
                                 const char *endpoint,
                                 struct GmSolution **out);

/**
 * # Safety
 * `sol` must be null or a live handle.
 */
uint64_t gm_solution_flowtime(const struct GmSolution *sol);

/**
 * # Safety
 * `sol` must be null or a live handle.
 */
uint64_t gm_solution_expansions(const struct GmSolution *sol);

/**
 * # Safety
 * `sol` must be null or a live handle.
 */
uint64_t gm_solution_generated(const struct GmSolution *sol);

/**
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t gm_solution_num_agents(const struct GmSolution *sol);

/**
 * Number of vertices in `agent`'s path, or 0 if out of range.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t gm_solution_path_len(const struct GmSolution *sol, size_t agent);

/**
 * Copies `agent`'s path into `buf` (capacity `cap`). `written` receives
 * the path length even when the buffer is too small.
 *
 * # Safety
 * `sol` must be a live handle, `buf` valid for `cap` writes, `written`
 * writable.
 */
enum GmStatus gm_solution_path(const struct GmSolution *sol,
                               size_t agent,
                               uint64_t *buf,
                               size_t cap,
                               size_t *written);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void gm_solution_free(struct GmSolution *sol);

/**
 * Re-checks `sol` against `inst`; `violations` receives the count. The
 * first violation, if any, becomes the last error message.
 *
 * # Safety
 * Both handles must be live; `violations` writable.
 */
enum GmStatus gm_validate(const struct GmInstance *inst,
                          const struct GmSolution *sol,
                          size_t *violations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEO_MAPF_H */
