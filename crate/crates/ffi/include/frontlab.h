/* C interface to the frontlab numerical laboratory. */

#ifndef FRONTLAB_H
#define FRONTLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code for every ABI call.
 */
typedef enum FlStatus {
  FL_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  FL_STATUS_NULL_POINTER = 1,
  /*
   Arguments outside the model's domain (radii ordering, signs, ranges).
   */
  FL_STATUS_INVALID_ARGUMENT = 2,
  /*
   The request crossed the critical threshold the theory forbids.
   */
  FL_STATUS_THRESHOLD = 3,
  /*
   The request is self-consistent but cannot be satisfied (e.g. target
   mass below the tail mass).
   */
  FL_STATUS_INFEASIBLE = 4,
  /*
   The solver failed or exhausted its step budget.
   */
  FL_STATUS_NUMERICAL = 5,
  /*
   A panic was caught at the language boundary.
   */
  FL_STATUS_PANIC = 6,
} FlStatus;

/*
 Tail side selector for coefficient mapping.
 */
typedef enum FlTailDirection {
  FL_TAIL_DIRECTION_SHRINK = 0,
  FL_TAIL_DIRECTION_EXPAND = 1,
} FlTailDirection;

/*
 Opaque simulation handle: one regularized run on a uniform grid.
 */
typedef struct FlSim FlSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *fl_version(void);

/*
 Static human-readable name for a status code.
 */
const char *fl_status_name(enum FlStatus status);

/*
 Critical density-tail coefficient for a borderline-exponent tail ending
 at radius `r1`, at the mean density implied by `total_mass`.

 # Safety
 `out` must be a valid pointer to a double.
 */
enum FlStatus fl_critical_tail_coefficient(uint32_t n,
                                           double r_domain,
                                           double m,
                                           double total_mass,
                                           double r1,
                                           double *out);

/*
 Critical mass-accumulation coefficient at radius `r1`.

 # Safety
 `out` must be a valid pointer to a double.
 */
enum FlStatus fl_critical_mass_coefficient(uint32_t n,
                                           double r_domain,
                                           double m,
                                           double total_mass,
                                           double r1,
                                           double *out);

/*
 Maps a borderline density-tail coefficient on (r0, r1) to the matching
 mass-accumulation bound coefficient.

 # Safety
 `out` must be a valid pointer to a double.
 */
enum FlStatus fl_tail_to_mass_coefficient(uint32_t n,
                                          double r_domain,
                                          double m,
                                          double a,
                                          double r0,
                                          double r1,
                                          enum FlTailDirection direction,
                                          double *out);

/*
 Builds a simulation from the plateau-ramp-tail profile family, with the
 plateau height calibrated so the profile carries `total_mass`. The handle
 must be released with [`fl_sim_free`].

 # Safety
 `out` must be a valid pointer to an `FlSim*` slot.
 */
enum FlStatus fl_sim_new(uint32_t n,
                         double r_domain,
                         double m,
                         double total_mass,
                         double r_plateau,
                         double r0,
                         double r1,
                         double alpha,
                         double a,
                         size_t grid_cells,
                         double eps,
                         double safety,
                         struct FlSim **out);

/*
 Advances the simulation to `t_target` (no-op if already past it), taking
 stability-limited explicit steps.

 # Safety
 `sim` must be a live handle from [`fl_sim_new`].
 */
enum FlStatus fl_sim_advance(struct FlSim *sim, double t_target);

/*
 Current simulation time.

 # Safety
 `sim` must be a live handle; `out` a valid double pointer.
 */
enum FlStatus fl_sim_time(const struct FlSim *sim, double *out);

/*
 Front position in the mass-accumulation variable: the first s whose
 saturation deficit is within `tau` of full.

 # Safety
 `sim` must be a live handle; `out` a valid double pointer.
 */
enum FlStatus fl_sim_front_position(const struct FlSim *sim, double tau, double *out);

/*
 Number of grid nodes, for sizing the buffers of [`fl_sim_copy_state`].

 # Safety
 `sim` must be a live handle; `out` a valid pointer.
 */
enum FlStatus fl_sim_num_nodes(const struct FlSim *sim, size_t *out);

/*
 Copies the grid nodes and the current mass-accumulation values into the
 caller's buffers. Either destination may be null to skip it.

 # Safety
 Non-null destinations must hold at least `len` doubles; `len` must equal
 the node count reported by [`fl_sim_num_nodes`].
 */
enum FlStatus fl_sim_copy_state(const struct FlSim *sim, double *s_out, double *w_out, size_t len);

/*
 Releases a handle. Null is accepted and ignored.

 # Safety
 `sim` must be null or a live handle from [`fl_sim_new`]; it must not be
 used afterwards.
 */
void fl_sim_free(struct FlSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRONTLAB_H */
