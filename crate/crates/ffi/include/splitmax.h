#ifndef SPLITMAX_H
#define SPLITMAX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

enum SmStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_POINTER = 1,
  SM_STATUS_INVALID_ARGUMENT = 2,
  SM_STATUS_CONFIG = 3,
  SM_STATUS_NUMERICAL = 4,
  SM_STATUS_BUFFER_TOO_SMALL = 5,
  SM_STATUS_FINISHED = 6,
  SM_STATUS_PANIC = 7,
  SM_STATUS_INTERNAL = 8,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SmStatus SmStatus;
#else
typedef int32_t SmStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque simulation handle.
 */
typedef struct SmSim SmSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulation of sample `sample_id` from configuration text.
 *
 * An empty string selects the default configuration.
 */
SmStatus sm_sim_new(const char *config_toml, uint64_t sample_id, struct SmSim **out);

/**
 * Releases a handle; null is ignored.
 */
void sm_sim_free(struct SmSim *sim);

/**
 * Advances `count` steps; stops with `Finished` at the horizon.
 */
SmStatus sm_sim_step(struct SmSim *sim, uint32_t count);

SmStatus sm_sim_time(const struct SmSim *sim, double *out);

/**
 * Steps taken and steps available.
 */
SmStatus sm_sim_progress(const struct SmSim *sim, uint64_t *taken, uint64_t *total);

/**
 * Discrete energy `‖Z‖²` of the current state.
 */
SmStatus sm_sim_energy(const struct SmSim *sim, double *out);

/**
 * Number of doubles in the state: six components on every node.
 */
SmStatus sm_sim_state_len(const struct SmSim *sim, uintptr_t *out);

/**
 * Copies the state, component-major `E1 E2 E3 H1 H2 H3`, into `buf`.
 */
SmStatus sm_sim_copy_state(const struct SmSim *sim, double *buf, uintptr_t len);

/**
 * `Tr(Q)` of the truncated covariance with `modes` modes per axis.
 */
SmStatus sm_trace_q(double decay_r, uint32_t modes, double *out);

/**
 * Runs the structure audit on the unit cube with `intervals` per axis and
 * reports the number of checks and of failed checks.
 */
SmStatus sm_audit(uint32_t intervals, uint32_t *checks, uint32_t *failures);

/**
 * Copies the calling thread's last error message, NUL-terminated, into `buf`
 * and returns its length without the terminator; 0 when there is none.
 *
 * With a null or short buffer nothing is written and the required length is
 * still returned.
 */
uintptr_t sm_last_error_message(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITMAX_H */
