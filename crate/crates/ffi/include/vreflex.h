#ifndef VREFLEX_H
#define VREFLEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  VR_STATUS_OK = 0,
  VR_STATUS_NULL_POINTER = 1,
  VR_STATUS_INVALID_UTF8 = 2,
  VR_STATUS_PARSE = 3,
  VR_STATUS_DOMAIN = 4,
  VR_STATUS_CONFIG = 5,
  VR_STATUS_SCENARIO = 6,
  VR_STATUS_TRACE = 7,
  VR_STATUS_IO = 8,
  VR_STATUS_PANIC = 9,
} VrStatus;

/**
 * A running engine instance.
 */
typedef struct VrEngine VrEngine;

/**
 * A parsed scenario.
 */
typedef struct VrScenario VrScenario;

/**
 * Live trainee input for one closed-loop tick. Fields whose `has_` flag is
 * false are taken from the scenario script.
 */
typedef struct {
  bool has_move;
  double trainee_move;
  bool has_calmness;
  double calmness;
} VrLiveInput;

/**
 * One trace row. `phase` is not included; see [`vr_engine_phase`].
 */
typedef struct {
  uint64_t tick;
  double distance;
  double pleasure;
  double arousal;
  double dominance;
  double sd_target;
  double c_sd;
  double torso_pitch_command;
  double deviation;
  double lean;
  double forward_velocity;
  bool blocked;
} VrTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *vr_last_error_message(void);

/**
 * Parses scenario text (UTF-8, NUL-terminated).
 *
 * # Safety
 * `text` must be a valid C string; `out` must be writable.
 */
VrStatus vr_scenario_parse(const char *text, VrScenario **out);

/**
 * # Safety
 * `scenario` must come from [`vr_scenario_parse`] and not be used again.
 */
void vr_scenario_free(VrScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
VrStatus vr_scenario_duration(const VrScenario *scenario, uint64_t *out);

/**
 * Creates an engine at tick 0. The scenario handle may be freed afterwards.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
VrStatus vr_engine_new(const VrScenario *scenario, VrEngine **out);

/**
 * # Safety
 * `engine` must come from [`vr_engine_new`] and not be used again.
 */
void vr_engine_free(VrEngine *engine);

/**
 * Advances one tick. `input` may be null to run the script alone.
 *
 * # Safety
 * `engine` must be a live handle; `input` null or readable; `out` writable.
 */
VrStatus vr_engine_tick(VrEngine *engine, const VrLiveInput *input, VrTraceRow *out);

/**
 * # Safety
 * `engine` must be a live handle.
 */
VrStatus vr_engine_reset(VrEngine *engine);

/**
 * Whether the engine has run its scenario's full duration.
 *
 * # Safety
 * `engine` must be a live handle; `out` must be writable.
 */
VrStatus vr_engine_is_finished(const VrEngine *engine, bool *out);

/**
 * Current scenario phase as a new string.
 *
 * # Safety
 * `engine` must be a live handle; `out` must be writable.
 */
VrStatus vr_engine_phase(const VrEngine *engine, char **out);

/**
 * Runs a scenario to completion and returns its trace as CSV.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
VrStatus vr_run_to_csv(const VrScenario *scenario, char **out);

/**
 * Compares two CSV traces; `out` receives the number of mismatching cells.
 *
 * # Safety
 * `got` and `want` must be valid C strings; `out` must be writable.
 */
VrStatus vr_compare_csv(const char *got, const char *want, double tol, size_t *out);

/**
 * # Safety
 * `s` must come from this library and not be used again.
 */
void vr_string_free(char *s);

/**
 * Stateless torso-pitch command for one sensor reading.
 *
 * # Safety
 * `out` must be writable.
 */
VrStatus vr_torso_pitch_command(double distance,
                                double pleasure,
                                double arousal,
                                double dominance,
                                double sd_default,
                                double cultural_distance,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VREFLEX_H */
