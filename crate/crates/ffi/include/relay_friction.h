#ifndef RELAY_FRICTION_H
#define RELAY_FRICTION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Kinds of hybrid events.
 */
typedef enum RfEventKind {
  RF_EVENT_KIND_RELAY_SWITCH = 0,
  RF_EVENT_KIND_VELOCITY_REVERSAL = 1,
  RF_EVENT_KIND_STICK_ENTRY = 2,
  RF_EVENT_KIND_STICK_EXIT = 3,
  RF_EVENT_KIND_PRESLIDING_TO_SLIDING = 4,
  RF_EVENT_KIND_SLIDING_TO_PRESLIDING = 5,
} RfEventKind;

/**
 * Result codes.
 */
typedef enum RfStatus {
  RF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  RF_STATUS_NULL_POINTER = 1,
  /**
   * Invalid argument, configuration or unmet precondition.
   */
  RF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Integration, divergence or other numerical failure.
   */
  RF_STATUS_NUMERICAL = 3,
  /**
   * The analysis could not reach a conclusion.
   */
  RF_STATUS_INCONCLUSIVE = 4,
  /**
   * Index past the end of a sequence.
   */
  RF_STATUS_OUT_OF_RANGE = 5,
  /**
   * The requested value does not exist for this object.
   */
  RF_STATUS_NOT_AVAILABLE = 6,
  /**
   * Internal panic caught at the boundary.
   */
  RF_STATUS_PANIC = 7,
} RfStatus;

/**
 * Termination codes of a trajectory.
 */
typedef enum RfTermination {
  RF_TERMINATION_TIME_UP = 0,
  RF_TERMINATION_CONVERGED = 1,
  RF_TERMINATION_STUCK_OFF_ORIGIN = 2,
} RfTermination;

/**
 * Opaque simulation scenario.
 */
typedef struct RfScenario RfScenario;

/**
 * Opaque simulated trajectory.
 */
typedef struct RfTrajectory RfTrajectory;

/**
 * One stored trajectory sample.
 */
typedef struct RfSample {
  double t;
  double x1;
  double x2;
  double u;
  double f;
  double z;
} RfSample;

/**
 * One hybrid event, with the state just after the reset.
 */
typedef struct RfEvent {
  double t;
  enum RfEventKind kind;
  double x1;
  double x2;
  double friction_before;
  double friction_after;
} RfEvent;

/**
 * Harmonic balance prediction.
 */
typedef struct RfChatter {
  /**
   * Non-zero when a solution exists; `omega` and `a1` are NaN otherwise.
   */
  int32_t exists;
  double omega;
  double a1;
  double phase_residual_min;
} RfChatter;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *rf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rf_version(void);

/**
 * Create a scenario for the closed loop with discontinuous Coulomb
 * friction, started at `(x1, x2)` and integrated up to `t_end`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum RfStatus rf_scenario_new(double k,
                              double c,
                              double c_f,
                              double gamma,
                              double x1,
                              double x2,
                              double t_end,
                              struct RfScenario **out);

/**
 * Create a scenario from a registered preset name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RfStatus rf_scenario_from_preset(const char *name, struct RfScenario **out);

/**
 * Create a scenario from a TOML configuration document.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RfStatus rf_scenario_from_config(const char *config, struct RfScenario **out);

/**
 * Release a scenario. Null is ignored.
 *
 * # Safety
 * `sc` must be null or a handle from this library not freed before.
 */
void rf_scenario_free(struct RfScenario *sc);

/**
 * Switch to the presliding friction model with stiffness `s`.
 *
 * # Safety
 * `sc` must be a valid scenario handle.
 */
enum RfStatus rf_scenario_set_presliding(struct RfScenario *sc, double s);

/**
 * Add a first-order actuator lag with time constant `lag`.
 *
 * # Safety
 * `sc` must be a valid scenario handle.
 */
enum RfStatus rf_scenario_set_actuator_lag(struct RfScenario *sc, double lag);

/**
 * Set the step-size cap, s.
 *
 * # Safety
 * `sc` must be a valid scenario handle.
 */
enum RfStatus rf_scenario_set_dt_max(struct RfScenario *sc, double dt_max);

/**
 * Set the convergence radius; zero disables convergence termination.
 *
 * # Safety
 * `sc` must be a valid scenario handle.
 */
enum RfStatus rf_scenario_set_convergence_radius(struct RfScenario *sc, double radius);

/**
 * Integrate a scenario.
 *
 * # Safety
 * `sc` must be a valid scenario handle and `out` a valid pointer.
 */
enum RfStatus rf_integrate(const struct RfScenario *sc, struct RfTrajectory **out);

/**
 * Release a trajectory. Null is ignored.
 *
 * # Safety
 * `tr` must be null or a handle from this library not freed before.
 */
void rf_trajectory_free(struct RfTrajectory *tr);

/**
 * Number of stored samples.
 *
 * # Safety
 * `tr` must be a valid trajectory handle and `out` a valid pointer.
 */
enum RfStatus rf_trajectory_sample_count(const struct RfTrajectory *tr, size_t *out);

/**
 * Sample `index`.
 *
 * # Safety
 * `tr` must be a valid trajectory handle and `out` a valid pointer.
 */
enum RfStatus rf_trajectory_sample(const struct RfTrajectory *tr,
                                   size_t index,
                                   struct RfSample *out);

/**
 * Number of hybrid events.
 *
 * # Safety
 * `tr` must be a valid trajectory handle and `out` a valid pointer.
 */
enum RfStatus rf_trajectory_event_count(const struct RfTrajectory *tr, size_t *out);

/**
 * Event `index`.
 *
 * # Safety
 * `tr` must be a valid trajectory handle and `out` a valid pointer.
 */
enum RfStatus rf_trajectory_event(const struct RfTrajectory *tr, size_t index, struct RfEvent *out);

/**
 * How the run ended.
 *
 * # Safety
 * `tr` must be a valid trajectory handle and `out` a valid pointer.
 */
enum RfStatus rf_trajectory_termination(const struct RfTrajectory *tr, enum RfTermination *out);

/**
 * Time at which the convergence ball was reached; `NotAvailable` if the
 * run did not converge.
 *
 * # Safety
 * `tr` must be a valid trajectory handle and `out` a valid pointer.
 */
enum RfStatus rf_trajectory_convergence_time(const struct RfTrajectory *tr, double *out);

/**
 * Closed-form convergence-time bound for a start at rest at `|x1|`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RfStatus rf_axis_start_bound(double gamma, double c_f, double x1_abs, double *out);

/**
 * Convergence-time bound of the twisting loop with perturbation bound
 * `f_bound`, from `(x1, x2)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RfStatus rf_convergence_time_bound(double gamma,
                                        double c_f,
                                        double f_bound,
                                        double x1,
                                        double x2,
                                        double *out);

/**
 * Presliding branch curve on `[-1, 1]`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RfStatus rf_presliding_branch(double z, double *out);

/**
 * Harmonic balance for the loop `1/(s² + c·s + k)` with an optional
 * actuator lag (`lag <= 0` means none).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RfStatus rf_harmonic_balance(double k,
                                  double c,
                                  double lag,
                                  double gamma,
                                  double c_f,
                                  struct RfChatter *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAY_FRICTION_H */
