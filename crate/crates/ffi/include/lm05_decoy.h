#ifndef LM05_DECOY_H
#define LM05_DECOY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Lm05RateModel {
  LM05_RATE_MODEL_WEAK_VACUUM = 0,
  LM05_RATE_MODEL_INFINITE_DECOY = 1,
  LM05_RATE_MODEL_INFINITE_DECOY_OPTIMAL_MU = 2,
} Lm05RateModel;

typedef enum Lm05Status {
  LM05_STATUS_OK = 0,
  LM05_STATUS_NULL_POINTER = 1,
  LM05_STATUS_INVALID_ARGUMENT = 2,
  LM05_STATUS_COMPUTATION = 3,
  LM05_STATUS_INSECURE = 4,
  LM05_STATUS_INSUFFICIENT_DATA = 5,
  LM05_STATUS_PANIC = 6,
} Lm05Status;

/**
 * Device parameters plus signal/decoy intensities.
 */
typedef struct Lm05Analyzer Lm05Analyzer;

/**
 * Tallies of one Monte Carlo run.
 */
typedef struct Lm05Simulation Lm05Simulation;

/**
 * One row of observed gains and error rates.
 */
typedef struct Lm05Stats {
  double q_mu;
  double e_mu;
  double q_nu;
  double e_nu;
  double y0;
} Lm05Stats;

typedef struct Lm05Bounds {
  double y1_l;
  double y12_l;
  double q12_l;
  double eps12_u;
  double r_l;
  bool clamped;
  bool insecure;
} Lm05Bounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *lm05_last_error_message(void);

/**
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum Lm05Status lm05_binary_entropy(double e, double *out);

/**
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum Lm05Status lm05_tau(double e1, double *out);

/**
 * Creates an analyzer. `*out` receives the handle on success.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum Lm05Status lm05_analyzer_new(double eta_bob,
                                  double e_detector,
                                  double y0,
                                  double e0,
                                  double f_ec,
                                  double mu,
                                  double nu,
                                  struct Lm05Analyzer **out);

/**
 * # Safety
 * `analyzer` must be NULL or a handle from [`lm05_analyzer_new`] not yet freed.
 */
void lm05_analyzer_free(struct Lm05Analyzer *analyzer);

/**
 * Decoy bounds for one measured row.
 *
 * # Safety
 * Pointers must be NULL or valid; `analyzer` must be a live handle.
 */
enum Lm05Status lm05_analyze(const struct Lm05Analyzer *analyzer,
                             const struct Lm05Stats *stats,
                             struct Lm05Bounds *out);

/**
 * Forward-model statistics at `loss_db`, with the weak+vacuum rate bound
 * and the infinite-decoy rate at the analyzer's signal intensity.
 * `r_l` and `r_inf` may be NULL.
 *
 * # Safety
 * Pointers must be NULL or valid; `analyzer` must be a live handle.
 */
enum Lm05Status lm05_predict(const struct Lm05Analyzer *analyzer,
                             double loss_db,
                             struct Lm05Stats *stats,
                             double *r_l,
                             double *r_inf);

/**
 * Largest loss in dB (0.01 dB grid) with a positive key rate.
 *
 * # Safety
 * Pointers must be NULL or valid; `analyzer` must be a live handle.
 */
enum Lm05Status lm05_max_secure_loss(const struct Lm05Analyzer *analyzer,
                                     enum Lm05RateModel model,
                                     double *out);

/**
 * Runs the Monte Carlo with the default 2:1:1 class mix and control-mode
 * probability one half. Results depend only on the arguments, not on
 * `workers`.
 *
 * # Safety
 * Pointers must be NULL or valid; `analyzer` must be a live handle.
 */
enum Lm05Status lm05_simulate(const struct Lm05Analyzer *analyzer,
                              double loss_db,
                              uint64_t pulses,
                              uint64_t seed,
                              uint32_t workers,
                              struct Lm05Simulation **out);

/**
 * # Safety
 * `sim` must be NULL or a handle from [`lm05_simulate`] not yet freed.
 */
void lm05_simulation_free(struct Lm05Simulation *sim);

/**
 * Ratio estimates of the run's gains and error rates.
 *
 * # Safety
 * Pointers must be NULL or valid; `sim` must be a live handle.
 */
enum Lm05Status lm05_simulation_estimate(const struct Lm05Simulation *sim, struct Lm05Stats *out);

/**
 * Ground-truth one- and two-photon gain and error rate of the signal class.
 *
 * # Safety
 * Pointers must be NULL or valid; `sim` must be a live handle.
 */
enum Lm05Status lm05_simulation_true_q12(const struct Lm05Simulation *sim,
                                         double *q12,
                                         double *e12);

/**
 * Tallies as a JSON document. Release with [`lm05_string_free`].
 * Returns NULL for a NULL handle.
 *
 * # Safety
 * `sim` must be NULL or a live handle.
 */
char *lm05_simulation_tallies_json(const struct Lm05Simulation *sim);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void lm05_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LM05_DECOY_H */
