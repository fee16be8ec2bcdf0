#ifndef SEAMLESS_H
#define SEAMLESS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeamlessStatus {
  SEAMLESS_STATUS_OK = 0,
  SEAMLESS_STATUS_NULL_POINTER = 1,
  SEAMLESS_STATUS_INVALID_ARGUMENT = 2,
  SEAMLESS_STATUS_VALIDATION = 3,
  SEAMLESS_STATUS_CONFIG = 4,
  SEAMLESS_STATUS_SAMPLER = 5,
  SEAMLESS_STATUS_IO = 6,
  SEAMLESS_STATUS_PANIC = 7,
} SeamlessStatus;

typedef enum SeamlessDecision {
  SEAMLESS_DECISION_NON_INFERIOR = 0,
  SEAMLESS_DECISION_INCONCLUSIVE = 1,
  SEAMLESS_DECISION_COMPARATOR_SUPERIOR = 2,
} SeamlessDecision;

/**
 * Opaque trial design.
 */
typedef struct SeamlessDesign SeamlessDesign;

/**
 * Outcome of one simulated trial.
 */
typedef struct SeamlessTrialSummary {
  enum SeamlessDecision decision;
  size_t selected_arm;
  double y_stat;
  size_t simplex_violations;
} SeamlessTrialSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *seamless_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into the library on this thread.
 */
const char *seamless_last_error_message(void);

/**
 * Creates the reference three-arm design.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SeamlessStatus seamless_design_default(struct SeamlessDesign **out);

/**
 * Parses and validates a design from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SeamlessStatus seamless_design_from_json(const char *json, struct SeamlessDesign **out);

/**
 * Releases a design. Null is ignored.
 *
 * # Safety
 * `design` must come from this library and not be used afterwards.
 */
void seamless_design_free(struct SeamlessDesign *design);

/**
 * # Safety
 * `design` must be a live handle and `out` writable.
 */
enum SeamlessStatus seamless_design_num_arms(const struct SeamlessDesign *design, size_t *out);

/**
 * Exact interim update after `period` completed periods.
 *
 * `arm_counts` holds `n_arms` rows of `[under, adequate, over]`. The three
 * output arrays must each hold `n_arms` elements.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum SeamlessStatus seamless_interim_update(const struct SeamlessDesign *design,
                                            const uint32_t *arm_counts,
                                            size_t n_arms,
                                            double *raw_probs_out,
                                            double *probs_out,
                                            uint8_t *dropped_out);

/**
 * Three-outcome rule on a non-inferiority statistic.
 *
 * # Safety
 * `out` must be writable.
 */
enum SeamlessStatus seamless_decide(double y,
                                    double lambda1,
                                    double lambda2,
                                    enum SeamlessDecision *out);

/**
 * Shortest interval holding `mass` of the `n` draws.
 *
 * # Safety
 * `draws` must hold `n` values; `low` and `high` must be writable.
 */
enum SeamlessStatus seamless_hpd_interval(const double *draws,
                                          size_t n,
                                          double mass,
                                          double *low,
                                          double *high);

/**
 * Simulates replicate `replicate` of a scenario (JSON) under `seed`. The result
 * matches row `replicate` of the command-line `simulate` output for that seed.
 *
 * # Safety
 * `design` must be live, `scenario_json` NUL-terminated, `out` writable.
 */
enum SeamlessStatus seamless_simulate_trial(const struct SeamlessDesign *design,
                                            const char *scenario_json,
                                            uint64_t seed,
                                            uint64_t replicate,
                                            struct SeamlessTrialSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEAMLESS_H */
