#ifndef AUGMATCH_H
#define AUGMATCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum AugmStatus {
  AUGM_STATUS_OK = 0,
  AUGM_STATUS_INVALID_INPUT = 1,
  AUGM_STATUS_PARSE = 2,
  AUGM_STATUS_INFEASIBLE = 3,
  AUGM_STATUS_SOLVER = 4,
  AUGM_STATUS_IO = 5,
  AUGM_STATUS_NULL_POINTER = 6,
  AUGM_STATUS_PANIC = 7,
} AugmStatus;

/*
 Opaque instance handle.
 */
typedef struct AugmInstance AugmInstance;

/*
 Opaque result of one algorithm run.
 */
typedef struct AugmRun AugmRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next call on the same thread.
 */
const char *augm_last_error(void);

/*
 Parses an instance from its text format.
 */
enum AugmStatus augm_instance_parse(const char *text, struct AugmInstance **out);

/*
 Generates a preset instance (`instance1` .. `instance4`, `lognormal`).
 */
enum AugmStatus augm_instance_generate(const char *preset,
                                       uint64_t seed,
                                       struct AugmInstance **out);

/*
 Releases an instance; NULL is ignored.
 */
void augm_instance_free(struct AugmInstance *instance);

/*
 1 for bounded allocation, 2 for ad-auctions.
 */
enum AugmStatus augm_instance_kind(const struct AugmInstance *instance, uint32_t *out);

enum AugmStatus augm_instance_size(const struct AugmInstance *instance,
                                   size_t *buyers,
                                   size_t *items);

/*
 Writes the instance text into `buf` (NUL-terminated). `needed` receives
 the full length including the terminator; with a short or NULL buffer
 nothing is written and the call still succeeds.
 */
enum AugmStatus augm_instance_format(const struct AugmInstance *instance,
                                     char *buf,
                                     size_t cap,
                                     size_t *needed);

/*
 Optimal value of the offline fractional problem.
 */
enum AugmStatus augm_fractional_opt(const struct AugmInstance *instance, double *value);

/*
 `C(d)` of the bounded-allocation potential.
 */
enum AugmStatus augm_capacity_constant(size_t d, double *value);

/*
 Runs the bounded-allocation algorithm. `prediction` holds one buyer per
 item (0 = none) or is NULL with `len == 0`. A negative `eta` runs pure
 water-filling instead.
 */
enum AugmStatus augm_run_bounded(const struct AugmInstance *instance,
                                 const uint32_t *prediction,
                                 size_t len,
                                 double eta,
                                 struct AugmRun **out);

/*
 Runs the ad-auction algorithm with the instance's realized `R_max`.
 Bounded instances are converted to auctions first.
 */
enum AugmStatus augm_run_auction(const struct AugmInstance *instance,
                                 const uint32_t *prediction,
                                 size_t len,
                                 double eta,
                                 struct AugmRun **out);

/*
 Releases a run; NULL is ignored.
 */
void augm_run_free(struct AugmRun *run);

enum AugmStatus augm_run_revenue(const struct AugmRun *run, double *value);

enum AugmStatus augm_run_dual_objective(const struct AugmRun *run, double *value);

/*
 1 when every feasibility and certificate audit passed, else 0.
 */
enum AugmStatus augm_run_audits_passed(const struct AugmRun *run, uint32_t *passed);

/*
 Fraction of `item` given to `buyer`.
 */
enum AugmStatus augm_run_fraction(const struct AugmRun *run,
                                  size_t item,
                                  size_t buyer,
                                  double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUGMATCH_H */
