#ifndef PADIC_SSSI_H
#define PADIC_SSSI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum PssiStatus {
  PSSI_STATUS_OK = 0,
  PSSI_STATUS_NULL_POINTER = 1,
  PSSI_STATUS_INVALID_PARAMETER = 2,
  PSSI_STATUS_INVALID_LAW = 3,
  PSSI_STATUS_RESOURCE_CAP = 4,
  PSSI_STATUS_BUFFER_TOO_SMALL = 5,
  PSSI_STATUS_PANIC = 6,
} PssiStatus;

/*
 Increment law selector for [`pssi_process_new`].
 */
typedef enum PssiLaw {
  /*
   `param` is the standard deviation.
   */
  PSSI_LAW_GAUSSIAN = 0,
  /*
   `param` is the tail exponent alpha.
   */
  PSSI_LAW_PARETO = 1,
  /*
   `param` is ignored.
   */
  PSSI_LAW_RADEMACHER = 2,
} PssiLaw;

/*
 Opaque simulated process.
 */
typedef struct PssiProcess PssiProcess;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version, a static NUL-terminated string.
 */
const char *pssi_version(void);

/*
 Message for the last failed call on this thread, or NULL. Valid until the
 next call into this library from the same thread.
 */
const char *pssi_last_error(void);

/*
 p-adic valuation of `n` (fails for `n = 0` or a non-prime `p`).

 # Safety
 `out` must be a valid pointer to a `uint32_t`.
 */
enum PssiStatus pssi_valuation(uint64_t p, uint64_t n, uint32_t *out);

/*
 Creates a process handle.

 # Safety
 `out` must be a valid pointer; on success it receives a handle that must be
 released with [`pssi_process_free`].
 */
enum PssiStatus pssi_process_new(uint64_t p,
                                 double hurst,
                                 size_t kmax,
                                 enum PssiLaw law,
                                 double param,
                                 uint64_t seed,
                                 size_t dim,
                                 struct PssiProcess **out);

/*
 Releases a handle. NULL is ignored.

 # Safety
 `process` must come from [`pssi_process_new`] and not be used afterwards.
 */
void pssi_process_free(struct PssiProcess *process);

/*
 Dimension of the process index set.

 # Safety
 `process` must be a live handle or NULL (returns 0).
 */
size_t pssi_process_dim(const struct PssiProcess *process);

/*
 Writes `X_0, …, X_{horizon−1}` into `out` (one-dimensional processes).

 # Safety
 `process` must be a live handle and `out` must hold `out_len` doubles.
 */
enum PssiStatus pssi_process_path(const struct PssiProcess *process,
                                  size_t horizon,
                                  double *out,
                                  size_t out_len);

/*
 `X_b − X_a` for lattice points `a`, `b` with `dim` coordinates each.

 # Safety
 `process` must be a live handle, `a` and `b` must hold `dim` values, and
 `out` must be valid.
 */
enum PssiStatus pssi_process_increment(const struct PssiProcess *process,
                                       const uint64_t *a,
                                       const uint64_t *b,
                                       size_t dim,
                                       double *out);

/*
 Finite-horizon p-adic modulus `ω̂(K)` of a sequence.

 # Safety
 `values` must hold `len` doubles and `out` must be valid.
 */
enum PssiStatus pssi_padic_modulus(const double *values,
                                   size_t len,
                                   uint64_t p,
                                   uint32_t k,
                                   double *out);

/*
 Bohr translation numbers `τ ≤ tau_max` at `epsilon`: the count accepted and
 the largest gap between consecutive accepted values.

 # Safety
 `values` must hold `len` doubles; `accepted` and `max_gap` must be valid.
 */
enum PssiStatus pssi_bohr_translations(const double *values,
                                       size_t len,
                                       double epsilon,
                                       size_t tau_max,
                                       size_t *accepted,
                                       size_t *max_gap);

/*
 Weyl and Besicovitch headline values of the translate difference
 `f(n + tau) − f(n)` over the dyadic window grid.

 # Safety
 `values` must hold `len` doubles; `weyl` and `besicovitch` must be valid.
 */
enum PssiStatus pssi_seminorm_headlines(const double *values,
                                        size_t len,
                                        size_t tau,
                                        double q,
                                        double *weyl,
                                        double *besicovitch);

/*
 Two-sample Kolmogorov-Smirnov statistic.

 # Safety
 `xs` and `ys` must hold `m` and `n` doubles; `out` must be valid.
 */
enum PssiStatus pssi_ks_statistic(const double *xs,
                                  size_t m,
                                  const double *ys,
                                  size_t n,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PADIC_SSSI_H */
