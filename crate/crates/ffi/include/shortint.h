#ifndef SHORTINT_H
#define SHORTINT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes; 1 to 6 match the CLI exit codes.
 */
typedef enum ShortintStatus {
  SHORTINT_STATUS_OK = 0,
  SHORTINT_STATUS_INVALID_INPUT = 1,
  SHORTINT_STATUS_BUDGET = 2,
  SHORTINT_STATUS_RANGE_MISMATCH = 3,
  SHORTINT_STATUS_VERIFICATION = 4,
  SHORTINT_STATUS_IO = 5,
  SHORTINT_STATUS_PARSE = 6,
  SHORTINT_STATUS_NULL_POINTER = 7,
  SHORTINT_STATUS_PANIC = 8,
} ShortintStatus;

/**
 * A hyperbola partition.
 */
typedef struct ShortintPartition ShortintPartition;

/**
 * Function values on `(X, X+H]`.
 */
typedef struct ShortintSlab ShortintSlab;

/**
 * An affine-linear system of forms.
 */
typedef struct ShortintSystem ShortintSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on this thread.
 */
const char *shortint_last_error(void);

/**
 * Library version as a static string.
 */
const char *shortint_version(void);

/**
 * Sieves the function named by `kind` (e.g. `"mu"`, `"lambda_vm"`, `"d_3"`) on `(x, x+h]`.
 *
 * # Safety
 * `kind` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ShortintStatus shortint_slab_sieve(uint64_t x,
                                        uint64_t h,
                                        const char *kind,
                                        struct ShortintSlab **out_slab);

/**
 * Wraps `h` caller-supplied values as the slab of `n = x+1, ..., x+h`.
 *
 * # Safety
 * `values` must point to `h` doubles.
 */
enum ShortintStatus shortint_slab_from_values(uint64_t x,
                                              uint64_t h,
                                              const double *values,
                                              struct ShortintSlab **out_slab);

/**
 * # Safety
 * `slab` must come from this library and not be used afterwards.
 */
void shortint_slab_free(struct ShortintSlab *slab);

/**
 * Number of values `H`; 0 for a null handle.
 *
 * # Safety
 * `slab` must be null or a live handle.
 */
uint64_t shortint_slab_len(const struct ShortintSlab *slab);

/**
 * Copies up to `cap` values into `buf`.
 *
 * # Safety
 * `buf` must have room for `cap` doubles.
 */
enum ShortintStatus shortint_slab_values(const struct ShortintSlab *slab, double *buf, size_t cap);

/**
 * `sum f(n)` over the slab.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ShortintStatus shortint_slab_sum(const struct ShortintSlab *slab, double *sum);

/**
 * `sum f(n) e(alpha n)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ShortintStatus shortint_exp_sum_linear(const struct ShortintSlab *slab,
                                            double alpha,
                                            double *re,
                                            double *im);

/**
 * Normalized Gowers `U^s` norm of the slab (1 for the constant function).
 *
 * # Safety
 * Pointers must be valid.
 */
enum ShortintStatus shortint_gowers_norm(const struct ShortintSlab *slab,
                                         uint32_t s,
                                         double *normalized);

/**
 * Partitions `{(m, n): m in (j_lo, j_hi], x < mn <= x + h}` into progressions.
 *
 * # Safety
 * `out_partition` must be a valid pointer.
 */
enum ShortintStatus shortint_partition_new(uint64_t x,
                                           uint64_t h,
                                           uint64_t m,
                                           uint64_t j_lo,
                                           uint64_t j_hi,
                                           uint64_t q,
                                           struct ShortintPartition **out_partition);

/**
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void shortint_partition_free(struct ShortintPartition *p);

/**
 * Number of progressions and of covered points.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ShortintStatus shortint_partition_counts(const struct ShortintPartition *p,
                                              uint64_t *progressions,
                                              uint64_t *points);

/**
 * Runs the verifier; `Ok` with `*pass` set either way, message on failure.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ShortintStatus shortint_partition_verify(const struct ShortintPartition *p, bool *pass);

/**
 * Writes one JSON progression per line.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum ShortintStatus shortint_partition_write_jsonl(const struct ShortintPartition *p,
                                                   const char *path);

/**
 * Classifies `alphas[0..k]` at `theta`. Bit `i` of `labels` is set when the
 * `i`-th condition holds, in the order I, I2maj, I2, IImaj, IImin.
 *
 * # Safety
 * `alphas` must point to `k` doubles.
 */
enum ShortintStatus shortint_classify(const double *alphas,
                                      size_t k,
                                      double theta,
                                      uint32_t *labels);

/**
 * Parses a system from JSON `{"d":..,"t":..,"forms":[{"dot":[..],"const":..}]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string.
 */
enum ShortintStatus shortint_system_from_json(const char *json, struct ShortintSystem **out_system);

/**
 * The one-variable system `n + shifts[i]`.
 *
 * # Safety
 * `shifts` must point to `len` integers.
 */
enum ShortintStatus shortint_system_shifts(const int64_t *shifts,
                                           size_t len,
                                           struct ShortintSystem **out_system);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void shortint_system_free(struct ShortintSystem *s);

/**
 * The local factor `beta_p` as an exact fraction `num/den`, plus its double value.
 * Fails with `Budget` when the fraction does not fit in 64 bits.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ShortintStatus shortint_local_factor(const struct ShortintSystem *s,
                                          uint64_t p,
                                          int64_t *num,
                                          int64_t *den,
                                          double *value);

/**
 * Weighted prime count in the box `prod (box_x[j], box_x[j] + box_h[j]]` and the
 * prediction `beta_inf * prod_{p <= p_max} beta_p`.
 *
 * # Safety
 * `box_x` and `box_h` must point to `d` values, where `d` is the system's dimension.
 */
enum ShortintStatus shortint_prime_solutions(const struct ShortintSystem *s,
                                             const int64_t *box_x,
                                             const uint64_t *box_h,
                                             size_t d,
                                             uint64_t p_max,
                                             double *count,
                                             double *prediction);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHORTINT_H */
