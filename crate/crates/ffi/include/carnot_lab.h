#ifndef CARNOT_LAB_H
#define CARNOT_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CarnotStatus {
  CARNOT_STATUS_OK = 0,
  CARNOT_STATUS_NULL_POINTER = 1,
  CARNOT_STATUS_INVALID_INPUT = 2,
  CARNOT_STATUS_SOLVER_FAILURE = 3,
  CARNOT_STATUS_BUFFER_TOO_SMALL = 4,
  CARNOT_STATUS_PANIC = 5,
} CarnotStatus;

typedef enum CarnotGeneralClass {
  CARNOT_GENERAL_CLASS_LINE = 0,
  CARNOT_GENERAL_CLASS_REGULAR_BOUNDED = 1,
  CARNOT_GENERAL_CLASS_REGULAR_UNBOUNDED = 2,
  CARNOT_GENERAL_CLASS_HOMOCLINIC = 3,
  CARNOT_GENERAL_CLASS_HETEROCLINIC_DIRECT = 4,
  CARNOT_GENERAL_CLASS_HETEROCLINIC_TURNBACK = 5,
  CARNOT_GENERAL_CLASS_UNDETERMINED = 6,
} CarnotGeneralClass;

typedef enum CarnotSpecificClass {
  CARNOT_SPECIFIC_CLASS_NONE = 0,
  CARNOT_SPECIFIC_CLASS_SMALL_OSCILLATION = 1,
  CARNOT_SPECIFIC_CLASS_R_PERIODIC = 2,
  CARNOT_SPECIFIC_CLASS_R_HOMOCLINIC = 3,
  CARNOT_SPECIFIC_CLASS_PERIODIC = 4,
  CARNOT_SPECIFIC_CLASS_HOMOCLINIC = 5,
  CARNOT_SPECIFIC_CLASS_GENERIC = 6,
} CarnotSpecificClass;

/**
 * Magnetic geodesic sampled on a time window.
 */
typedef struct CarnotGeodesic CarnotGeodesic;

/**
 * Reduced Hamiltonian system of a model, momentum and pencil.
 */
typedef struct CarnotSystem CarnotSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *carnot_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t carnot_last_error(char *buf, size_t len);

/**
 * Builds the reduced system of `model` (`"eng"`, `"n631"`, `"g357"`) with
 * rank `n` (0 for the fixed-rank models), momentum `mu[0..mu_len]` and
 * pencil `G = a + bF`.
 *
 * # Safety
 * `model` must be a NUL-terminated string, `mu` must point to `mu_len`
 * doubles and `out` must be writable.
 */
enum CarnotStatus carnot_system_new(const char *model,
                                    uint32_t n,
                                    const double *mu,
                                    size_t mu_len,
                                    double a,
                                    double b,
                                    struct CarnotSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from [`carnot_system_new`] not yet freed.
 */
void carnot_system_free(struct CarnotSystem *sys);

/**
 * Rank `n` of the horizontal `x` block; reduced states have `2n` entries.
 *
 * # Safety
 * `sys` must be a live handle and `out` writable.
 */
enum CarnotStatus carnot_system_rank(const struct CarnotSystem *sys, size_t *out);

/**
 * `H = |p|^2/2 + G(x)^2/2` at the reduced state `state[0..len]`.
 *
 * # Safety
 * `sys` must be a live handle, `state` must point to `len` doubles and
 * `out` must be writable.
 */
enum CarnotStatus carnot_system_hamiltonian(const struct CarnotSystem *sys,
                                            const double *state,
                                            size_t len,
                                            double *out);

/**
 * Labels the geodesic from the on-shell state `state[0..len]`.
 *
 * # Safety
 * `sys` must be a live handle, `state` must point to `len` doubles and
 * both outputs must be writable.
 */
enum CarnotStatus carnot_classify(const struct CarnotSystem *sys,
                                  const double *state,
                                  size_t len,
                                  enum CarnotGeneralClass *general,
                                  enum CarnotSpecificClass *specific);

/**
 * Integrates from the on-shell state `state[0..len]` at `t = 0` over `[t0, t1]` and lifts to
 * the magnetic space with `(y, z) = 0` at `t = 0` (or at `t0` when the
 * window excludes 0).
 *
 * # Safety
 * `sys` must be a live handle, `state` must point to `len` doubles and
 * `out` must be writable.
 */
enum CarnotStatus carnot_geodesic_new(const struct CarnotSystem *sys,
                                      const double *state,
                                      size_t len,
                                      double t0,
                                      double t1,
                                      double tol,
                                      struct CarnotGeodesic **out);

/**
 * # Safety
 * `geo` must be null or a handle from [`carnot_geodesic_new`] not yet freed.
 */
void carnot_geodesic_free(struct CarnotGeodesic *geo);

/**
 * Writes the point `(x_1, ..., x_n, y, z)` at time `t` into `buf`, which
 * must hold `n + 2` doubles.
 *
 * # Safety
 * `geo` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum CarnotStatus carnot_geodesic_point(const struct CarnotGeodesic *geo,
                                        double t,
                                        double *buf,
                                        size_t len);

/**
 * Period-map values `(Theta_1, Theta_2)` of the homoclinic class of
 * `F = G = 1 - beta r^2`; divergent values are reported as infinity.
 *
 * # Safety
 * Both outputs must be writable.
 */
enum CarnotStatus carnot_period_theta(double beta, double *theta1, double *theta2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARNOT_LAB_H */
