#ifndef BOOJUM_H
#define BOOJUM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BoojumStatus {
  BOOJUM_STATUS_OK = 0,
  BOOJUM_STATUS_INVALID_ARGUMENT = 1,
  BOOJUM_STATUS_NOT_CONVERGED = 2,
  BOOJUM_STATUS_NULL_POINTER = 3,
  BOOJUM_STATUS_PANIC = 4,
  BOOJUM_STATUS_IO = 5,
} BoojumStatus;

// Opaque finite-lambda construction, reusable across layer thicknesses.
typedef struct BoojumFin BoojumFin;

typedef struct BoojumDLambda {
  double value;
  double grad_norm;
  size_t iterations;
  bool converged;
} BoojumDLambda;

// Rescaled region energies of a recovery construction.
typedef struct BoojumRegionEnergies {
  double omega1;
  double omega2;
  double omega3;
  double omega4;
  double total;
  double lower_bound_ref;
  // NaN for the `lambda = inf` construction.
  double lipschitz_hat;
  double extension_lipschitz_scaled;
} BoojumRegionEnergies;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the next call.
const char *boojum_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *boojum_version(void);

// Closed-form `D_inf` for the director `(-sqrt(1 - v3^2), 0, v3)`.
//
// # Safety
// `out` must be NULL or point to writable memory for one `double`.
enum BoojumStatus boojum_d_inf_exact(double v3, double *out);

// Minimal transition energy of the uniaxial boundary tensor with director
// `(-sqrt(1 - v3^2), 0, v3)` on a grid of `n_nodes` nodes over `[0, t_max]`.
//
// # Safety
// `out` must be NULL or point to writable memory for one `BoojumDLambda`.
enum BoojumStatus boojum_d_lambda(double lambda,
                                  double v3,
                                  double t_max,
                                  size_t n_nodes,
                                  struct BoojumDLambda *out);

// Sphere integral of `D_lambda` for longitudinal boundary data. `exact` selects the closed-form
// density, which needs `lambda = INFINITY`.
//
// # Safety
// `out` must be NULL or point to writable memory for one `double`.
enum BoojumStatus boojum_sphere_longitudinal(double lambda, bool exact, double *out);

// `tr(Q*(alpha, beta)^3)` in the frame of a director with third component `v3`.
//
// # Safety
// `out` must be NULL or point to writable memory for one `double`.
enum BoojumStatus boojum_trace_t(double alpha, double beta, double v3, double *out);

// Region energies of the `lambda = inf` construction at layer thickness `eta`.
//
// # Safety
// `out` must be NULL or point to writable memory for one `BoojumRegionEnergies`.
enum BoojumStatus boojum_recovery_inf(double eta, struct BoojumRegionEnergies *out);

// Builds the finite-lambda construction for partition width `h`, mollifier width `eps` and
// field ratio `lambda`, with profiles on `n_nodes` nodes over `[0, t_max]`. Free the handle
// with [`boojum_fin_free`].
//
// # Safety
// `out` must be NULL or point to writable memory for one pointer.
enum BoojumStatus boojum_fin_new(double h,
                                 double eps,
                                 double lambda,
                                 double t_max,
                                 size_t n_nodes,
                                 struct BoojumFin **out);

// Releases a handle from [`boojum_fin_new`]. NULL is ignored.
//
// # Safety
// `fin` must be NULL or a handle not yet freed.
void boojum_fin_free(struct BoojumFin *fin);

// Region energies at layer thickness `eta` and bulk length `xi` (`INFINITY` allowed).
//
// # Safety
// `fin` must be NULL or a live handle; `out` must be NULL or writable.
enum BoojumStatus boojum_fin_report(const struct BoojumFin *fin,
                                    double eta,
                                    double xi,
                                    struct BoojumRegionEnergies *out);

// The full report as a JSON string; release it with [`boojum_string_free`].
//
// # Safety
// `fin` must be NULL or a live handle; `out` must be NULL or writable.
enum BoojumStatus boojum_fin_report_json(const struct BoojumFin *fin,
                                         double eta,
                                         double xi,
                                         char **out);

// Field value at `(r, phi)` for layer thickness `eta`, written as `Q11, Q12, Q13, Q22, Q23`.
//
// # Safety
// `fin` must be NULL or a live handle; `out` must be NULL or writable for five doubles.
enum BoojumStatus boojum_fin_tensor(const struct BoojumFin *fin,
                                    double eta,
                                    double r,
                                    double phi,
                                    double (*out)[5]);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a string from this library not yet freed.
void boojum_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOOJUM_H */
