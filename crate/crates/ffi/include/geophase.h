#ifndef GEOPHASE_H
#define GEOPHASE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum GpStatus {
  GP_STATUS_OK = 0,
  GP_STATUS_INVALID_ARGUMENT = 1,
  GP_STATUS_NUMERICAL = 2,
  GP_STATUS_IO = 3,
  GP_STATUS_NULL_POINTER = 4,
  GP_STATUS_BUFFER_TOO_SMALL = 5,
  GP_STATUS_PANIC = 6,
} GpStatus;

// Opaque handle to an evolved trajectory.
typedef struct GpTrajectory GpTrajectory;

typedef struct GpComplex {
  double re;
  double im;
} GpComplex;

// Rotating-frame solution of the precessing field.
typedef struct GpRotatingFrame {
  double theta_bar;
  double delta_theta;
  double omega0;
  double a_plus;
  double a_minus;
  double d;
  double e;
  double g;
} GpRotatingFrame;

// Amplitudes assembled from a trajectory at one time.
typedef struct GpAmplitudes {
  struct GpComplex s;
  struct GpComplex i;
  struct GpComplex p_minus;
  struct GpComplex t_minus;
  struct GpComplex p_plus;
  struct GpComplex t_plus;
  double rho;
  double a;
} GpAmplitudes;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length excluding the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t gp_last_error_message(char *buf, uintptr_t len);

// Closed-form persistence factor `S(tau)` of the precessing field.
//
// # Safety
// `out` must be null or point to a writable `GpComplex`.
enum GpStatus gp_exact_s(double x, double theta, double tau, struct GpComplex *out);

// # Safety
// `out` must be null or point to a writable `GpRotatingFrame`.
enum GpStatus gp_rotating_frame(double x, double theta, struct GpRotatingFrame *out);

// Evolve the precessing field from `tau = 0` to `t_end`. On success `*out`
// owns a handle that must be released with [`gp_trajectory_free`].
//
// # Safety
// `out` must be null or point to a writable handle pointer.
enum GpStatus gp_trajectory_evolve(double x,
                                   double theta,
                                   double t_end,
                                   double tol,
                                   struct GpTrajectory **out);

// Amplitudes at `t` within the trajectory's range.
//
// # Safety
// `traj` must be null or a live handle from [`gp_trajectory_evolve`];
// `out` must be null or point to a writable `GpAmplitudes`.
enum GpStatus gp_trajectory_amplitudes(const struct GpTrajectory *traj,
                                       double t,
                                       struct GpAmplitudes *out);

// Final time of the trajectory, or NaN for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
double gp_trajectory_t_end(const struct GpTrajectory *traj);

// Number of accepted integrator steps, or 0 for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
uintptr_t gp_trajectory_steps(const struct GpTrajectory *traj);

// Release a trajectory handle; null is ignored.
//
// # Safety
// `traj` must be null or a live handle that is not used afterwards.
void gp_trajectory_free(struct GpTrajectory *traj);

// Phase curves on `grid` points of `[0, x_f]`. Each output array must hold
// `grid` doubles; any of them may be null to skip that column.
//
// # Safety
// Every non-null output pointer must point to `grid` writable doubles.
enum GpStatus gp_phase_curve(double theta,
                             double x_f,
                             double s,
                             uintptr_t grid,
                             double tol,
                             double *xs,
                             double *rho_exact,
                             double *rho_first_iter,
                             double *rho_berry,
                             double *epsilon);

// Run the validation suite and write its JSON report into `buf`
// (NUL-terminated). `*needed` receives the report length excluding the NUL;
// when it does not fit, nothing is written and `GP_STATUS_BUFFER_TOO_SMALL`
// is returned. `*all_pass` tells whether every check passed.
//
// # Safety
// `buf` must be null or point to `len` writable bytes; `needed` and
// `all_pass` must be null or writable.
enum GpStatus gp_validate_json(double tol,
                               char *buf,
                               uintptr_t len,
                               uintptr_t *needed,
                               bool *all_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOPHASE_H */
