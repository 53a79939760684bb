#ifndef BOXCTRL_BOXCTRL_H
#define BOXCTRL_BOXCTRL_H

/* C interface of libboxctrl.
 *
 * Complex arrays are interleaved (re, im) doubles; matrices are row-major,
 * so entry (r, c) of an n x n matrix sits at out[2 * (r * n + c)].
 * Every function returns a status code; on failure boxctrl_last_error()
 * describes the problem (per thread). */

#include <stdint.h>

#if defined(_WIN32)
#define BOXCTRL_API __declspec(dllexport)
#else
#define BOXCTRL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum boxctrl_status {
  BOXCTRL_OK = 0,
  BOXCTRL_ERR_INVALID_ARGUMENT = 1,
  BOXCTRL_ERR_WALL_COLLISION = 2,
  BOXCTRL_ERR_NO_IMPROVEMENT = 3,
  BOXCTRL_ERR_BUDGET_EXCEEDED = 4,
  BOXCTRL_ERR_UNSUPPORTED_MOTION = 5,
  BOXCTRL_ERR_INFEASIBLE_RAMP = 6,
  BOXCTRL_ERR_DEGENERATE_MATCHING = 7,
  BOXCTRL_ERR_NOT_FOUND = 8,
  BOXCTRL_ERR_INTERNAL = 99
} boxctrl_status;

BOXCTRL_API const char* boxctrl_version(void);
BOXCTRL_API const char* boxctrl_status_name(boxctrl_status status);
/* Message of the last failed call on this thread ("" if none). */
BOXCTRL_API const char* boxctrl_last_error(void);

/* ell(t) = ell0 + lambda f(t), d(t) = d0 + delta f(t), |fdot| < rate_bound. */
typedef struct boxctrl_motion {
  double lambda;
  double delta;
  double ell0;
  double d0;
  double rate_bound;
} boxctrl_motion;

BOXCTRL_API void boxctrl_motion_init(boxctrl_motion* motion);

/* ---- operators ---------------------------------------------------------- */

typedef enum boxctrl_operator {
  BOXCTRL_OP_LAPLACIAN = 0,
  BOXCTRL_OP_MOMENTUM = 1,
  BOXCTRL_OP_DILATION = 2,
  BOXCTRL_OP_INTERACTION = 3
} boxctrl_operator;

/* n x n complex matrix into out (2 n^2 doubles). motion is used only for
 * BOXCTRL_OP_INTERACTION and may be NULL otherwise. */
BOXCTRL_API boxctrl_status boxctrl_operator_matrix(boxctrl_operator kind,
                                                   const boxctrl_motion* motion, int n,
                                                   double* out);

/* Column j: coefficients on box dst of eigenfunction j of box src.
 * deficiency (n doubles, may be NULL) receives 1 - |column|^2. */
BOXCTRL_API boxctrl_status boxctrl_frame_map(double src_length, double src_center,
                                             double dst_length, double dst_center, int n,
                                             double* out, double* deficiency);

/* ---- propagation -------------------------------------------------------- */

/* Auxiliary propagator for the piecewise-constant speed v with `segments`
 * values and segments + 1 breakpoints. */
BOXCTRL_API boxctrl_status boxctrl_propagate_auxiliary(const boxctrl_motion* motion, int n,
                                                       const double* breakpoints,
                                                       const double* values, int segments,
                                                       double t_from, double t_to, double* out);

/* Transformed propagator for the piecewise-linear displacement
 * f(t) = offsets[k] + slopes[k] (t - breakpoints[k]). */
BOXCTRL_API boxctrl_status boxctrl_propagate_transformed(const boxctrl_motion* motion, int n,
                                                         const double* breakpoints,
                                                         const double* offsets,
                                                         const double* slopes, int segments,
                                                         double t_from, double t_to, double step,
                                                         double* out);

BOXCTRL_API boxctrl_status boxctrl_minus_norm(const double* psi, int n, double* out);
BOXCTRL_API boxctrl_status boxctrl_plus_norm(const double* psi, int n, double* out);

/* ---- transfer ----------------------------------------------------------- */

typedef struct boxctrl_transfer_config {
  int dim;
  double ell0, d0; /* initial box */
  double ell1, d1; /* target box */
  const double* initial; /* 2 dim doubles, coefficients on the initial box */
  const double* target;  /* 2 dim doubles, coefficients on the target box */
  double epsilon;
  double rate_bound;
  /* Escalation schedules; NULL (or length 0) keeps the defaults
   * {20, 40, 80} segments and horizons {2, 5, 10}. */
  const int* segment_schedule;
  int segment_schedule_len;
  const double* horizon_schedule;
  int horizon_schedule_len;
  int n_min;
  int n_max;
  int multistarts;
  int max_iterations;
  int threads;
  int step_fraction;
  uint64_t seed;
} boxctrl_transfer_config;

BOXCTRL_API void boxctrl_transfer_config_init(boxctrl_transfer_config* config);

typedef struct boxctrl_transfer_result boxctrl_transfer_result;

typedef struct boxctrl_transfer_summary {
  double achieved_error;
  double fidelity;
  double auxiliary_fidelity;
  double lifting_error;
  double duration;     /* end time T of the returned control */
  double horizon;      /* auxiliary horizon */
  double ramp_start;
  double coast_duration;
  double ramp_duration;
  double step;
  int n_refine;
  int segments;        /* auxiliary segments */
  int control_segments;
  double lambda;
  double delta;
  double final_length;
  double final_center;
  int starts_at_zero;
  int reaches_final_value;
  int within_f_limit;
  int rate_bounded;
  int no_collision;
} boxctrl_transfer_summary;

BOXCTRL_API boxctrl_status boxctrl_transfer_solve(const boxctrl_transfer_config* config,
                                                  boxctrl_transfer_result** result);
BOXCTRL_API void boxctrl_transfer_result_free(boxctrl_transfer_result* result);
BOXCTRL_API boxctrl_status boxctrl_transfer_result_summary(const boxctrl_transfer_result* result,
                                                           boxctrl_transfer_summary* summary);
/* control_segments + 1 breakpoints of f. */
BOXCTRL_API boxctrl_status boxctrl_transfer_result_breakpoints(
    const boxctrl_transfer_result* result, double* out);
/* Wall speed, displacement, length and center at time t. */
BOXCTRL_API boxctrl_status boxctrl_transfer_result_sample(const boxctrl_transfer_result* result,
                                                          double t, double* v, double* f,
                                                          double* ell, double* d);
/* Populations |c_j(t)|^2 of the evolved state at non-decreasing times:
 * out holds count * dim doubles, row per time. */
BOXCTRL_API boxctrl_status boxctrl_transfer_result_trajectory(
    const boxctrl_transfer_result* result, const double* times, int count, double* out);

/* ---- resonance ---------------------------------------------------------- */

typedef struct boxctrl_quadruple {
  int s1, s2, t1, t2;
} boxctrl_quadruple;

/* Writes up to capacity quadruples; *count receives the total found. */
BOXCTRL_API boxctrl_status boxctrl_resonances_at_zero(int n, int max_index,
                                                      boxctrl_quadruple* out, int capacity,
                                                      int* count);

typedef struct boxctrl_spectrum_options {
  int tracked;     /* 0: n / 2 */
  int tail_modes;  /* 0: no tail correction */
  double min_overlap_gap;
} boxctrl_spectrum_options;

BOXCTRL_API void boxctrl_spectrum_options_init(boxctrl_spectrum_options* options);

/* out holds grid_size * tracked doubles (row per grid point); tracked is
 * options->tracked or n / 2. options may be NULL. */
BOXCTRL_API boxctrl_status boxctrl_spectrum(const boxctrl_motion* motion, const double* eta,
                                            int grid_size, int n,
                                            const boxctrl_spectrum_options* options,
                                            double* out);

BOXCTRL_API boxctrl_status boxctrl_second_derivative_formula(const boxctrl_motion* motion, int j,
                                                             double* out);
BOXCTRL_API boxctrl_status boxctrl_finite_difference_curvature(
    const boxctrl_motion* motion, int j, int n, double h,
    const boxctrl_spectrum_options* options, double* out);

typedef struct boxctrl_certificate {
  int certified;
  int connected;
  int weak_link_count;
  int violation_count;
} boxctrl_certificate;

BOXCTRL_API boxctrl_status boxctrl_certify_chain(const boxctrl_motion* motion, double eta, int n,
                                                 int max_index, double tol,
                                                 const boxctrl_spectrum_options* options,
                                                 boxctrl_certificate* certificate,
                                                 boxctrl_quadruple* violations, int capacity);

/* BOXCTRL_ERR_NOT_FOUND when no grid point certifies. */
BOXCTRL_API boxctrl_status boxctrl_scan_nonresonant(const boxctrl_motion* motion, double eta_max,
                                                    int grid_size, int n, int max_index,
                                                    double tol,
                                                    const boxctrl_spectrum_options* options,
                                                    double* eta);

/* ---- stability ---------------------------------------------------------- */

typedef struct boxctrl_stability_constants {
  double M, mu, epsilon, b_eps, m, K, c, L, derivative_l1;
} boxctrl_stability_constants;

BOXCTRL_API boxctrl_status boxctrl_form_bounds(double epsilon, double* momentum_b,
                                               double* dilation_b);

/* Constants for the family made of the auxiliary system driven by v and
 * the lifts f_n for every n in n_list, over the whole horizon. */
BOXCTRL_API boxctrl_status boxctrl_stability_constants_for(
    const boxctrl_motion* motion, const double* breakpoints, const double* values, int segments,
    const int* n_list, int n_count, double epsilon, boxctrl_stability_constants* out);

typedef struct boxctrl_segment_bound {
  double t_from, t_to, lhs, rhs, L;
} boxctrl_segment_bound;

/* m_refine = 0 compares with the auxiliary system. Writes up to capacity
 * rows; *count receives the number of pieces. */
BOXCTRL_API boxctrl_status boxctrl_stability_bound(const boxctrl_motion* motion,
                                                   const double* breakpoints,
                                                   const double* values, int segments, int n,
                                                   int m_refine, const double* psi, int dim,
                                                   double epsilon, boxctrl_segment_bound* out,
                                                   int capacity, int* count);

BOXCTRL_API boxctrl_status boxctrl_lifting_gap_l1(const boxctrl_motion* motion,
                                                  const double* breakpoints, const double* values,
                                                  int segments, int n, double* out, int capacity,
                                                  int* count);

/* errors receives n_count doubles; step <= 0 selects the default. */
BOXCTRL_API boxctrl_status boxctrl_lifting_convergence(const boxctrl_motion* motion,
                                                       const double* breakpoints,
                                                       const double* values, int segments,
                                                       const double* psi, int dim,
                                                       const int* n_list, int n_count,
                                                       double step, double* errors,
                                                       double* slope);

#ifdef __cplusplus
}
#endif

#endif /* BOXCTRL_BOXCTRL_H */
