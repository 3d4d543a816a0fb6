#ifndef KPPLAB_H
#define KPPLAB_H

/* C interface to the kpplab core. Every function returns a kpp_status;
 * on failure kpp_last_error() describes the problem (per thread).
 * Handles are opaque and released with their *_free function; strings
 * returned through char** are released with kpp_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KPP_API __declspec(dllexport)
#else
#define KPP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kpp_status {
  KPP_OK = 0,
  KPP_E_INVALID_ARGUMENT = 1,
  KPP_E_OUT_OF_RANGE = 2,
  KPP_E_STABILITY = 3,
  KPP_E_FRONT_MARGIN = 4,
  KPP_E_NO_FRONT = 5,
  KPP_E_IO = 6,
  KPP_E_NUMERICAL = 7,
  KPP_E_INTERNAL = 8
} kpp_status;

typedef struct kpp_path kpp_path;
typedef struct kpp_noise kpp_noise;
typedef struct kpp_traj kpp_traj;
typedef struct kpp_bound kpp_bound;

KPP_API const char* kpp_version(void);
KPP_API const char* kpp_last_error(void);
KPP_API const char* kpp_status_name(kpp_status status);
KPP_API void kpp_string_free(char* s);

/* ---- coefficient paths ---- */

KPP_API kpp_status kpp_path_constant(double a, double t_lo, double t_hi, kpp_path** out);
KPP_API kpp_status kpp_path_periodic(double mean, double amplitude, double period, double t_lo,
                                     double t_hi, kpp_path** out);
KPP_API kpp_status kpp_path_section5(double t_lo, double t_hi, kpp_path** out);
KPP_API kpp_status kpp_path_tabulated(double t0, double step, const double* values, size_t n,
                                      kpp_path** out);
/* Tabulated Y(theta_t omega) on [t_lo, t_hi], one sample every `stride` noise steps.
 * t_trunc <= 0 selects the default truncation. */
KPP_API kpp_status kpp_path_equilibrium(const kpp_noise* noise, double t_lo, double t_hi,
                                        size_t stride, double t_trunc, kpp_path** out);
KPP_API kpp_status kpp_path_shifted(const kpp_path* path, double s, kpp_path** out);
KPP_API void kpp_path_free(kpp_path* path);

KPP_API kpp_status kpp_path_eval(const kpp_path* path, double t, double* out);
KPP_API kpp_status kpp_path_integral(const kpp_path* path, double s, double t, double* out);
KPP_API kpp_status kpp_path_kind(const kpp_path* path, const char** out);
KPP_API kpp_status kpp_windowed_mean(const kpp_path* path, double s, double t, double* out);
KPP_API kpp_status kpp_path_write_csv(const kpp_path* path, const char* file, double t0,
                                      double t1, double dt);

typedef struct kpp_mean_estimate {
  double r_min;
  double stride;
  double horizon_lo;
  double horizon_hi;
  double a_inf;
  double a_hat;
  double a_sup;
} kpp_mean_estimate;

KPP_API kpp_status kpp_estimate_means(const kpp_path* path, double r_min, double stride,
                                      double horizon_lo, double horizon_hi,
                                      kpp_mean_estimate* out);

/* ---- noise and equilibria ---- */

typedef struct kpp_noise_params {
  uint64_t seed;
  double kappa;
  double sigma;
  double xi_max;
  double step;
  double t_lo;
  double t_hi;
} kpp_noise_params;

KPP_API void kpp_noise_params_default(kpp_noise_params* params);
KPP_API kpp_status kpp_noise_generate(const kpp_noise_params* params, kpp_noise** out);
KPP_API void kpp_noise_free(kpp_noise* noise);
KPP_API kpp_status kpp_noise_eval(const kpp_noise* noise, double t, double* out);
KPP_API kpp_status kpp_noise_integral(const kpp_noise* noise, double s, double t, double* out);
KPP_API kpp_status kpp_noise_write_csv(const kpp_noise* noise, const char* file);

KPP_API kpp_status kpp_default_truncation(const kpp_noise* noise, double tol, double* out);
KPP_API kpp_status kpp_random_equilibrium(const kpp_noise* noise, double t, double t_trunc,
                                          double* y, double* error_bound);
KPP_API kpp_status kpp_real_noise_ode(double u0, const kpp_noise* noise, double t, double* out);
KPP_API kpp_status kpp_logistic(double u0, const kpp_path* path, double t, double* out);

/* ---- solver ---- */

typedef struct kpp_grid {
  double x_lo;
  double x_hi;
  double dx;
} kpp_grid;

typedef enum kpp_initial_kind {
  KPP_INIT_HEAVISIDE = 0,   /* p[0] = x0 */
  KPP_INIT_FRONT_LIKE = 1,  /* p = x0, width, plateau */
  KPP_INIT_BUMP = 2,        /* p = center, half_width, height */
  KPP_INIT_CONSTANT = 3,    /* p[0] = value */
  KPP_INIT_CAPPED_EXP = 4,  /* p = mu, x0 */
  KPP_INIT_OSCILLATING = 5, /* p = mid, amp, wavelength */
  KPP_INIT_SAMPLES = 6      /* samples[0..n_samples) on the grid nodes */
} kpp_initial_kind;

typedef struct kpp_initial {
  kpp_initial_kind kind;
  double p[3];
  const double* samples;
  size_t n_samples;
} kpp_initial;

typedef struct kpp_solve_config {
  double dt;
  int moving_frame;
  double mu;
  size_t store_stride;
  double margin;
  double margin_tol;
  int substep;
} kpp_solve_config;

KPP_API void kpp_solve_config_default(kpp_solve_config* config);
KPP_API kpp_status kpp_solve(const kpp_path* path, const kpp_grid* grid, const kpp_initial* initial,
                             double t_end, const kpp_solve_config* config, kpp_traj** out);
KPP_API void kpp_traj_free(kpp_traj* traj);
KPP_API kpp_status kpp_traj_frame_count(const kpp_traj* traj, size_t* out);
KPP_API kpp_status kpp_traj_grid(const kpp_traj* traj, double* x_lo, double* x_hi, size_t* n);
KPP_API kpp_status kpp_traj_time(const kpp_traj* traj, size_t frame, double* out);
/* Copies frame values into buf (capacity n, must equal the node count). */
KPP_API kpp_status kpp_traj_values(const kpp_traj* traj, size_t frame, double* buf, size_t n);
KPP_API kpp_status kpp_traj_write_csv(const kpp_traj* traj, const char* file);
KPP_API kpp_status kpp_traj_write_binary(const kpp_traj* traj, const char* file);
KPP_API kpp_status kpp_traj_read_binary(const char* file, kpp_traj** out);

/* ---- fronts ---- */

/* *found = 0 when the level is not crossed in that frame. */
KPP_API kpp_status kpp_front_position(const kpp_traj* traj, size_t frame, double level,
                                      double* x, int* found);
/* Fronts at levels 1/2 and 1/4; provenance may be NULL. */
KPP_API kpp_status kpp_traj_write_fronts(const kpp_traj* traj, const char* file,
                                         const char* provenance);

typedef struct kpp_speed {
  double speed;
  double std_error;
  double t_a;
  double t_b;
  double residual_norm;
  double endpoint_ratio;
  size_t samples;
} kpp_speed;

KPP_API kpp_status kpp_estimate_speed(const kpp_traj* traj, double level, double t_a, double t_b,
                                      kpp_speed* out);

typedef enum kpp_verdict {
  KPP_CONFIRMED = 0,
  KPP_INCONCLUSIVE = 1,
  KPP_VIOLATED = 2
} kpp_verdict;

/* Report as JSON in *json (may be NULL). */
KPP_API kpp_status kpp_takeover(const kpp_traj* traj, const kpp_mean_estimate* means, double h,
                                const double* t_checks, size_t n_checks, double eps_outer,
                                double eps_inner, kpp_verdict* verdict, char** json);

typedef struct kpp_probe_setup {
  kpp_grid grid;
  kpp_initial initial;
  int front_like; /* 0: compact data, rays |x| <= ct; 1: front-like, one-sided */
  kpp_solve_config config;
  double t_probe;
  double eps_spread;
  double eps_vanish;
  unsigned threads;
} kpp_probe_setup;

KPP_API void kpp_probe_setup_default(kpp_probe_setup* setup);
/* has_lo / has_hi report whether c_lo / c_hi exist on the grid. */
KPP_API kpp_status kpp_probe_interval(const kpp_path* path, const kpp_probe_setup* setup,
                                      const double* c_grid, size_t n_c, const double* shifts,
                                      size_t n_shifts, double* c_lo, int* has_lo, double* c_hi,
                                      int* has_hi, char** json);

typedef struct kpp_subadditivity {
  double m_hat;
  double arg_t;
  double arg_s;
  double refined_m_hat;
  double relative_change;
  int flagged;
} kpp_subadditivity;

KPP_API kpp_status kpp_subadditivity_check(const kpp_path* path, const kpp_grid* grid,
                                           const kpp_solve_config* config, double level,
                                           const double* times, size_t n_times, unsigned threads,
                                           kpp_subadditivity* out, char** json);

/* ---- stability ---- */

typedef struct kpp_stability {
  double M;
  double max_violation;
  double t_at_max;
  double slack;
  int passed;
  int plateau;
} kpp_stability;

/* u0_inf / u0_sup are taken from the first stored frame. csv_file may be NULL. */
KPP_API kpp_status kpp_stability_check(const kpp_traj* traj, const kpp_path* path, double slack,
                                       kpp_stability* out, const char* csv_file);
/* Frozen scheme-error allowance c_space*dx^2 + c_time*dt. */
KPP_API double kpp_slack(double dx, double dt);

/* ---- sub/supersolutions ---- */

typedef enum kpp_bound_kind {
  KPP_BOUND_SUPER = 0,        /* min{1, e^{-mu (x - C)}} */
  KPP_BOUND_LOWER = 1,        /* uncapped lower curve with its validity half-line */
  KPP_BOUND_CAPPED_LOWER = 2  /* lower curve flat-capped left of its peak */
} kpp_bound_kind;

typedef struct kpp_bound_spec {
  double mu;
  double mu_tilde; /* unused for KPP_BOUND_SUPER */
  double delta;    /* <= 0: helper choice */
  double d;        /* <= 0: max of d_b and the sufficient threshold */
  double r_min;
  double horizon_lo;
  double horizon_hi;
  double t0_shift;
} kpp_bound_spec;

KPP_API void kpp_bound_spec_default(kpp_bound_spec* spec);
KPP_API kpp_status kpp_bound_create(const kpp_path* path, kpp_bound_kind kind,
                                    const kpp_bound_spec* spec, kpp_bound** out);
KPP_API void kpp_bound_free(kpp_bound* bound);
KPP_API kpp_status kpp_bound_eval(const kpp_bound* bound, double t, double x, double* out);
/* -HUGE_VAL when the curve is valid everywhere. */
KPP_API kpp_status kpp_bound_validity(const kpp_bound* bound, double t, double* out);
/* Resolved delta, d and d_b (zeros for KPP_BOUND_SUPER). */
KPP_API kpp_status kpp_bound_params(const kpp_bound* bound, double* delta, double* d, double* d_b);
KPP_API kpp_status kpp_lower_threshold(double mu, double mu_tilde, double delta, double b_norm,
                                       double* out);

typedef struct kpp_certify {
  double max_violation;
  double t_at_max;
  double slack;
  int passed;
} kpp_certify;

/* relation 0: u <= bound, 1: u >= bound. csv_file may be NULL. */
KPP_API kpp_status kpp_certify_ordering(const kpp_traj* traj, const kpp_bound* bound, int relation,
                                        double slack, kpp_certify* out, const char* csv_file);

#ifdef __cplusplus
}
#endif

#endif
