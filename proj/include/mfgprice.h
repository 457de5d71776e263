/* mfgprice: equilibrium prices for a mean-field price-formation market model.
 *
 * C API over the C++ core. All objects are opaque handles; every fallible
 * call returns an mfgp_status, and mfgp_last_error() describes the most
 * recent failure on the calling thread.
 */
#ifndef MFGPRICE_H
#define MFGPRICE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MFGP_API __declspec(dllexport)
#else
#define MFGP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define MFGP_VERSION "1.0.0"

typedef enum mfgp_status {
  MFGP_OK = 0,
  MFGP_ERR_INVALID_ARGUMENT = 1,
  MFGP_ERR_DIMENSION_MISMATCH = 2,
  MFGP_ERR_NONFINITE = 3,
  MFGP_ERR_IO = 4,
  MFGP_ERR_DIVERGED = 5,
  MFGP_ERR_NO_CONVERGENCE = 6,
  MFGP_ERR_UNSUPPORTED = 7,
  MFGP_ERR_INTERNAL = 8
} mfgp_status;

typedef enum mfgp_backend {
  MFGP_BACKEND_TAPE = 0,
  MFGP_BACKEND_ADJOINT = 1,
  MFGP_BACKEND_FINITE_DIFFERENCE = 2
} mfgp_backend;

typedef enum mfgp_init {
  MFGP_INIT_SEEDED_NORMAL = 0,
  MFGP_INIT_ZEROS = 1
} mfgp_init;

/* Problem = grid + agents + costs + supply. */
typedef struct mfgp_problem mfgp_problem;
/* Immutable result of one solve. */
typedef struct mfgp_result mfgp_result;

MFGP_API const char* mfgp_version(void);

/* Message for the last error raised on this thread; empty string if none. */
MFGP_API const char* mfgp_last_error(void);

/* ---- problem construction -------------------------------------------- */

/* Creates a problem on [0, horizon] with `steps` time steps and `agents`
 * agents. Costs default to c0 = 1 with zero potentials; agents default to
 * evenly spaced on [0, 1]; supply defaults to zero. Returns NULL on invalid
 * arguments (see mfgp_last_error). */
MFGP_API mfgp_problem* mfgp_problem_new(double horizon, size_t steps, size_t agents);
MFGP_API void mfgp_problem_free(mfgp_problem* p);

MFGP_API mfgp_status mfgp_set_control_weight(mfgp_problem* p, double c0);

MFGP_API mfgp_status mfgp_set_running_zero(mfgp_problem* p);
MFGP_API mfgp_status mfgp_set_running_quadratic(mfgp_problem* p, double weight, double center);
MFGP_API mfgp_status mfgp_set_running_double_well(mfgp_problem* p, double weight,
                                                  double center_a, double center_b);
MFGP_API mfgp_status mfgp_set_terminal_zero(mfgp_problem* p);
MFGP_API mfgp_status mfgp_set_terminal_quadratic(mfgp_problem* p, double weight, double center);
MFGP_API mfgp_status mfgp_set_terminal_double_well(mfgp_problem* p, double weight,
                                                   double center_a, double center_b);

MFGP_API mfgp_status mfgp_set_agents_evenly_spaced(mfgp_problem* p, double a, double b);
MFGP_API mfgp_status mfgp_set_agents(mfgp_problem* p, const double* x, size_t count);
MFGP_API mfgp_status mfgp_set_agents_from_file(mfgp_problem* p, const char* path);

MFGP_API mfgp_status mfgp_set_supply_sinusoid(mfgp_problem* p, double amplitude,
                                              double angular_frequency);
MFGP_API mfgp_status mfgp_set_supply_wiener(mfgp_problem* p, uint64_t seed);
MFGP_API mfgp_status mfgp_set_supply_constant(mfgp_problem* p, double value);
MFGP_API mfgp_status mfgp_set_supply_values(mfgp_problem* p, const double* q, size_t count);
MFGP_API mfgp_status mfgp_set_supply_from_file(mfgp_problem* p, const char* path);

/* ---- problem inspection ---------------------------------------------- */

MFGP_API size_t mfgp_problem_steps(const mfgp_problem* p);
MFGP_API size_t mfgp_problem_agents(const mfgp_problem* p);
MFGP_API double mfgp_problem_horizon(const mfgp_problem* p);

/* Realized supply on the N left grid nodes. `out` must hold `steps` values. */
MFGP_API mfgp_status mfgp_problem_supply(const mfgp_problem* p, double* out, size_t count);
/* Initial asset levels; `out` must hold `agents` values. */
MFGP_API mfgp_status mfgp_problem_initial_states(const mfgp_problem* p, double* out, size_t count);

/* ---- solving ----------------------------------------------------------- */

typedef struct mfgp_solve_options {
  double tau_alpha;    /* primal step size, > 0 */
  double tau_omega;    /* dual step size, > 0 */
  double sigma;        /* dual Tikhonov damping, >= 0, 0 = plain update */
  size_t iterations;   /* fixed iteration count, >= 1 */
  double clearing_tol; /* > 0 enables early stop on the clearing residual */
  uint64_t seed;       /* seed for the normal initialization */
  int backend;         /* mfgp_backend */
  double fd_step;      /* base step of the finite-difference backend */
  int init;            /* mfgp_init */
  size_t trace_stride; /* record objective every k iterations; 0 = off */
} mfgp_solve_options;

/* Fills the paper-faithful defaults: tau_alpha 0.05, tau_omega 0.5, sigma 0,
 * 10000 iterations, seeded-normal init, adjoint backend, trace every
 * iteration. */
MFGP_API void mfgp_solve_options_init(mfgp_solve_options* opts);

MFGP_API mfgp_status mfgp_solve(const mfgp_problem* p, const mfgp_solve_options* opts,
                                mfgp_result** out);
MFGP_API void mfgp_result_free(mfgp_result* r);

/* ---- result access ----------------------------------------------------- */

MFGP_API size_t mfgp_result_iterations(const mfgp_result* r);
MFGP_API double mfgp_result_clearing_residual(const mfgp_result* r);

/* Price on the N left nodes. */
MFGP_API mfgp_status mfgp_result_price(const mfgp_result* r, double* out, size_t count);
/* Controls, row-major M x N. */
MFGP_API mfgp_status mfgp_result_controls(const mfgp_result* r, double* out, size_t count);
/* States, row-major M x (N+1). */
MFGP_API mfgp_status mfgp_result_states(const mfgp_result* r, double* out, size_t count);

MFGP_API size_t mfgp_result_trace_length(const mfgp_result* r);
MFGP_API mfgp_status mfgp_result_trace(const mfgp_result* r, double* out, size_t count);

/* ---- closed-form linear-quadratic oracle ------------------------------- */

/* Equilibrium price for quadratic (or zero) potentials; MFGP_ERR_UNSUPPORTED
 * for double-well cost models. `out` must hold `steps` values. */
MFGP_API mfgp_status mfgp_analytic_price(const mfgp_problem* p, double* out, size_t count);

/* Optimal trajectory for an agent starting at x0, on all N+1 nodes, driven by
 * the analytic equilibrium price of the same problem. */
MFGP_API mfgp_status mfgp_analytic_trajectory(const mfgp_problem* p, double x0, double* out,
                                              size_t count);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MFGPRICE_H */
