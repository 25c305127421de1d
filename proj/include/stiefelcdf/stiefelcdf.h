#ifndef STIEFELCDF_H
#define STIEFELCDF_H

/* C interface to the constraint dissolving solvers.
 *
 * All objects are opaque handles created by a *_create / builder call and
 * released with the matching *_free. Functions return a cdf_status; on
 * failure cdf_last_error() describes the problem (thread-local, valid until
 * the next failing call on the same thread). Matrix data crosses the
 * boundary in row-major order. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CDF_API __declspec(dllexport)
#else
#define CDF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdf_status {
  CDF_OK = 0,
  CDF_ERR_NULL_ARGUMENT = 1,
  CDF_ERR_DIMENSION = 2,
  CDF_ERR_VALIDATION = 3,
  CDF_ERR_NUMERICAL = 4,
  CDF_ERR_DIVERGENCE = 5,
  CDF_ERR_SAFEGUARD = 6,
  CDF_ERR_CONFIG = 7,
  CDF_ERR_OUT_OF_RANGE = 8,
  CDF_ERR_INTERNAL = 9
} cdf_status;

typedef struct cdf_matrix cdf_matrix;
typedef struct cdf_problem cdf_problem;
typedef struct cdf_solver_config cdf_solver_config;
typedef struct cdf_result cdf_result;

typedef struct cdf_trace_row {
  long iter;
  double f;
  double h;
  double feas;
  double stat;
  double seconds;
} cdf_trace_row;

CDF_API const char* cdf_version(void);
CDF_API const char* cdf_last_error(void);
CDF_API const char* cdf_status_name(cdf_status status);

/* Matrices. `data` may be NULL for a zero matrix. */
CDF_API cdf_status cdf_matrix_create(size_t rows, size_t cols,
                                     const double* data, cdf_matrix** out);
CDF_API void cdf_matrix_free(cdf_matrix* m);
CDF_API size_t cdf_matrix_rows(const cdf_matrix* m);
CDF_API size_t cdf_matrix_cols(const cdf_matrix* m);
CDF_API cdf_status cdf_matrix_get(const cdf_matrix* m, size_t i, size_t j,
                                  double* out);
/* Copies rows*cols values; `len` is the capacity of `buf`. */
CDF_API cdf_status cdf_matrix_copy(const cdf_matrix* m, double* buf,
                                   size_t len);

/* Kernels. Every `out` matrix is newly allocated. */
CDF_API cdf_status cdf_apply_A(const cdf_matrix* x, cdf_matrix** out);
CDF_API cdf_status cdf_jacobian_apply(const cdf_matrix* x, const cdf_matrix* d,
                                      cdf_matrix** out);
CDF_API cdf_status cdf_project_stiefel(const cdf_matrix* x, cdf_matrix** out);
CDF_API cdf_status cdf_inverse_A(const cdf_matrix* y, cdf_matrix** out);
CDF_API cdf_status cdf_feasibility_violation(const cdf_matrix* x, double* out);

/* Problems. */
CDF_API cdf_status cdf_problem_quadratic_trace(const cdf_matrix* a, size_t p,
                                               cdf_problem** out);
CDF_API cdf_status cdf_problem_sparse_pca(const cdf_matrix* sigma, double gamma,
                                          size_t p, cdf_problem** out);
CDF_API cdf_status cdf_problem_l1_pca(const cdf_matrix* a, size_t p,
                                      cdf_problem** out);
CDF_API cdf_status cdf_problem_zero(size_t n, size_t p, cdf_problem** out);
CDF_API cdf_status cdf_problem_attach_l1(cdf_problem* problem, double gamma);
/* bound = 0 selects the default truncation radius (10 sigma). */
CDF_API cdf_status cdf_problem_attach_noise(cdf_problem* problem, double sigma,
                                            double bound, uint64_t seed);
CDF_API cdf_status cdf_problem_value(const cdf_problem* problem,
                                     const cdf_matrix* x, double* out);
/* h(X) = f(A(X)) + beta/4 ||X^T X - I||^2 */
CDF_API cdf_status cdf_penalty_value(const cdf_problem* problem,
                                     const cdf_matrix* x, double beta,
                                     double* out);
CDF_API void cdf_problem_free(cdf_problem* problem);

/* Solver configuration. Keys and values follow the run config format
 * (beta, eta0, schedule, steps, iters_per_epoch, max_iters, seed,
 * feas_shell_check, stop_tol_stationarity, stop_tol_feasibility,
 * stop_check_every, trace_stride, timing). */
CDF_API cdf_status cdf_solver_config_create(cdf_solver_config** out);
CDF_API cdf_status cdf_solver_config_set(cdf_solver_config* cfg,
                                         const char* key, const char* value);
CDF_API cdf_status cdf_solver_config_set_x0(cdf_solver_config* cfg,
                                            const cdf_matrix* x0);
/* Fills the safeguard constants from `samples` sampled oracle calls. With
 * set_beta != 0, beta is also set by the safeguard formula. */
CDF_API cdf_status cdf_solver_config_estimate_safeguards(
    cdf_solver_config* cfg, const cdf_problem* problem, int samples,
    int set_beta);
CDF_API void cdf_solver_config_free(cdf_solver_config* cfg);

/* algorithm: "ncdf_sgd", "ncdf_proxsgd" or "rsgd_baseline". */
CDF_API cdf_status cdf_solve(const cdf_problem* problem,
                             const cdf_solver_config* cfg,
                             const char* algorithm, cdf_result** out);
CDF_API long cdf_result_iterations(const cdf_result* r);
CDF_API const char* cdf_result_termination(const cdf_result* r);
CDF_API double cdf_result_seconds(const cdf_result* r);
CDF_API cdf_status cdf_result_final_x(const cdf_result* r, cdf_matrix** out);
CDF_API cdf_status cdf_result_projected_x(const cdf_result* r,
                                          cdf_matrix** out);
CDF_API size_t cdf_result_trace_length(const cdf_result* r);
CDF_API cdf_status cdf_result_trace_row(const cdf_result* r, size_t i,
                                        cdf_trace_row* out);
CDF_API void cdf_result_free(cdf_result* r);

/* Subcommands; return process exit codes (0 ok, 1 verification failure,
 * 2 divergence, 3 configuration error) and print to stdout/stderr. */
CDF_API int cdf_cmd_run(const char* config_path);
CDF_API int cdf_cmd_verify(uint64_t seed, int samples);
CDF_API int cdf_cmd_grid(const char* config_path);

#ifdef __cplusplus
}
#endif

#endif
