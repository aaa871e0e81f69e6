/*
 * C interface to the dompole library.
 *
 * All objects are opaque handles created by dp_*_create/load/... and released
 * with the matching dp_*_free. Functions return a dp_error code; on failure
 * dp_last_error() describes the problem (thread-local, valid until the next
 * call on the same thread). Output pointers may be NULL when the value is not
 * needed.
 */
#ifndef DOMPOLE_DOMPOLE_H
#define DOMPOLE_DOMPOLE_H

#include <stddef.h>

#if defined(_WIN32)
#define DP_API __declspec(dllexport)
#else
#define DP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dp_error {
  DP_OK = 0,
  DP_ERR_INVALID_ARGUMENT = 1,
  DP_ERR_FORMAT = 2,
  DP_ERR_DIMENSION_MISMATCH = 3,
  DP_ERR_INVALID_SPEC = 4,
  DP_ERR_SINGULAR_SHIFT = 5,
  DP_ERR_SINGULAR_PENCIL = 6,
  DP_ERR_DEGENERATE_EIGENVECTOR = 7,
  DP_ERR_UNBOUNDED = 8,
  DP_ERR_NOT_CONVERGED = 9,
  DP_ERR_TOO_LARGE = 10,
  DP_ERR_INIT_FAILURE = 11,
  DP_ERR_IO = 12,
  DP_ERR_INTERNAL = 13
} dp_error;

/* Real-mode selector for dp_oracle: follow the data, force on, force off. */
enum { DP_REAL_AUTO = -1, DP_REAL_OFF = 0, DP_REAL_ON = 1 };

typedef struct dp_system dp_system;
typedef struct dp_config dp_config;
typedef struct dp_result dp_result;
typedef struct dp_poles dp_poles;
typedef struct dp_verification dp_verification;

DP_API const char* dp_version(void);
DP_API const char* dp_error_name(int code);
DP_API const char* dp_last_error(void);

/* Oracle size cap: DOMPOLE_DENSE_LIMIT if set and valid, else 2000. */
DP_API long dp_default_dense_limit(void);

/* ---- systems ---------------------------------------------------------- */

/* Matrix Market paths; e, b, c, d may be NULL (E = I, B = ones(n,1),
 * C = ones(1,n), D = 0). */
DP_API int dp_system_load(const char* a, const char* e, const char* b, const char* c,
                          const char* d, dp_system** out);
/* Directory with A.mtx and optional E.mtx, B.mtx, C.mtx, D.mtx. */
DP_API int dp_system_load_dir(const char* dir, dp_system** out);
/* Generator spec "n=200,m=2,p=2,seed=7,<recipe keys>". */
DP_API int dp_system_generate(const char* spec, dp_system** out);
/* Dense real column-major data; e and d may be NULL (identity, zero). */
DP_API int dp_system_from_dense(long n, long m, long p, const double* a, const double* e,
                                const double* b, const double* c, const double* d,
                                dp_system** out);
DP_API int dp_system_save(const dp_system* sys, const char* dir, const char* name);
DP_API int dp_system_set_name(dp_system* sys, const char* name);
DP_API int dp_system_info(const dp_system* sys, long* n, long* m, long* p, long* nnz_a,
                          long* nnz_e, int* is_real);
/* H(s), p x m column-major into out_re/out_im (each p*m doubles). */
DP_API int dp_system_transfer(const dp_system* sys, double s_re, double s_im, double* out_re,
                              double* out_im);
DP_API void dp_system_free(dp_system* sys);

/* ---- solver configuration --------------------------------------------- */

DP_API int dp_config_create(dp_config** out);
/* Keys: kappa, q, tol, max_iter, init_count, seed_count, max_subspace_dim,
 * dense_limit, real_mode (auto|on|off), strict_q (0|1), split_real (0|1),
 * init_grid ("lo:hi:count:log|lin"). */
DP_API int dp_config_set(dp_config* cfg, const char* key, const char* value);
DP_API int dp_config_set_init_points(dp_config* cfg, const double* re, const double* im,
                                     size_t count);
/* Text file with one "re im" pair per line; '#' starts a comment. */
DP_API int dp_config_load_init_points(dp_config* cfg, const char* path);
DP_API void dp_config_free(dp_config* cfg);

/* ---- solve ------------------------------------------------------------ */

/* Returns DP_OK on convergence and DP_ERR_NOT_CONVERGED when the iteration
 * stopped early; *out is valid in both cases. Other codes leave *out NULL. */
DP_API int dp_solve(const dp_system* sys, const dp_config* cfg, dp_result** out);
DP_API int dp_result_converged(const dp_result* res);
DP_API const char* dp_result_status(const dp_result* res);
DP_API size_t dp_result_pole_count(const dp_result* res);
DP_API int dp_result_pole(const dp_result* res, size_t i, double* re, double* im,
                          double* dominance, double* residual, int* converged);
DP_API int dp_result_counters(const dp_result* res, long* iterations, long* lu_count,
                              long* solve_count, long* subspace_dim, double* init_time);
DP_API int dp_result_bootstrap_counters(const dp_result* res, long* lu_count,
                                        long* solve_count);
DP_API size_t dp_result_warning_count(const dp_result* res);
/* Empty string when i is out of range. */
DP_API const char* dp_result_warning(const dp_result* res, size_t i);
/* poles.csv, poles.json, report.json (reproducible) and timing.json. */
DP_API int dp_result_write(const dp_result* res, const char* dir);
/* sigma_max sweep of the final reduced model ("omega,sigma_max"). In real
 * mode it is sampled at -i*omega, the half plane its poles were taken from. */
DP_API int dp_result_sweep_reduced(const dp_result* res, const char* grid, const char* path);
/* "omega" column with |Im lambda| of every computed pole. */
DP_API int dp_result_write_marks(const dp_result* res, const char* path);
DP_API void dp_result_free(dp_result* res);

/* ---- oracle, verification --------------------------------------------- */

/* Dense QZ ground truth. dense_limit <= 0 selects dp_default_dense_limit(). */
DP_API int dp_oracle(const dp_system* sys, int kappa, int real_mode, long dense_limit,
                     dp_poles** out);
DP_API size_t dp_poles_count(const dp_poles* poles);
DP_API int dp_poles_get(const dp_poles* poles, size_t i, double* re, double* im,
                        double* dominance, double* residue_norm_product);
/* Either path may be NULL. */
DP_API int dp_poles_write(const dp_poles* poles, const char* csv_path, const char* json_path);
DP_API void dp_poles_free(dp_poles* poles);

/* rel_tol <= 0 selects 1e-6. */
DP_API int dp_verify(const dp_result* res, const dp_poles* reference, double rel_tol,
                     dp_verification** out);
DP_API int dp_verify_all_matched(const dp_verification* v);
DP_API size_t dp_verify_count(const dp_verification* v);
DP_API int dp_verify_entry(const dp_verification* v, size_t i, double* ref_re, double* ref_im,
                           double* est_re, double* est_im, double* distance, int* matched);
DP_API int dp_verify_write(const dp_verification* v, const char* path);
DP_API void dp_verify_free(dp_verification* v);

/* ---- frequency response, modal reduction ------------------------------ */

DP_API int dp_sweep(const dp_system* sys, const char* grid, const char* path);

/* Modal model from the r most dominant computed poles (conjugates added in
 * real mode) with constant D, written as JSON. res may be NULL when r == 0.
 * The error bound needs every remaining pole and hence the dense oracle; when
 * n exceeds dense_limit *bound_available is 0 and the JSON bound is null.
 * Returns DP_ERR_UNBOUNDED when a tail pole lies on the imaginary axis. */
DP_API int dp_reduce(const dp_system* sys, const dp_result* res, int r, long dense_limit,
                     const char* path, double* bound, int* bound_available);

#ifdef __cplusplus
}
#endif

#endif /* DOMPOLE_DOMPOLE_H */
