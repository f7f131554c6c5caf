#ifndef RPOST_H
#define RPOST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Predictive density estimator selector.
typedef enum RpostEstimator {
  RPOST_ESTIMATOR_ERPDE = 0,
  RPOST_ESTIMATOR_ARPDE = 1,
  RPOST_ESTIMATOR_HRPDE = 2,
} RpostEstimator;

// Status code returned by every fallible function.
typedef enum RpostStatus {
  RPOST_STATUS_OK = 0,
  // A required pointer argument was null.
  RPOST_STATUS_NULL_POINTER = 1,
  // Arguments violate a documented precondition.
  RPOST_STATUS_INVALID_ARGUMENT = 2,
  // A numerical routine failed (non-convergence, vanishing weights, ...).
  RPOST_STATUS_NUMERIC = 3,
  // The requested quantity does not exist for these inputs (for example
  // a marginal under an improper prior).
  RPOST_STATUS_UNDEFINED = 4,
  // Internal failure, including a caught panic.
  RPOST_STATUS_INTERNAL = 5,
} RpostStatus;

// Opaque parametric family.
typedef struct RpostFamily RpostFamily;

// Opaque weighted posterior sample.
typedef struct RpostPosterior RpostPosterior;

// Opaque prior.
typedef struct RpostPrior RpostPrior;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *rpost_last_error_message(void);

// Normal location family `N(θ, sigma²)`.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum RpostStatus rpost_family_normal_location(double sigma, struct RpostFamily **out);

// Fixed-design normal regression. `design` holds `rows * cols` entries in
// row-major order. When `sigma_known` is false the scale is the last
// parameter and `sigma` is ignored by the density.
//
// # Safety
// `design` must point to `rows * cols` readable values; `out` must be valid.
enum RpostStatus rpost_family_normal_regression(const double *design,
                                                size_t rows,
                                                size_t cols,
                                                double sigma,
                                                bool sigma_known,
                                                struct RpostFamily **out);

// Number of parameters of the family.
//
// # Safety
// `family` must be a live handle or null (null yields 0).
size_t rpost_family_param_dim(const struct RpostFamily *family);

// # Safety
// `family` must be null or a handle from this library not yet freed.
void rpost_family_free(struct RpostFamily *family);

// # Safety
// `out` must be valid.
enum RpostStatus rpost_prior_uniform(struct RpostPrior **out);

// Jeffreys-type prior `1/σ` on the last parameter.
//
// # Safety
// `out` must be valid.
enum RpostStatus rpost_prior_jeffreys(struct RpostPrior **out);

// Independent `N(theta0_j, tau²)` prior.
//
// # Safety
// `theta0` must point to `dim` readable values; `out` must be valid.
enum RpostStatus rpost_prior_conjugate(const double *theta0,
                                       size_t dim,
                                       double tau,
                                       struct RpostPrior **out);

// Discrete prior with `count` atoms of dimension `dim`; `thetas` holds the
// atoms row-major and `masses` their probabilities.
//
// # Safety
// `thetas` must point to `count * dim` values, `masses` to `count` values.
enum RpostStatus rpost_prior_discrete(const double *thetas,
                                      const double *masses,
                                      size_t count,
                                      size_t dim,
                                      struct RpostPrior **out);

// # Safety
// `prior` must be null or a live handle.
void rpost_prior_free(struct RpostPrior *prior);

// Alpha-likelihood `q_n(x|θ)`; observation `i` uses design row `i` for
// regression families.
//
// # Safety
// Pointers must reference `n` data values and `dim` parameter values.
enum RpostStatus rpost_alpha_likelihood(const struct RpostFamily *family,
                                        const double *data,
                                        size_t n,
                                        const double *theta,
                                        size_t dim,
                                        double alpha,
                                        double *out);

// Unnormalized log R-posterior `q_n(x|θ) + log π(θ)`.
//
// # Safety
// As for [`rpost_alpha_likelihood`]; `prior` must be a live handle.
enum RpostStatus rpost_log_unnorm_posterior(const struct RpostFamily *family,
                                            const struct RpostPrior *prior,
                                            const double *data,
                                            size_t n,
                                            const double *theta,
                                            size_t dim,
                                            double alpha,
                                            double *out);

// Self-normalized importance sample of the R-posterior with a Gaussian
// proposal (`mean`: `dim` values, `cov`: `dim * dim` row-major), retried
// once with a wider proposal when degenerate.
//
// # Safety
// Pointers must reference arrays of the stated sizes; `out` must be valid.
enum RpostStatus rpost_importance_sample(const struct RpostFamily *family,
                                         const struct RpostPrior *prior,
                                         const double *data,
                                         size_t n,
                                         double alpha,
                                         const double *mean,
                                         const double *cov,
                                         size_t dim,
                                         size_t draws,
                                         uint64_t seed,
                                         struct RpostPosterior **out);

// Grid-quadrature posterior for a one-parameter family on `points`
// equally spaced values in `[lo, hi]`.
//
// # Safety
// `data` must reference `n` values; `out` must be valid.
enum RpostStatus rpost_grid_posterior_1d(const struct RpostFamily *family,
                                         const struct RpostPrior *prior,
                                         const double *data,
                                         size_t n,
                                         double alpha,
                                         double lo,
                                         double hi,
                                         size_t points,
                                         struct RpostPosterior **out);

// Number of support points (0 for null).
//
// # Safety
// `post` must be null or a live handle.
size_t rpost_posterior_len(const struct RpostPosterior *post);

// Parameter dimension (0 for null).
//
// # Safety
// `post` must be null or a live handle.
size_t rpost_posterior_dim(const struct RpostPosterior *post);

// Effective sample size `1 / Σ w²` (NaN for null).
//
// # Safety
// `post` must be null or a live handle.
double rpost_posterior_ess(const struct RpostPosterior *post);

// Posterior mean (ERPE) written to `out`, which holds `dim` values.
//
// # Safety
// `out` must point to `dim` writable values.
enum RpostStatus rpost_posterior_erpe(const struct RpostPosterior *post, double *out, size_t dim);

// # Safety
// `post` must be null or a live handle.
void rpost_posterior_free(struct RpostPosterior *post);

// Predictive density on the sorted grid `z` (length `nz`), written to
// `out` (length `nz`). HRPDE values are normalized on the grid.
//
// # Safety
// `z` and `out` must reference `nz` values.
enum RpostStatus rpost_predictive_density(const struct RpostFamily *family,
                                          const struct RpostPosterior *post,
                                          enum RpostEstimator kind,
                                          const double *z,
                                          size_t nz,
                                          double *out);

// Trapezoid `KLD(p, q)` on the grid `z`; `+inf` when `q` vanishes where
// `p` does not.
//
// # Safety
// `p`, `q` and `z` must reference `n` values.
enum RpostStatus rpost_kld_grid(const double *p,
                                const double *q,
                                const double *z,
                                size_t n,
                                double *out);

// Closed-form `KLD(N(mu0, s0²), N(mu1, s1²))`.
//
// # Safety
// `out` must be valid.
enum RpostStatus rpost_kld_normal_closed(double mu0, double s0, double mu1, double s1, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RPOST_H */
