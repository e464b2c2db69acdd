#ifndef BCFRAC_H
#define BCFRAC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

typedef enum BcfracStatus {
  BCFRAC_STATUS_OK = 0,
  BCFRAC_STATUS_NULL_POINTER = 1,
  BCFRAC_STATUS_INVALID_ARGUMENT = 2,
  BCFRAC_STATUS_DOMAIN = 3,
  BCFRAC_STATUS_QUADRATURE = 4,
  BCFRAC_STATUS_STEP = 5,
  BCFRAC_STATUS_ZERO_DIVISOR = 6,
  BCFRAC_STATUS_CONFIG = 7,
  BCFRAC_STATUS_IO = 8,
  BCFRAC_STATUS_PANIC = 9,
} BcfracStatus;

typedef enum BcfracSide {
  BCFRAC_SIDE_LEFT = 0,
  BCFRAC_SIDE_RIGHT = 1,
} BcfracSide;

/**
 * A resolved run configuration.
 */
typedef struct BcfracConfig BcfracConfig;

/**
 * A product-type function `f1(z1) e + f2(z2) e†`.
 */
typedef struct BcfracFunction BcfracFunction;

/**
 * A bicomplex fractional operator at a fixed resolution.
 */
typedef struct BcfracOperator BcfracOperator;

/**
 * A strictly increasing scalar weight `φ` on an interval.
 */
typedef struct BcfracScalarWeight BcfracScalarWeight;

/**
 * A weight pair `(ϑ, φ)`.
 */
typedef struct BcfracWeights BcfracWeights;

typedef struct BcfracComplex {
  double re;
  double im;
} BcfracComplex;

/**
 * `z1 e + z2 e†` in idempotent components.
 */
typedef struct BcfracBicomplex {
  struct BcfracComplex z1;
  struct BcfracComplex z2;
} BcfracBicomplex;

/**
 * `l1 e + l2 e†` with real components.
 */
typedef struct BcfracHyperbolic {
  double l1;
  double l2;
} BcfracHyperbolic;

/**
 * Scalar input `t -> f(t)` for the one-dimensional operators.
 */
typedef struct BcfracComplex (*BcfracScalarFn)(double t, void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *bcfrac_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bcfrac_version(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_from_cartesian(struct BcfracComplex a,
                                                  struct BcfracComplex b,
                                                  struct BcfracBicomplex *out);

/**
 * # Safety
 * `a` and `b` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_to_cartesian(struct BcfracBicomplex z,
                                                struct BcfracComplex *a,
                                                struct BcfracComplex *b);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_add(struct BcfracBicomplex x,
                                       struct BcfracBicomplex y,
                                       struct BcfracBicomplex *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_sub(struct BcfracBicomplex x,
                                       struct BcfracBicomplex y,
                                       struct BcfracBicomplex *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_mul(struct BcfracBicomplex x,
                                       struct BcfracBicomplex y,
                                       struct BcfracBicomplex *out);

/**
 * Fails with `ZeroDivisor` when either idempotent component vanishes.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_inv(struct BcfracBicomplex x, struct BcfracBicomplex *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_exp(struct BcfracBicomplex x, struct BcfracBicomplex *out);

/**
 * Componentwise conjugate `Z*`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_star(struct BcfracBicomplex x, struct BcfracBicomplex *out);

/**
 * Hyperbolic modulus `|Z|_k`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_bicomplex_mod_k(struct BcfracBicomplex x, struct BcfracHyperbolic *out);

bool bcfrac_bicomplex_is_zero_divisor(struct BcfracBicomplex x);

/**
 * `φ(t) = t` on `[lo, hi]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_scalar_weight_identity(double lo,
                                                double hi,
                                                struct BcfracScalarWeight **out);

/**
 * `φ(t) = Σ c_j t^j` on `[lo, hi]`; `φ'` must stay positive there.
 *
 * # Safety
 * `coeffs` must point to `len` doubles; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_scalar_weight_polynomial(const double *coeffs,
                                                  size_t len,
                                                  double lo,
                                                  double hi,
                                                  struct BcfracScalarWeight **out);

/**
 * # Safety
 * `w` must come from a `bcfrac_scalar_weight_*` constructor or be null.
 */
void bcfrac_scalar_weight_free(struct BcfracScalarWeight *w);

/**
 * Proportional fractional integral of order `alpha ∈ (0, 1]` at `t`, with
 * `n` quadrature nodes.
 *
 * # Safety
 * `f` must be callable with `user`; `w` must be a live handle; `out` must
 * be valid for writes.
 */
enum BcfracStatus bcfrac_prop_frac_integral(BcfracScalarFn f,
                                            void *user,
                                            double alpha,
                                            double sigma,
                                            const struct BcfracScalarWeight *w,
                                            enum BcfracSide s,
                                            double t,
                                            size_t n,
                                            struct BcfracComplex *out);

/**
 * Proportional fractional derivative of order `alpha ∈ (0, 1)` at `t`; the
 * outer derivative uses central differences with step `fd_relative` times
 * the interval length.
 *
 * # Safety
 * As for [`bcfrac_prop_frac_integral`].
 */
enum BcfracStatus bcfrac_prop_frac_derivative(BcfracScalarFn f,
                                              void *user,
                                              double alpha,
                                              double sigma,
                                              const struct BcfracScalarWeight *w,
                                              enum BcfracSide s,
                                              double t,
                                              size_t n,
                                              double fd_relative,
                                              struct BcfracComplex *out);

/**
 * Parses a run configuration (TOML, optionally naming a `preset`).
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_config_from_toml(const char *toml, struct BcfracConfig **out);

/**
 * # Safety
 * `c` must come from [`bcfrac_config_from_toml`] or be null.
 */
void bcfrac_config_free(struct BcfracConfig *c);

/**
 * Parses `f1(z1) e + f2(z2) e†` from two expressions.
 *
 * # Safety
 * `f1` and `f2` must be NUL-terminated strings; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_function_parse(const char *f1,
                                        const char *f2,
                                        struct BcfracFunction **out);

/**
 * # Safety
 * `f` must be a live handle; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_function_eval(const struct BcfracFunction *f,
                                       struct BcfracBicomplex z,
                                       struct BcfracBicomplex *out);

/**
 * # Safety
 * `f` must come from [`bcfrac_function_parse`] or be null.
 */
void bcfrac_function_free(struct BcfracFunction *f);

/**
 * Parses `classical`, `constant:<ϑ>,<φ>` or `scaled-classical:<g(x, y)>`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_weights_parse(const char *spec, struct BcfracWeights **out);

/**
 * # Safety
 * `w` must come from [`bcfrac_weights_parse`] or be null.
 */
void bcfrac_weights_free(struct BcfracWeights *w);

/**
 * The operator described by `config` at refinement `level`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_operator_new(const struct BcfracConfig *config,
                                      size_t level,
                                      struct BcfracOperator **out);

/**
 * # Safety
 * `op` must come from [`bcfrac_operator_new`] or be null.
 */
void bcfrac_operator_free(struct BcfracOperator *op);

/**
 * Trace integral `I F(Z, W)`.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_trace_integral(const struct BcfracOperator *op,
                                        const struct BcfracFunction *f,
                                        struct BcfracBicomplex w,
                                        enum BcfracSide s,
                                        struct BcfracBicomplex z,
                                        struct BcfracBicomplex *out);

/**
 * Trace derivative `D F(Z, W)`.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_trace_derivative(const struct BcfracOperator *op,
                                          const struct BcfracFunction *f,
                                          struct BcfracBicomplex w,
                                          enum BcfracSide s,
                                          struct BcfracBicomplex z,
                                          struct BcfracBicomplex *out);

/**
 * The proportional fractional weighted Cauchy-Riemann operator applied to
 * `F` at `Z`.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum BcfracStatus bcfrac_frac_cr_apply(const struct BcfracOperator *op,
                                       const struct BcfracFunction *f,
                                       const struct BcfracWeights *weights,
                                       struct BcfracBicomplex w,
                                       enum BcfracSide s,
                                       struct BcfracBicomplex z,
                                       struct BcfracBicomplex *out);

/**
 * Runs every identity of `config`. Writes CSV reports and `summary.toml`
 * into `out_dir` unless it is null, and stores whether all identities
 * passed in `passed`.
 *
 * # Safety
 * `config` must be a live handle; `out_dir` must be null or a NUL-terminated
 * string; `passed` must be valid for writes.
 */
enum BcfracStatus bcfrac_run_suite(const struct BcfracConfig *config,
                                   const char *out_dir,
                                   bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BCFRAC_H */
