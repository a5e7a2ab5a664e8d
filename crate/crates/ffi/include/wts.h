#ifndef WTS_H
#define WTS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WtsStatus {
  WTS_STATUS_OK = 0,
  WTS_STATUS_NULL_POINTER = 1,
  WTS_STATUS_INVALID_ARGUMENT = 2,
  WTS_STATUS_SYNTAX = 3,
  WTS_STATUS_UNKNOWN_IDENTIFIER = 4,
  WTS_STATUS_NON_POSITIVE_SYMBOL = 5,
  WTS_STATUS_NOT_LEFT_INVERTIBLE = 6,
  WTS_STATUS_OUTSIDE_CONVERGENCE_DOMAIN = 7,
  WTS_STATUS_TAIL_BOUND_NOT_ACHIEVED = 8,
  WTS_STATUS_NO_CLOSED_FORM = 9,
  WTS_STATUS_ORDER_TOO_LARGE = 10,
  WTS_STATUS_INVALID_STEP_FUNCTION = 11,
  WTS_STATUS_FORMAT = 12,
  WTS_STATUS_PANIC = 13,
} WtsStatus;

typedef enum WtsOperatorKind {
  // S_t
  WTS_OPERATOR_KIND_S = 0,
  // S_t*
  WTS_OPERATOR_KIND_S_ADJOINT = 1,
  // Cauchy dual S_t (S_t* S_t)^{-1}
  WTS_OPERATOR_KIND_S_DUAL = 2,
  // Left inverse L_t
  WTS_OPERATOR_KIND_L = 3,
  // L_t*
  WTS_OPERATOR_KIND_L_ADJOINT = 4,
} WtsOperatorKind;

// One of the five operators for a fixed symbol and step.
typedef struct WtsOperator WtsOperator;

// A compactly supported step function.
typedef struct WtsStepFunction WtsStepFunction;

// A validated symbol φ.
typedef struct WtsSymbol WtsSymbol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into this library from the same thread.
const char *wts_last_error_message(void);

// Parses a symbol spec (`const:2`, `affine`, `exp:a=2`, `expr:1+x^2`, ...)
// and validates it on `[0, x_max]`.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
enum WtsStatus wts_symbol_new(const char *spec, double x_max, struct WtsSymbol **out);

// φ(x).
//
// # Safety
// `symbol` must come from [`wts_symbol_new`]; `out` must be writable.
enum WtsStatus wts_symbol_eval(const struct WtsSymbol *symbol, double x, double *out);

// # Safety
// `symbol` must come from [`wts_symbol_new`] or be null.
void wts_symbol_free(struct WtsSymbol *symbol);

// Step function with `cells` cells: `breakpoints` holds `cells + 1`
// increasing values, `re` and `im` hold `cells` values each.
//
// # Safety
// The arrays must hold the stated number of elements.
enum WtsStatus wts_step_function_new(const double *breakpoints,
                                     const double *re,
                                     const double *im,
                                     uintptr_t cells,
                                     struct WtsStepFunction **out);

// Number of cells.
//
// # Safety
// `f` must be a live step function handle; `out` must be writable.
enum WtsStatus wts_step_function_cells(const struct WtsStepFunction *f, uintptr_t *out);

// Copies breakpoints (`capacity + 1` slots) and values (`capacity` slots
// each). Fails with `InvalidArgument` if the function has more cells than
// `capacity`.
//
// # Safety
// The output arrays must be writable for the stated lengths.
enum WtsStatus wts_step_function_copy(const struct WtsStepFunction *f,
                                      double *breakpoints,
                                      double *re,
                                      double *im,
                                      uintptr_t capacity);

// L² norm.
//
// # Safety
// `f` must be a live step function handle; `out` must be writable.
enum WtsStatus wts_step_function_norm(const struct WtsStepFunction *f, double *out);

// # Safety
// `f` must come from this library or be null.
void wts_step_function_free(struct WtsStepFunction *f);

// Operator of the given kind for step `t`; the symbol is copied.
//
// # Safety
// `symbol` must be live; `out` must be writable.
enum WtsStatus wts_operator_new(const struct WtsSymbol *symbol,
                                double t,
                                enum WtsOperatorKind kind,
                                double x_max,
                                struct WtsOperator **out);

// Applies the `power`-th power of the operator to `f`.
//
// # Safety
// Handles must be live; `out` must be writable. The result is a new handle.
enum WtsStatus wts_operator_apply(const struct WtsOperator *op,
                                  uintptr_t power,
                                  const struct WtsStepFunction *f,
                                  struct WtsStepFunction **out);

// ‖T^n‖ over the operator's window.
//
// # Safety
// `op` must be live; `out` must be writable.
enum WtsStatus wts_operator_norm(const struct WtsOperator *op, uintptr_t n, double *out);

// # Safety
// `op` must come from [`wts_operator_new`] or be null.
void wts_operator_free(struct WtsOperator *op);

// Diagonal kernel k(z, λ)(x) at a point x of [0, t), summed to `tol`.
//
// # Safety
// `symbol` must be live; `re` and `im` must be writable.
enum WtsStatus wts_kernel_eval(const struct WtsSymbol *symbol,
                               double t,
                               double x_max,
                               double z_re,
                               double z_im,
                               double lambda_re,
                               double lambda_im,
                               double x,
                               double tol,
                               double *re,
                               double *im);

// Classification report as a JSON string.
//
// # Safety
// `symbol` must be live; `out` must be writable. Free the string with
// [`wts_string_free`].
enum WtsStatus wts_classify_json(const struct WtsSymbol *symbol,
                                 double t,
                                 uintptr_t order,
                                 double x_max,
                                 double tol_class,
                                 char **out);

// Spectral summary as a JSON string.
//
// # Safety
// `symbol` must be live; `out` must be writable. Free the string with
// [`wts_string_free`].
enum WtsStatus wts_spectrum_json(const struct WtsSymbol *symbol,
                                 double t,
                                 double x_max,
                                 uintptr_t n_max,
                                 char **out);

// # Safety
// `s` must be a string returned by this library or null.
void wts_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WTS_H */
