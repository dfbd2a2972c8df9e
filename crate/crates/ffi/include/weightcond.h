#ifndef WEIGHTCOND_H
#define WEIGHTCOND_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum {
  WC_STATUS_OK = 0,
  WC_STATUS_NULL_POINTER = 1,
  WC_STATUS_INVALID_ARGUMENT = 2,
  WC_STATUS_RANK_DEFICIENT = 3,
  WC_STATUS_NON_FINITE = 4,
  WC_STATUS_ZERO_ROW_OR_COLUMN = 5,
  WC_STATUS_IO = 6,
  WC_STATUS_PANIC = 7,
  WC_STATUS_OTHER = 8,
} WcStatus;

typedef enum {
  WC_PRECONDITIONER_JACOBI = 0,
  WC_PRECONDITIONER_ROW_EQUILIBRATION = 1,
  WC_PRECONDITIONER_COLUMN_EQUILIBRATION = 2,
  WC_PRECONDITIONER_ROW_COLUMN_EQUILIBRATION = 3,
} WcPreconditioner;

typedef enum {
  WC_ACTIVATION_IDENTITY = 0,
  WC_ACTIVATION_RELU = 1,
  WC_ACTIVATION_TANH = 2,
  WC_ACTIVATION_SIGMOID = 3,
} WcActivation;

typedef enum {
  WC_CONDITIONING_NONE = 0,
  WC_CONDITIONING_EQUILIBRATE_STATIC = 1,
  WC_CONDITIONING_EQUILIBRATE_REPARAM = 2,
} WcConditioning;

/*
 Opaque dense matrix.
 */
typedef struct WcMatrix WcMatrix;

/*
 Opaque feed-forward network.
 */
typedef struct WcNetwork WcNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *wc_version(void);

/*
 Message of the last failed call on this thread, or "" after a success.
 Valid until the next call into the library from the same thread.
 */
const char *wc_last_error(void);

/*
 Creates a `rows × cols` matrix from row-major `data`.

 # Safety
 `data` must point to `rows * cols` readable doubles; `out` must be
 writable.
 */
WcStatus wc_matrix_new(size_t rows, size_t cols, const double *data, WcMatrix **out);

/*
 Releases a matrix; null is ignored.

 # Safety
 `m` must come from this library and not be used afterwards.
 */
void wc_matrix_free(WcMatrix *m);

/*
 Row count, or 0 for null.

 # Safety
 `m` must be null or a live matrix handle.
 */
size_t wc_matrix_rows(const WcMatrix *m);

/*
 Column count, or 0 for null.

 # Safety
 `m` must be null or a live matrix handle.
 */
size_t wc_matrix_cols(const WcMatrix *m);

/*
 Copies the row-major entries into `out`, which holds `len` doubles.

 # Safety
 `m` must be a live handle and `out` writable for `len` doubles.
 */
WcStatus wc_matrix_copy_data(const WcMatrix *m, double *out, size_t len);

/*
 `σ₁/σ_k` over singular values above `rank_tol·σ₁`; fails with
 `RANK_DEFICIENT` when any fall below.

 # Safety
 `m` must be a live handle and `out` writable.
 */
WcStatus wc_condition_number(const WcMatrix *m, double rank_tol, double *out);

/*
 Writes the `min(rows, cols)` singular values, descending, into `out`.

 # Safety
 `m` must be a live handle and `out` writable for `len` doubles.
 */
WcStatus wc_singular_values(const WcMatrix *m, double *out, size_t len);

/*
 Applies a diagonal preconditioner and returns the scaled matrix as a new
 handle.

 # Safety
 `m` must be a live handle and `out` writable.
 */
WcStatus wc_precondition(const WcMatrix *m, WcPreconditioner kind, WcMatrix **out);

/*
 Condition numbers before and after a preconditioner.

 # Safety
 `m` must be a live handle; `before` and `after` writable.
 */
WcStatus wc_conditioning_report(const WcMatrix *m,
                                WcPreconditioner kind,
                                double *before,
                                double *after);

/*
 Builds a dense network with layer widths `widths[0..n_widths]`, the
 given hidden activation (identity output) and conditioning on every
 layer, initialized from `seed`.

 # Safety
 `widths` must point to `n_widths` readable values; `out` writable.
 */
WcStatus wc_network_new_mlp(const size_t *widths,
                            size_t n_widths,
                            WcActivation activation,
                            WcConditioning conditioning,
                            uint64_t seed,
                            WcNetwork **out);

/*
 Releases a network; null is ignored.

 # Safety
 `net` must come from this library and not be used afterwards.
 */
void wc_network_free(WcNetwork *net);

/*
 Number of trainable parameters, or 0 for null.

 # Safety
 `net` must be null or a live handle.
 */
size_t wc_network_param_count(const WcNetwork *net);

/*
 Evaluation-mode forward pass of `rows` inputs (row-major `x`); writes
 `rows × output width` values into `out`.

 # Safety
 `net` must be a live handle, `x` readable for `x_len` doubles and `out`
 writable for `out_len` doubles.
 */
WcStatus wc_network_forward(const WcNetwork *net,
                            const double *x,
                            size_t rows,
                            size_t x_len,
                            double *out,
                            size_t out_len);

/*
 Writes `(κ(W_k), κ(E_k W_k))` per layer into `out` as interleaved pairs;
 `len` must be twice the layer count.

 # Safety
 `net` must be a live handle and `out` writable for `len` doubles.
 */
WcStatus wc_network_weight_kappas(const WcNetwork *net, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEIGHTCOND_H */
