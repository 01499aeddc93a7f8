#ifndef CAUSALCAP_H
#define CAUSALCAP_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_UTF8 = 2,
  CC_STATUS_JSON = 3,
  CC_STATUS_INVALID_INPUT = 4,
  CC_STATUS_PANIC = 5,
} CcStatus;

/**
 * A channel in Choi form.
 */
typedef struct CcChannel CcChannel;

/**
 * A causal decomposition `p W_ab + (1 − p) W_ba`.
 */
typedef struct CcDecomposition CcDecomposition;

/**
 * A labeled operator.
 */
typedef struct CcOperator CcOperator;

/**
 * The five process residuals; each is zero for a valid process.
 */
typedef struct CcValidity {
  double positivity;
  double trace;
  double marginal_a;
  double marginal_b;
  double no_loops;
} CcValidity;

/**
 * Residuals of the erasure reduction.
 */
typedef struct CcPipelineReport {
  double p;
  double bo_identity_residual;
  double reconstruction_residual;
  double erasure_residual;
} CcPipelineReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *cc_last_error(void);

/**
 * Frees a string returned by the library.
 *
 * # Safety
 * `s` is null or came from this library and has not been freed.
 */
void cc_string_free(char *s);

/**
 * # Safety
 * `json` is a nul-terminated string; `out` is writable.
 */
enum CcStatus cc_operator_from_json(const char *json, struct CcOperator **out_op);

/**
 * # Safety
 * `op` is a live handle; `out` is writable.
 */
enum CcStatus cc_operator_to_json(const struct CcOperator *op, char **out_json);

/**
 * # Safety
 * `op` is null or a live handle.
 */
void cc_operator_free(struct CcOperator *op);

/**
 * Total dimension of the operator's space.
 *
 * # Safety
 * `op` is a live handle; `out` is writable.
 */
enum CcStatus cc_operator_dim(const struct CcOperator *op, size_t *out_dim);

/**
 * Trace of the operator, real and imaginary parts.
 *
 * # Safety
 * `op` is a live handle; `re` and `im` are writable.
 */
enum CcStatus cc_operator_trace(const struct CcOperator *op, double *re, double *im);

/**
 * Traces out `count` named subsystems.
 *
 * # Safety
 * `op` is a live handle; `names` points to `count` nul-terminated strings;
 * `out` is writable.
 */
enum CcStatus cc_operator_partial_trace(const struct CcOperator *op,
                                        const char *const *names,
                                        size_t count,
                                        struct CcOperator **out_op);

/**
 * Link product over the subsystems the operators share by name.
 *
 * # Safety
 * `a` and `b` are live handles; `out` is writable.
 */
enum CcStatus cc_operator_link_product(const struct CcOperator *a,
                                       const struct CcOperator *b,
                                       struct CcOperator **out_op);

/**
 * Residuals of a process given as JSON `{"dims": ..., "op": ...}`.
 *
 * # Safety
 * `json` is a nul-terminated string; `out` is writable.
 */
enum CcStatus cc_process_validate_json(const char *json, struct CcValidity *out_report);

/**
 * The erasure-family example with mixing probability `p` and message
 * dimension `d`.
 *
 * # Safety
 * `out` is writable.
 */
enum CcStatus cc_decomposition_example(double p, size_t d, struct CcDecomposition **out_dec);

/**
 * # Safety
 * `json` is a nul-terminated string; `out` is writable.
 */
enum CcStatus cc_decomposition_from_json(const char *json, struct CcDecomposition **out_dec);

/**
 * # Safety
 * `dec` is null or a live handle.
 */
void cc_decomposition_free(struct CcDecomposition *dec);

/**
 * Runs the erasure reduction. `alice` may be null, in which case Alice
 * discards `A_I` and routes her ancilla `A_I'` into `A_O`.
 *
 * # Safety
 * `dec` is a live handle; `alice` is null or a live handle; `out` is
 * writable.
 */
enum CcStatus cc_decomposition_contract(const struct CcDecomposition *dec,
                                        const struct CcChannel *alice,
                                        double tol,
                                        struct CcPipelineReport *out_report);

/**
 * Exchanges the parties; `p` becomes `1 − p`.
 *
 * # Safety
 * `dec` is a live handle; `out` is writable.
 */
enum CcStatus cc_decomposition_swap_roles(const struct CcDecomposition *dec,
                                          struct CcDecomposition **out_dec);

/**
 * # Safety
 * `json` is a nul-terminated string; `out` is writable.
 */
enum CcStatus cc_channel_from_json(const char *json, struct CcChannel **out_ch);

/**
 * # Safety
 * `ch` is null or a live handle.
 */
void cc_channel_free(struct CcChannel *ch);

/**
 * Largest single-use coherent information found by a seeded multi-start
 * search.
 *
 * # Safety
 * `ch` is a live handle; `out` is writable.
 */
enum CcStatus cc_channel_max_coherent_information(const struct CcChannel *ch,
                                                  size_t restarts,
                                                  double tol,
                                                  uint64_t seed,
                                                  double *out_value);

/**
 * `max{0, (2p − 1) log₂ d}`.
 *
 * # Safety
 * `out` is writable.
 */
enum CcStatus cc_erasure_quantum_capacity(double p, size_t d, double *out_value);

/**
 * `p log₂ d`.
 *
 * # Safety
 * `out` is writable.
 */
enum CcStatus cc_erasure_classical_capacity(double p, size_t d, double *out_value);

/**
 * Capacity in bits of the row-stochastic `rows × cols` matrix stored
 * row-major at `matrix`.
 *
 * # Safety
 * `matrix` points to `rows * cols` doubles; `out` is writable.
 */
enum CcStatus cc_blahut_arimoto(const double *matrix,
                                size_t rows,
                                size_t cols,
                                double tol,
                                double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAUSALCAP_H */
