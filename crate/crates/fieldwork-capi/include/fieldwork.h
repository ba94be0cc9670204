/* C interface to the fieldwork quasi-probability library. Generated; do not edit. */

#ifndef FIELDWORK_H
#define FIELDWORK_H

/* This file is generated from the fieldwork-capi crate by cbindgen. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Success.
#define FW_OK 0

// Invalid input: malformed JSON, domain violation, bad parameter.
#define FW_EVALIDATION 2

// A computation failed to converge or violated a numerical invariant.
#define FW_ENUMERICAL 3

// A required pointer argument was NULL.
#define FW_ENULL 4

// A string argument was not valid UTF-8.
#define FW_EUTF8 5

// An internal panic was caught at the FFI boundary.
#define FW_EPANIC 6

// Opaque thermal-field configuration handle.
typedef struct FwFieldConfig FwFieldConfig;

// Opaque finite-dimensional process handle (ρ, Ĥ₀, Ĥ_τ, Û).
typedef struct FwProcess FwProcess;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the current thread's last error message into `buf` (NUL-terminated,
// truncated to `cap` bytes including the NUL). Returns the full message
// length in bytes, excluding the NUL, so `cap <= return` means truncation.
// Passing `cap == 0` or a NULL `buf` just queries the length.
size_t fw_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *fw_version(void);

// Create a field configuration with gaussian switching and smearing
// profiles. `n` is the spatial dimension (1..=3), `m` the mass, `beta`
// the inverse temperature, `lambda` the coupling.
int32_t fw_field_config_new_gaussian(uint32_t n,
                                     double m,
                                     double beta,
                                     double lambda,
                                     double chi_amplitude,
                                     double chi_width,
                                     double f_amplitude,
                                     double f_width,
                                     struct FwFieldConfig **out);

// Create a field configuration from its JSON form (the same schema the
// CLI scenarios embed under `config`). Supports tabulated profiles.
int32_t fw_field_config_from_json(const char *json, struct FwFieldConfig **out);

// Release a field configuration. NULL is ignored.
void fw_field_config_free(struct FwFieldConfig *cfg);

// Work cumulant κ_j (j = 1..=8).
int32_t fw_field_cumulant(const struct FwFieldConfig *cfg, uint32_t j, double *out);

// Work characteristic function P̃_W(μ) at complex μ = mu_re + i·mu_im
// (|mu_im| must stay within the KMS strip |Im μ| ≤ β).
int32_t fw_field_char_work(const struct FwFieldConfig *cfg,
                           double mu_re,
                           double mu_im,
                           double *out_re,
                           double *out_im);

// Heisenberg internal-energy-difference characteristic function P̃_ΔÛ(μ).
int32_t fw_field_char_du(const struct FwFieldConfig *cfg,
                         double mu_re,
                         double mu_im,
                         double *out_re,
                         double *out_im);

// Max residual of the KMS-strip Crooks identity over a symmetric grid of
// `points` values μ ∈ [−mu_max, mu_max].
int32_t fw_field_crooks_residual(const struct FwFieldConfig *cfg,
                                 double mu_max,
                                 size_t points,
                                 double *out);

// Global displacement phase θ (gaussian switching profiles only).
int32_t fw_field_theta(const struct FwFieldConfig *cfg, double *out);

// Finite coefficient of the δ(0) divergence in the naive variance of the
// bare internal-energy difference.
int32_t fw_field_divergence_coefficient(const struct FwFieldConfig *cfg, double *out);

// Sample the FFT-inverted work density on `n_grid` points of
// [w_min, w_max). All three output arrays must hold `n_grid` doubles;
// `n_grid` must be a power of two ≥ 256.
int32_t fw_field_dist(const struct FwFieldConfig *cfg,
                      double w_min,
                      double w_max,
                      size_t n_grid,
                      double *w_out,
                      double *density_re_out,
                      double *density_im_out);

// Build a process from a JSON document with fields `version`, `h0`,
// `htau`, `u` ([[re, im], …] rows), optional `rho`, optional `beta`
// (Gibbs default when `rho` is omitted).
int32_t fw_process_from_json(const char *json, struct FwProcess **out);

// Release a process handle. NULL is ignored.
void fw_process_free(struct FwProcess *p);

// Hilbert-space dimension of the process.
int32_t fw_process_dim(const struct FwProcess *p, size_t *out);

// Raw moment ⟨W^j⟩ (or ⟨ΔU^j⟩) of the selected distribution
// (kind codes: 0 RS, 1 ATMH, 2 FCS, 3 TPM, 4 ΔU-convolution,
// 5 ΔÛ-operator; j = 1..=4).
int32_t fw_moment(const struct FwProcess *p,
                  int32_t kind,
                  uint32_t j,
                  double *out_re,
                  double *out_im);

// Characteristic function of one work distribution at real μ
// (kind codes 0 RS, 1 ATMH, 2 FCS only).
int32_t fw_char(const struct FwProcess *p,
                int32_t kind,
                double mu_re,
                double mu_im,
                double *out_re,
                double *out_im);

// Number of support points of the selected distribution. Call before
// `fw_dist_fill` to size the arrays.
int32_t fw_dist_len(const struct FwProcess *p, int32_t kind, size_t *out);

// Fill caller-provided arrays with the support of the selected
// distribution, ascending in value. `cap` is the array capacity; the
// call fails with the validation code when the support does not fit.
int32_t fw_dist_fill(const struct FwProcess *p,
                     int32_t kind,
                     double *values_out,
                     double *weights_re_out,
                     double *weights_im_out,
                     size_t cap);

// First-law diagnostics, filled into six doubles:
// mean gap (re, im), variance gap (re, im), commutator expectation
// (re, im). The variance gap equals the commutator expectation and is
// purely imaginary.
int32_t fw_first_law(const struct FwProcess *p,
                     double *mean_gap_re,
                     double *mean_gap_im,
                     double *var_gap_re,
                     double *var_gap_im,
                     double *commutator_re,
                     double *commutator_im);

// Jarzynski average ⟨e^{−βW}⟩ for a process whose document carried a β
// and whose state is the Gibbs state of Ĥ₀.
int32_t fw_jarzynski(const struct FwProcess *p, double *out_re, double *out_im);

// Max residual of the detailed Crooks identity for the process's
// Hamiltonian pair and unitary over `points` values μ ∈ [−mu_max, mu_max],
// at the document's β.
int32_t fw_crooks_max_residual(const struct FwProcess *p,
                               double mu_max,
                               size_t points,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIELDWORK_H */
