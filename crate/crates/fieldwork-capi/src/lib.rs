//! C ABI for the fieldwork library.
//!
//! Conventions:
//! - Handles are opaque pointers created by `*_new`/`*_from_json` and
//!   released by the matching `*_free`; freeing NULL is a no-op.
//! - Every fallible function returns an integer code: 0 success, 2
//!   validation error, 3 numerical non-convergence, 4 NULL argument,
//!   5 invalid UTF-8, 6 internal panic (matching the CLI exit codes where
//!   they overlap). On failure, outputs are left untouched and the
//!   message is retrievable with `fw_last_error` on the same thread.
//! - Complex scalars pass as `(re, im)` pairs of doubles.
//!
//! The header `include/fieldwork.h` is generated from this file at build
//! time and committed alongside it.
//!
//! # Safety
//!
//! One contract covers every function here, so the per-function lint is
//! silenced crate-wide: string arguments must point to NUL-terminated
//! buffers, handle arguments must come from the matching constructor and
//! not have been freed, and array/out-pointer arguments must be valid for
//! writes of the documented length. NULL is checked and reported
//! (`FW_ENULL`) wherever a pointer is dereferenced; dangling or undersized
//! pointers cannot be detected and are undefined behavior, exactly as in
//! any C API.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use fieldwork::cli::{CliError, ProcessDocument};
use fieldwork::field::{self, FieldConfig, SpectralProfile, TimeSwitching};
use fieldwork::qsys::ProcessSpec;
use fieldwork::workdist::{self, DistributionKind};

/// Success.
pub const FW_OK: i32 = 0;
/// Invalid input: malformed JSON, domain violation, bad parameter.
pub const FW_EVALIDATION: i32 = 2;
/// A computation failed to converge or violated a numerical invariant.
pub const FW_ENUMERICAL: i32 = 3;
/// A required pointer argument was NULL.
pub const FW_ENULL: i32 = 4;
/// A string argument was not valid UTF-8.
pub const FW_EUTF8: i32 = 5;
/// An internal panic was caught at the FFI boundary.
pub const FW_EPANIC: i32 = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes stripped");
    });
}

fn fail(code: i32, msg: &str) -> i32 {
    set_error(msg);
    code
}

fn fail_cli(e: CliError) -> i32 {
    let code = e.exit_code();
    set_error(e.message());
    code
}

/// Run `body` with panic containment; successes clear nothing, failures
/// set the thread-local message.
fn guarded(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".to_string());
            fail(FW_EPANIC, &format!("internal panic: {msg}"))
        }
    }
}

/// Copy the current thread's last error message into `buf` (NUL-terminated,
/// truncated to `cap` bytes including the NUL). Returns the full message
/// length in bytes, excluding the NUL, so `cap <= return` means truncation.
/// Passing `cap == 0` or a NULL `buf` just queries the length.
#[no_mangle]
pub unsafe extern "C" fn fw_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fw_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

unsafe fn parse_utf8<'a>(ptr: *const c_char) -> Result<&'a str, i32> {
    if ptr.is_null() {
        return Err(fail(FW_ENULL, "string argument is NULL"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail(FW_EUTF8, &format!("string argument is not UTF-8: {e}")))
}

unsafe fn write_out<T>(ptr: *mut T, value: T) -> Result<(), i32> {
    if ptr.is_null() {
        return Err(fail(FW_ENULL, "output pointer is NULL"));
    }
    ptr.write(value);
    Ok(())
}

macro_rules! try_code {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(code) => return code,
        }
    };
}

// ---------------------------------------------------------------------------
// Field configurations
// ---------------------------------------------------------------------------

/// Opaque thermal-field configuration handle.
pub struct FwFieldConfig {
    inner: FieldConfig,
}

unsafe fn field_ref<'a>(cfg: *const FwFieldConfig) -> Result<&'a FieldConfig, i32> {
    if cfg.is_null() {
        return Err(fail(FW_ENULL, "field config handle is NULL"));
    }
    Ok(&(*cfg).inner)
}

/// Create a field configuration with gaussian switching and smearing
/// profiles. `n` is the spatial dimension (1..=3), `m` the mass, `beta`
/// the inverse temperature, `lambda` the coupling.
#[no_mangle]
pub unsafe extern "C" fn fw_field_config_new_gaussian(
    n: u32,
    m: f64,
    beta: f64,
    lambda: f64,
    chi_amplitude: f64,
    chi_width: f64,
    f_amplitude: f64,
    f_width: f64,
    out: *mut *mut FwFieldConfig,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(FW_ENULL, "output pointer is NULL");
        }
        let cfg = FieldConfig::new(
            n,
            m,
            beta,
            lambda,
            SpectralProfile::Gaussian { amplitude: chi_amplitude, width: chi_width },
            SpectralProfile::Gaussian { amplitude: f_amplitude, width: f_width },
        );
        match cfg {
            Ok(inner) => {
                out.write(Box::into_raw(Box::new(FwFieldConfig { inner })));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Create a field configuration from its JSON form (the same schema the
/// CLI scenarios embed under `config`). Supports tabulated profiles.
#[no_mangle]
pub unsafe extern "C" fn fw_field_config_from_json(
    json: *const c_char,
    out: *mut *mut FwFieldConfig,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(FW_ENULL, "output pointer is NULL");
        }
        let text = try_code!(parse_utf8(json));
        let parsed: Result<FieldConfig, _> = serde_json::from_str(text);
        match parsed {
            Ok(inner) => match inner.validate() {
                Ok(()) => {
                    out.write(Box::into_raw(Box::new(FwFieldConfig { inner })));
                    FW_OK
                }
                Err(e) => fail_cli(e.into()),
            },
            Err(e) => fail(
                FW_EVALIDATION,
                &format!("field config JSON: {e} at line {} column {}", e.line(), e.column()),
            ),
        }
    })
}

/// Release a field configuration. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fw_field_config_free(cfg: *mut FwFieldConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Work cumulant κ_j (j = 1..=8).
#[no_mangle]
pub unsafe extern "C" fn fw_field_cumulant(
    cfg: *const FwFieldConfig,
    j: u32,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let cfg = try_code!(field_ref(cfg));
        match field::cumulant_work(cfg, j as usize) {
            Ok(v) => {
                try_code!(write_out(out, v));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Work characteristic function P̃_W(μ) at complex μ = mu_re + i·mu_im
/// (|mu_im| must stay within the KMS strip |Im μ| ≤ β).
#[no_mangle]
pub unsafe extern "C" fn fw_field_char_work(
    cfg: *const FwFieldConfig,
    mu_re: f64,
    mu_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> i32 {
    guarded(|| {
        let cfg = try_code!(field_ref(cfg));
        match field::char_work(cfg, Complex64::new(mu_re, mu_im)) {
            Ok(v) => {
                try_code!(write_out(out_re, v.re));
                try_code!(write_out(out_im, v.im));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Heisenberg internal-energy-difference characteristic function P̃_ΔÛ(μ).
#[no_mangle]
pub unsafe extern "C" fn fw_field_char_du(
    cfg: *const FwFieldConfig,
    mu_re: f64,
    mu_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> i32 {
    guarded(|| {
        let cfg = try_code!(field_ref(cfg));
        match field::char_du(cfg, Complex64::new(mu_re, mu_im)) {
            Ok(v) => {
                try_code!(write_out(out_re, v.re));
                try_code!(write_out(out_im, v.im));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Max residual of the KMS-strip Crooks identity over a symmetric grid of
/// `points` values μ ∈ [−mu_max, mu_max].
#[no_mangle]
pub unsafe extern "C" fn fw_field_crooks_residual(
    cfg: *const FwFieldConfig,
    mu_max: f64,
    points: usize,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let cfg = try_code!(field_ref(cfg));
        if points < 2 || !mu_max.is_finite() {
            return fail(FW_EVALIDATION, "need points ≥ 2 and finite mu_max");
        }
        let half = mu_max.abs();
        let step = 2.0 * half / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|i| -half + i as f64 * step).collect();
        match field::crooks_identity_check(cfg, &grid) {
            Ok(v) => {
                try_code!(write_out(out, v));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Global displacement phase θ (gaussian switching profiles only).
#[no_mangle]
pub unsafe extern "C" fn fw_field_theta(cfg: *const FwFieldConfig, out: *mut f64) -> i32 {
    guarded(|| {
        let cfg = try_code!(field_ref(cfg));
        let result = TimeSwitching::from_spectral(&cfg.chi)
            .and_then(|sw| field::phase_theta(cfg, &sw));
        match result {
            Ok(v) => {
                try_code!(write_out(out, v));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Finite coefficient of the δ(0) divergence in the naive variance of the
/// bare internal-energy difference.
#[no_mangle]
pub unsafe extern "C" fn fw_field_divergence_coefficient(
    cfg: *const FwFieldConfig,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let cfg = try_code!(field_ref(cfg));
        match field::naive_variance_divergence_coefficient(cfg) {
            Ok(v) => {
                try_code!(write_out(out, v));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Sample the FFT-inverted work density on `n_grid` points of
/// [w_min, w_max). All three output arrays must hold `n_grid` doubles;
/// `n_grid` must be a power of two ≥ 256.
#[no_mangle]
pub unsafe extern "C" fn fw_field_dist(
    cfg: *const FwFieldConfig,
    w_min: f64,
    w_max: f64,
    n_grid: usize,
    w_out: *mut f64,
    density_re_out: *mut f64,
    density_im_out: *mut f64,
) -> i32 {
    guarded(|| {
        let cfg = try_code!(field_ref(cfg));
        if w_out.is_null() || density_re_out.is_null() || density_im_out.is_null() {
            return fail(FW_ENULL, "output array pointer is NULL");
        }
        match field::dist_work_grid(cfg, w_min, w_max, n_grid) {
            Ok(dist) => {
                for (i, (&w, d)) in dist.w_values.iter().zip(&dist.density).enumerate() {
                    w_out.add(i).write(w);
                    density_re_out.add(i).write(d.re);
                    density_im_out.add(i).write(d.im);
                }
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

// ---------------------------------------------------------------------------
// Finite-dimensional processes
// ---------------------------------------------------------------------------

/// Opaque finite-dimensional process handle (ρ, Ĥ₀, Ĥ_τ, Û).
pub struct FwProcess {
    inner: ProcessSpec,
    /// β carried by the source document, if any (used by checks).
    beta: Option<f64>,
}

unsafe fn process_ref<'a>(p: *const FwProcess) -> Result<&'a FwProcess, i32> {
    if p.is_null() {
        return Err(fail(FW_ENULL, "process handle is NULL"));
    }
    Ok(&*p)
}

fn kind_from_code(kind: i32) -> Result<DistributionKind, i32> {
    Ok(match kind {
        0 => DistributionKind::Rs,
        1 => DistributionKind::Atmh,
        2 => DistributionKind::Fcs,
        3 => DistributionKind::Tpm,
        4 => DistributionKind::DuConv,
        5 => DistributionKind::DuOp,
        other => {
            return Err(fail(
                FW_EVALIDATION,
                &format!("unknown distribution kind code {other} (expected 0..=5)"),
            ))
        }
    })
}

/// Build a process from a JSON document with fields `version`, `h0`,
/// `htau`, `u` ([[re, im], …] rows), optional `rho`, optional `beta`
/// (Gibbs default when `rho` is omitted).
#[no_mangle]
pub unsafe extern "C" fn fw_process_from_json(
    json: *const c_char,
    out: *mut *mut FwProcess,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(FW_ENULL, "output pointer is NULL");
        }
        let text = try_code!(parse_utf8(json));
        let doc: ProcessDocument = match serde_json::from_str(text) {
            Ok(doc) => doc,
            Err(e) => {
                return fail(
                    FW_EVALIDATION,
                    &format!("process JSON: {e} at line {} column {}", e.line(), e.column()),
                )
            }
        };
        match doc.build() {
            Ok(inner) => {
                out.write(Box::into_raw(Box::new(FwProcess { inner, beta: doc.beta })));
                FW_OK
            }
            Err(e) => fail_cli(e),
        }
    })
}

/// Release a process handle. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fw_process_free(p: *mut FwProcess) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Hilbert-space dimension of the process.
#[no_mangle]
pub unsafe extern "C" fn fw_process_dim(p: *const FwProcess, out: *mut usize) -> i32 {
    guarded(|| {
        let p = try_code!(process_ref(p));
        try_code!(write_out(out, p.inner.dim()));
        FW_OK
    })
}

/// Raw moment ⟨W^j⟩ (or ⟨ΔU^j⟩) of the selected distribution
/// (kind codes: 0 RS, 1 ATMH, 2 FCS, 3 TPM, 4 ΔU-convolution,
/// 5 ΔÛ-operator; j = 1..=4).
#[no_mangle]
pub unsafe extern "C" fn fw_moment(
    p: *const FwProcess,
    kind: i32,
    j: u32,
    out_re: *mut f64,
    out_im: *mut f64,
) -> i32 {
    guarded(|| {
        let p = try_code!(process_ref(p));
        let kind = try_code!(kind_from_code(kind));
        match workdist::moments(&p.inner, kind, j as usize) {
            Ok(v) => {
                try_code!(write_out(out_re, v.re));
                try_code!(write_out(out_im, v.im));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Characteristic function of one work distribution at real μ
/// (kind codes 0 RS, 1 ATMH, 2 FCS only).
#[no_mangle]
pub unsafe extern "C" fn fw_char(
    p: *const FwProcess,
    kind: i32,
    mu_re: f64,
    mu_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> i32 {
    guarded(|| {
        let p = try_code!(process_ref(p));
        let mu = Complex64::new(mu_re, mu_im);
        let v = match try_code!(kind_from_code(kind)) {
            DistributionKind::Rs => workdist::char_rs(&p.inner, mu),
            DistributionKind::Atmh => workdist::char_atmh(&p.inner, mu),
            DistributionKind::Fcs => workdist::char_fcs(&p.inner, mu),
            _ => {
                return fail(
                    FW_EVALIDATION,
                    "characteristic functions are exposed for kinds 0..=2 (RS, ATMH, FCS)",
                )
            }
        };
        try_code!(write_out(out_re, v.re));
        try_code!(write_out(out_im, v.im));
        FW_OK
    })
}

fn build_dist(
    p: &ProcessSpec,
    kind: DistributionKind,
) -> Result<workdist::QuasiDistribution, CliError> {
    Ok(match kind {
        DistributionKind::Rs => workdist::dist_rs(p)?,
        DistributionKind::Atmh => workdist::dist_atmh(p)?,
        DistributionKind::Fcs => workdist::dist_fcs(p)?,
        DistributionKind::Tpm => workdist::dist_tpm(p)?,
        DistributionKind::DuConv => workdist::dist_du_conv(p)?,
        DistributionKind::DuOp => workdist::dist_du_op(p)?,
    })
}

/// Number of support points of the selected distribution. Call before
/// `fw_dist_fill` to size the arrays.
#[no_mangle]
pub unsafe extern "C" fn fw_dist_len(p: *const FwProcess, kind: i32, out: *mut usize) -> i32 {
    guarded(|| {
        let p = try_code!(process_ref(p));
        let kind = try_code!(kind_from_code(kind));
        match build_dist(&p.inner, kind) {
            Ok(dist) => {
                try_code!(write_out(out, dist.support().len()));
                FW_OK
            }
            Err(e) => fail_cli(e),
        }
    })
}

/// Fill caller-provided arrays with the support of the selected
/// distribution, ascending in value. `cap` is the array capacity; the
/// call fails with the validation code when the support does not fit.
#[no_mangle]
pub unsafe extern "C" fn fw_dist_fill(
    p: *const FwProcess,
    kind: i32,
    values_out: *mut f64,
    weights_re_out: *mut f64,
    weights_im_out: *mut f64,
    cap: usize,
) -> i32 {
    guarded(|| {
        let p = try_code!(process_ref(p));
        let kind = try_code!(kind_from_code(kind));
        if values_out.is_null() || weights_re_out.is_null() || weights_im_out.is_null() {
            return fail(FW_ENULL, "output array pointer is NULL");
        }
        match build_dist(&p.inner, kind) {
            Ok(dist) => {
                let support = dist.support();
                if support.len() > cap {
                    return fail(
                        FW_EVALIDATION,
                        &format!("support has {} points but cap is {cap}", support.len()),
                    );
                }
                for (i, pt) in support.iter().enumerate() {
                    values_out.add(i).write(pt.value);
                    weights_re_out.add(i).write(pt.weight.re);
                    weights_im_out.add(i).write(pt.weight.im);
                }
                FW_OK
            }
            Err(e) => fail_cli(e),
        }
    })
}

/// First-law diagnostics, filled into six doubles:
/// mean gap (re, im), variance gap (re, im), commutator expectation
/// (re, im). The variance gap equals the commutator expectation and is
/// purely imaginary.
#[no_mangle]
pub unsafe extern "C" fn fw_first_law(
    p: *const FwProcess,
    mean_gap_re: *mut f64,
    mean_gap_im: *mut f64,
    var_gap_re: *mut f64,
    var_gap_im: *mut f64,
    commutator_re: *mut f64,
    commutator_im: *mut f64,
) -> i32 {
    guarded(|| {
        let p = try_code!(process_ref(p));
        match workdist::first_law_report(&p.inner) {
            Ok(rep) => {
                try_code!(write_out(mean_gap_re, rep.mean_gap.re));
                try_code!(write_out(mean_gap_im, rep.mean_gap.im));
                try_code!(write_out(var_gap_re, rep.var_gap.re));
                try_code!(write_out(var_gap_im, rep.var_gap.im));
                try_code!(write_out(commutator_re, rep.commutator_expectation.re));
                try_code!(write_out(commutator_im, rep.commutator_expectation.im));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Jarzynski average ⟨e^{−βW}⟩ for a process whose document carried a β
/// and whose state is the Gibbs state of Ĥ₀.
#[no_mangle]
pub unsafe extern "C" fn fw_jarzynski(
    p: *const FwProcess,
    out_re: *mut f64,
    out_im: *mut f64,
) -> i32 {
    guarded(|| {
        let p = try_code!(process_ref(p));
        let Some(beta) = p.beta else {
            return fail(FW_EVALIDATION, "process document carried no beta field");
        };
        match workdist::jarzynski_value(&p.inner, beta) {
            Ok(v) => {
                try_code!(write_out(out_re, v.re));
                try_code!(write_out(out_im, v.im));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}

/// Max residual of the detailed Crooks identity for the process's
/// Hamiltonian pair and unitary over `points` values μ ∈ [−mu_max, mu_max],
/// at the document's β.
#[no_mangle]
pub unsafe extern "C" fn fw_crooks_max_residual(
    p: *const FwProcess,
    mu_max: f64,
    points: usize,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let p = try_code!(process_ref(p));
        let Some(beta) = p.beta else {
            return fail(FW_EVALIDATION, "process document carried no beta field");
        };
        if points < 2 || !mu_max.is_finite() {
            return fail(FW_EVALIDATION, "need points ≥ 2 and finite mu_max");
        }
        let half = mu_max.abs();
        let step = 2.0 * half / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|i| -half + i as f64 * step).collect();
        match workdist::crooks_check(&p.inner.h0, &p.inner.htau, &p.inner.u, beta, &grid) {
            Ok(rep) => {
                try_code!(write_out(out, rep.max_residual));
                FW_OK
            }
            Err(e) => fail_cli(e.into()),
        }
    })
}
