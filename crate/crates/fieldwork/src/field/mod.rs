//! Work statistics of spacetime-localized processes on thermal scalar fields.
//!
//! A displacement-type unitary, switched in time by χ(t) and smeared in space
//! by F(x), acts on a KMS state of inverse temperature β of a free scalar
//! field of mass m in n spatial dimensions. Everything measurable about the
//! resulting work and internal-energy-difference statistics reduces to
//! one-dimensional radial integrals over a spectral weight
//!
//! ```text
//! g(k) = λ² Ω_{n−1} k^{n−1} |χ̃(ω_k)|² |F̃(k)|² / (2(2π)^n),   ω_k = √(m²+k²)
//! ```
//!
//! The characteristic function of work is the exponential of a g-weighted
//! thermal integral, exactly — the λ² in the exponent is non-perturbative.
//! Work cumulants are moments of g in ω (odd orders) or coth-weighted
//! moments (even orders); the internal-energy-difference distribution is the
//! Gaussian with the same mean and variance; their third moments differ by a
//! strictly positive localization-sensitive gap. The analytic continuation
//! of the work characteristic function onto the strip |Im μ| ≤ β satisfies
//! the cyclic-process Crooks identity P̃(μ+iβ) = P̃(−μ) identically — the
//! integrand used here is grouped so the identity holds to round-off, not
//! just to quadrature tolerance.
//!
//! All quantities are in natural units (ħ = c = 1).
//!
//! Conventions: F̃(k) = ∫F(x)e^{ik·x}dⁿx, and a gaussian profile
//! χ(t) = A e^{−t²/w²} has transform χ̃(ω) = A w √π e^{−w²ω²/4}.

pub mod quadrature;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use quadrature::{decay_cutoff, integrate, integrate_complex, ABS_TOL, REL_TOL};

/// Slack added to the KMS strip bound |Im μ| ≤ β before rejecting.
pub const STRIP_TOL: f64 = 1e-9;

/// Highest cumulant order the radial reduction is exercised for.
pub const MAX_CUMULANT: usize = 8;

/// Errors from field-module computations.
#[derive(Debug, Error)]
pub enum FieldError {
    /// A configuration value violates its documented domain.
    #[error("invalid field configuration: {context}")]
    InvalidConfig { context: String },
    /// Adaptive quadrature spent its panel budget before reaching tolerance.
    #[error("quadrature failed to converge: {context}")]
    QuadratureNonConvergence { context: String },
    /// μ left the strip where the KMS analytic continuation is defined.
    #[error("Im μ = {im_mu} outside the KMS strip |Im μ| ≤ β = {beta}")]
    StripViolation { im_mu: f64, beta: f64 },
    /// The μ window implied by the requested W window truncates the
    /// characteristic function while it is still visibly nonzero.
    #[error(
        "characteristic magnitude {boundary_magnitude:.3e} at the μ window \
         boundary exceeds 1e-8; widen the W window"
    )]
    WindowTooNarrow { boundary_magnitude: f64 },
    /// The profile stores |transform|² only; a signed amplitude is needed.
    #[error("profile provides squared magnitudes only; phase information unavailable")]
    PhaseUnavailable,
    /// The time-domain switching function cannot be reconstructed.
    #[error("time-domain switching profile unavailable (tabulated |χ̃|² has no phase)")]
    TimeProfileUnavailable,
    /// Cumulant order outside 1..=8.
    #[error("unsupported cumulant order j = {j} (supported: 1..=8)")]
    UnsupportedCumulant { j: usize },
    /// The inverted grid distribution failed a consistency invariant.
    #[error("inversion output failed validation: {context}")]
    InversionInconsistent { context: String },
    /// A tabulated-profile document could not be parsed.
    #[error("profile parse error at line {line}: {context}")]
    ProfileParse { line: usize, context: String },
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// Squared-magnitude spectral profile of a switching or smearing function.
///
/// The argument is a frequency ω for switching transforms χ̃ and a radial
/// wavenumber k for smearing transforms F̃. A gaussian profile stores the
/// time/space-domain amplitude and width; its transform is the closed form
/// A·w·√π·e^{−w²x²/4}. A tabulated profile stores samples of |transform|²
/// with linear interpolation, zero outside the sampled range (compact
/// support).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralProfile {
    /// χ(t) = A e^{−t²/w²} (or F(x) = A e^{−x²/w²}), transform real positive.
    Gaussian { amplitude: f64, width: f64 },
    /// Samples (argument, |transform|²) with strictly increasing arguments.
    Tabulated { args: Vec<f64>, squared: Vec<f64> },
}

impl SpectralProfile {
    /// Validate the profile's domain constraints.
    pub fn validate(&self) -> Result<(), FieldError> {
        match self {
            SpectralProfile::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() || !width.is_finite() || *width <= 0.0 {
                    return Err(FieldError::InvalidConfig {
                        context: format!(
                            "gaussian profile needs finite amplitude and width > 0, \
                             got A = {amplitude}, w = {width}"
                        ),
                    });
                }
            }
            SpectralProfile::Tabulated { args, squared } => {
                if args.len() != squared.len() || args.len() < 2 {
                    return Err(FieldError::InvalidConfig {
                        context: format!(
                            "tabulated profile needs ≥ 2 matched samples, got {} args \
                             and {} values",
                            args.len(),
                            squared.len()
                        ),
                    });
                }
                for pair in args.windows(2) {
                    // Negated form so NaN arguments also fail validation.
                    #[allow(clippy::neg_cmp_op_on_partial_ord)]
                    if !(pair[1] > pair[0]) {
                        return Err(FieldError::InvalidConfig {
                            context: format!(
                                "tabulated arguments must strictly increase \
                                 ({} then {})",
                                pair[0], pair[1]
                            ),
                        });
                    }
                }
                if args.iter().any(|a| !a.is_finite())
                    || squared.iter().any(|s| !s.is_finite() || *s < 0.0)
                {
                    return Err(FieldError::InvalidConfig {
                        context: "tabulated samples must be finite with |·|² ≥ 0".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// |transform|² at the given argument.
    pub fn squared_transform(&self, x: f64) -> f64 {
        match self {
            SpectralProfile::Gaussian { amplitude, width } => {
                let aw = amplitude * width;
                aw * aw * std::f64::consts::PI * (-0.5 * width * width * x * x).exp()
            }
            SpectralProfile::Tabulated { args, squared } => {
                if x < args[0] || x > *args.last().unwrap() {
                    return 0.0;
                }
                let hi = args.partition_point(|&a| a < x).min(args.len() - 1).max(1);
                let (x0, x1) = (args[hi - 1], args[hi]);
                let (y0, y1) = (squared[hi - 1], squared[hi]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Signed transform amplitude.
    ///
    /// # Errors
    /// [`FieldError::PhaseUnavailable`] for tabulated profiles, which carry
    /// magnitudes only.
    pub fn transform(&self, x: f64) -> Result<f64, FieldError> {
        match self {
            SpectralProfile::Gaussian { amplitude, width } => Ok(amplitude
                * width
                * std::f64::consts::PI.sqrt()
                * (-0.25 * width * width * x * x).exp()),
            SpectralProfile::Tabulated { .. } => Err(FieldError::PhaseUnavailable),
        }
    }

    /// End of compact support, when the profile has one.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            SpectralProfile::Gaussian { .. } => None,
            SpectralProfile::Tabulated { args, .. } => args.last().copied(),
        }
    }
}

/// Which physical role a tabulated profile document declares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileRole {
    /// Time-switching squared transform |χ̃(ω)|².
    Chi,
    /// Spatial-smearing squared transform |F̃(k)|².
    F,
}

/// Parse a tabulated-profile CSV document.
///
/// Format: a header line `# profile: chi, units: natural` (or `f`), then
/// two-column rows `argument,squared-magnitude` with strictly increasing
/// arguments; the last row ends the compact support.
pub fn parse_profile_csv(text: &str) -> Result<(ProfileRole, SpectralProfile), FieldError> {
    let mut role = None;
    let mut args = Vec::new();
    let mut squared = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if role.is_none() {
                let rest = rest.trim();
                let body = rest.strip_prefix("profile:").ok_or(FieldError::ProfileParse {
                    line: idx + 1,
                    context: "header must read `# profile: chi|f, units: natural`".into(),
                })?;
                let mut parts = body.split(',').map(str::trim);
                role = Some(match parts.next() {
                    Some("chi") => ProfileRole::Chi,
                    Some("f") => ProfileRole::F,
                    other => {
                        return Err(FieldError::ProfileParse {
                            line: idx + 1,
                            context: format!("unknown profile role {other:?}"),
                        })
                    }
                });
                if parts.next() != Some("units: natural") {
                    return Err(FieldError::ProfileParse {
                        line: idx + 1,
                        context: "header must declare `units: natural`".into(),
                    });
                }
            }
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, s) = (cols.next(), cols.next());
        let parse = |v: Option<&str>| -> Result<f64, FieldError> {
            v.and_then(|t| t.parse::<f64>().ok())
                .ok_or(FieldError::ProfileParse {
                    line: idx + 1,
                    context: format!("expected `argument,squared` columns, got {line:?}"),
                })
        };
        args.push(parse(a)?);
        squared.push(parse(s)?);
    }
    let role = role.ok_or(FieldError::ProfileParse {
        line: 1,
        context: "missing `# profile:` header".into(),
    })?;
    let profile = SpectralProfile::Tabulated { args, squared };
    profile.validate()?;
    Ok((role, profile))
}

/// Time-domain switching function, needed only by [`phase_theta`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSwitching {
    /// χ(t) = A e^{−t²/w²}.
    Gaussian { amplitude: f64, width: f64 },
    /// Samples of χ(t) with strictly increasing times; linear interpolation,
    /// zero outside.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl TimeSwitching {
    /// Recover the time-domain switching from a spectral profile.
    ///
    /// # Errors
    /// [`FieldError::TimeProfileUnavailable`] for tabulated |χ̃|² profiles:
    /// squared magnitudes do not determine χ(t).
    pub fn from_spectral(p: &SpectralProfile) -> Result<Self, FieldError> {
        match p {
            SpectralProfile::Gaussian { amplitude, width } => Ok(TimeSwitching::Gaussian {
                amplitude: *amplitude,
                width: *width,
            }),
            SpectralProfile::Tabulated { .. } => Err(FieldError::TimeProfileUnavailable),
        }
    }

    /// Validate domain constraints.
    pub fn validate(&self) -> Result<(), FieldError> {
        match self {
            TimeSwitching::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() || !width.is_finite() || *width <= 0.0 {
                    return Err(FieldError::InvalidConfig {
                        context: "time switching needs finite amplitude and width > 0".into(),
                    });
                }
            }
            TimeSwitching::Sampled { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(FieldError::InvalidConfig {
                        context: "sampled switching needs ≥ 2 matched samples".into(),
                    });
                }
                // Negated form so NaN times also fail validation.
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if times.windows(2).any(|p| !(p[1] > p[0]))
                    || times.iter().chain(values).any(|v| !v.is_finite())
                {
                    return Err(FieldError::InvalidConfig {
                        context: "sampled switching needs finite values on strictly \
                                  increasing times"
                            .into(),
                    });
                }
            }
        }
        Ok(())
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            TimeSwitching::Gaussian { amplitude, width } => {
                amplitude * (-(t / width) * (t / width)).exp()
            }
            TimeSwitching::Sampled { times, values } => {
                if t < times[0] || t > *times.last().unwrap() {
                    return 0.0;
                }
                let hi = times.partition_point(|&a| a < t).min(times.len() - 1).max(1);
                let (t0, t1) = (times[hi - 1], times[hi]);
                let (y0, y1) = (values[hi - 1], values[hi]);
                y0 + (y1 - y0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Interval outside which χ(t) is zero or negligible (< 1e−18 relative).
    fn support(&self) -> (f64, f64) {
        match self {
            TimeSwitching::Gaussian { width, .. } => (-6.5 * width, 6.5 * width),
            TimeSwitching::Sampled { times, .. } => (times[0], *times.last().unwrap()),
        }
    }

    /// Autocorrelation C(s) = ∫ χ(t) χ(t−s) dt for s ≥ 0.
    fn autocorrelation(&self, s: f64) -> Result<f64, FieldError> {
        match self {
            TimeSwitching::Gaussian { amplitude, width } => {
                // Product of shifted gaussians integrates in closed form.
                Ok(amplitude
                    * amplitude
                    * width
                    * (0.5 * std::f64::consts::PI).sqrt()
                    * (-0.5 * (s / width) * (s / width)).exp())
            }
            TimeSwitching::Sampled { times, .. } => {
                // The product of two piecewise-linear functions is piecewise
                // quadratic between breakpoints, so Simpson per cell is exact.
                let t0 = times[0];
                let t1 = *times.last().unwrap();
                let lo = t0 + s;
                if lo >= t1 {
                    return Ok(0.0);
                }
                let mut cuts: Vec<f64> = Vec::with_capacity(2 * times.len() + 2);
                for &t in times {
                    if t > lo && t < t1 {
                        cuts.push(t);
                    }
                    let shifted = t + s;
                    if shifted > lo && shifted < t1 {
                        cuts.push(shifted);
                    }
                }
                cuts.push(lo);
                cuts.push(t1);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                let f = |t: f64| self.eval(t) * self.eval(t - s);
                let mut acc = 0.0;
                for pair in cuts.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    acc += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
                }
                Ok(acc)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Full description of one localized process on a thermal field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Spatial dimension, 1 ≤ n ≤ 3.
    pub n: u32,
    /// Field mass m ≥ 0 (energy units).
    pub m: f64,
    /// Inverse temperature β > 0.
    pub beta: f64,
    /// Coupling strength; enters every result through λ² exactly.
    pub lambda: f64,
    /// Switching profile |χ̃(ω)|².
    pub chi: SpectralProfile,
    /// Isotropic smearing profile |F̃(k)|².
    pub f: SpectralProfile,
}

impl FieldConfig {
    /// Construct and validate.
    pub fn new(
        n: u32,
        m: f64,
        beta: f64,
        lambda: f64,
        chi: SpectralProfile,
        f: SpectralProfile,
    ) -> Result<Self, FieldError> {
        let cfg = FieldConfig { n, m, beta, lambda, chi, f };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Validate every domain constraint.
    pub fn validate(&self) -> Result<(), FieldError> {
        if !(1..=3).contains(&self.n) {
            return Err(FieldError::InvalidConfig {
                context: format!("spatial dimension n = {} outside 1..=3", self.n),
            });
        }
        if !self.m.is_finite() || self.m < 0.0 {
            return Err(FieldError::InvalidConfig {
                context: format!("mass must be finite and ≥ 0, got {}", self.m),
            });
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(FieldError::InvalidConfig {
                context: format!("inverse temperature must be finite and > 0, got {}", self.beta),
            });
        }
        if !self.lambda.is_finite() {
            return Err(FieldError::InvalidConfig {
                context: "coupling λ must be finite".into(),
            });
        }
        self.chi.validate()?;
        self.f.validate()
    }

    /// Dispersion ω_k = √(m² + k²).
    pub fn omega(&self, k: f64) -> f64 {
        self.m.hypot(k)
    }

    /// Surface area Ω_{n−1} of the unit sphere in n dimensions.
    fn surface(&self) -> f64 {
        match self.n {
            1 => 2.0,
            2 => 2.0 * std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI,
        }
    }
}

// ---------------------------------------------------------------------------
// Thermal helpers
// ---------------------------------------------------------------------------

/// coth(x/2) = (eˣ+1)/(eˣ−1) for x > 0, series-stabilized near zero.
pub(crate) fn coth_half(x: f64) -> f64 {
    if x < 1e-2 {
        2.0 / x + x / 6.0 - x * x * x / 360.0
    } else {
        1.0 + 2.0 / x.exp_m1()
    }
}

/// Radial spectral weight g(k) of Eq.-26 type integrals.
pub fn radial_weight(cfg: &FieldConfig, k: f64) -> f64 {
    let omega = cfg.omega(k);
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(cfg.n as i32);
    cfg.lambda * cfg.lambda * cfg.surface() * k.powi(cfg.n as i32 - 1)
        * cfg.chi.squared_transform(omega)
        * cfg.f.squared_transform(k)
        / (2.0 * two_pi_n)
}

/// Radial cutoff: compact tabulated support when available, otherwise an
/// octave scan of the supplied non-negative envelope.
fn spectral_cutoff<F: Fn(f64) -> f64>(
    cfg: &FieldConfig,
    envelope: F,
    context: &str,
) -> Result<f64, FieldError> {
    let mut bound: Option<f64> = cfg.f.support_end();
    if let Some(omega_end) = cfg.chi.support_end() {
        let k_end = (omega_end * omega_end - cfg.m * cfg.m).max(0.0).sqrt();
        bound = Some(bound.map_or(k_end, |b| b.min(k_end)));
    }
    match bound {
        Some(b) => Ok(b),
        None => decay_cutoff(envelope, context),
    }
}

// ---------------------------------------------------------------------------
// Cumulants
// ---------------------------------------------------------------------------

/// Work cumulants κ_1..κ_J.
#[derive(Debug, Clone, Serialize)]
pub struct CumulantVector {
    /// kappa[j−1] holds κ_j (units energy^j). Every entry is ≥ 0.
    pub kappa: Vec<f64>,
}

/// j-th work cumulant: κ_j = ∫ g ω^{j−1} dk for odd j, with an extra
/// coth(βω/2) thermal weight for even j.
pub fn cumulant_work(cfg: &FieldConfig, j: usize) -> Result<f64, FieldError> {
    cfg.validate()?;
    if !(1..=MAX_CUMULANT).contains(&j) {
        return Err(FieldError::UnsupportedCumulant { j });
    }
    let even = j % 2 == 0;
    let beta = cfg.beta;
    let integrand = |k: f64| {
        let omega = cfg.omega(k);
        let base = radial_weight(cfg, k) * omega.powi(j as i32 - 1);
        if even {
            base * coth_half(beta * omega)
        } else {
            base
        }
    };
    let context = format!("cumulant κ_{j}");
    let k_max = spectral_cutoff(cfg, |k| integrand(k).abs(), &context)?;
    let value = integrate(integrand, 0.0, k_max, ABS_TOL, REL_TOL, &context)?;
    // The integrand is non-negative and all Kronrod weights are positive, so
    // a negative result can only be a logic bug.
    debug_assert!(value >= 0.0, "cumulant κ_{j} came out negative: {value}");
    Ok(value)
}

/// κ_1..κ_{j_max} in one vector.
pub fn cumulant_vector(cfg: &FieldConfig, j_max: usize) -> Result<CumulantVector, FieldError> {
    if !(1..=MAX_CUMULANT).contains(&j_max) {
        return Err(FieldError::UnsupportedCumulant { j: j_max });
    }
    let kappa = (1..=j_max)
        .map(|j| cumulant_work(cfg, j))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CumulantVector { kappa })
}

/// Mean and variance of work — and, by the first law, of ΔÛ as well.
pub fn mean_variance(cfg: &FieldConfig) -> Result<(f64, f64), FieldError> {
    Ok((cumulant_work(cfg, 1)?, cumulant_work(cfg, 2)?))
}

/// ⟨W³⟩ − ⟨ΔÛ³⟩ = κ_3: the lowest-order first-law violation, a
/// profile-weighted ω² integral that grows as the process localizes.
pub fn third_moment_gap(cfg: &FieldConfig) -> Result<f64, FieldError> {
    cumulant_work(cfg, 3)
}

/// The identity-proportional shift in the exact ΔÛ expression. The same
/// integral as κ_1; returned under its thermodynamic name for clarity.
pub fn du_shift_term(cfg: &FieldConfig) -> Result<f64, FieldError> {
    cumulant_work(cfg, 1)
}

// ---------------------------------------------------------------------------
// Characteristic functions
// ---------------------------------------------------------------------------

/// Log of the work characteristic function on the KMS strip.
///
/// The exponent is ∫ g(k)/ω · [i sin(ωμ) + coth(βω/2)(cos(ωμ) − 1)] dk. For
/// μ = x + iy the integrand is evaluated in a grouped form whose y = β value
/// is bit-for-bit the y = 0 value mirrored in x, so the Crooks identity
/// survives at round-off level rather than quadrature level:
///
/// ```text
/// Re = [ (cos ωx − 1)(e^{ω(y−β)} + e^{−ωy}) + (e^{ω(y−β)} − e^{−ωβ}) + (e^{−ωy} − 1) ] / (1 − e^{−βω})
/// Im = sin ωx · (e^{−ωy} − e^{ω(y−β)}) / (1 − e^{−βω})
/// ```
pub fn log_char_work(cfg: &FieldConfig, mu: Complex64) -> Result<Complex64, FieldError> {
    cfg.validate()?;
    if !(mu.re.is_finite() && mu.im.is_finite()) {
        return Err(FieldError::InvalidConfig {
            context: "μ must be finite".into(),
        });
    }
    if mu.im.abs() > cfg.beta + STRIP_TOL {
        return Err(FieldError::StripViolation {
            im_mu: mu.im,
            beta: cfg.beta,
        });
    }
    let (x, y) = (mu.re, mu.im);
    let beta = cfg.beta;
    let integrand = |k: f64| {
        let omega = cfg.omega(k);
        let g = radial_weight(cfg, k);
        if g == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let bw = beta * omega;
        let u = omega * y;
        let den = -(-bw).exp_m1(); // 1 − e^{−βω}
        let e_up = (u - bw).exp(); // e^{ω(y−β)} ≤ 1 on the strip
        let e_dn = (-u).exp();
        let half_sin = (0.5 * omega * x).sin();
        let cos_m1 = -2.0 * half_sin * half_sin;
        let re_num = cos_m1 * (e_up + e_dn) + (e_up - (-bw).exp()) + (-u).exp_m1();
        let im_num = if (2.0 * u - bw).abs() < 1.0 {
            -e_dn * (2.0 * u - bw).exp_m1() * (omega * x).sin()
        } else {
            (e_dn - e_up) * (omega * x).sin()
        };
        Complex64::new(re_num / den, im_num / den) * (g / omega)
    };
    // Envelope bound: |term|/ω ≤ e^{ω|y|}(|μ| + (1/β + ω/2)|μ|²), finite for
    // every ω including ω → 0.
    let mu_abs = mu.norm();
    let y_abs = y.abs();
    let envelope = |k: f64| {
        let omega = cfg.omega(k);
        radial_weight(cfg, k)
            * (omega * y_abs).exp()
            * (mu_abs + (1.0 / beta + 0.5 * omega) * mu_abs * mu_abs)
    };
    let k_max = spectral_cutoff(cfg, envelope, "work characteristic exponent")?;
    integrate_complex(
        integrand,
        0.0,
        k_max,
        ABS_TOL,
        REL_TOL,
        "work characteristic exponent",
    )
}

/// Work characteristic function on the KMS strip |Im μ| ≤ β.
pub fn char_work(cfg: &FieldConfig, mu: Complex64) -> Result<Complex64, FieldError> {
    Ok(log_char_work(cfg, mu)?.exp())
}

/// Characteristic function of ΔÛ: the Gaussian exp(iμκ_1 − ½μ²κ_2), entire
/// in μ. (A frequently quoted form of this exponent drops the ½ on the μ²
/// term; the form here is the one that reproduces the first-law variance —
/// see the README erratum note.)
pub fn char_du(cfg: &FieldConfig, mu: Complex64) -> Result<Complex64, FieldError> {
    let (k1, k2) = mean_variance(cfg)?;
    Ok((Complex64::i() * mu * k1 - 0.5 * mu * mu * k2).exp())
}

/// Max over the real grid of |P̃_W(μ + iβ) − P̃_W(−μ)| — the cyclic-process
/// Crooks identity, which the KMS continuation satisfies exactly.
pub fn crooks_identity_check(cfg: &FieldConfig, mu_grid: &[f64]) -> Result<f64, FieldError> {
    let mut worst: f64 = 0.0;
    for &mu in mu_grid {
        let up = char_work(cfg, Complex64::new(mu, cfg.beta))?;
        let reflected = char_work(cfg, Complex64::new(-mu, 0.0))?;
        worst = worst.max((up - reflected).norm());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Raw moments and the domination check
// ---------------------------------------------------------------------------

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Raw moments m_0..m_J from cumulants via the standard recursion
/// m_j = Σ_{l=0}^{j−1} C(j−1, l) κ_{l+1} m_{j−1−l}.
pub(crate) fn raw_moments_from_cumulants(kappa: &[f64]) -> Vec<f64> {
    let j_max = kappa.len();
    let mut m = vec![0.0; j_max + 1];
    m[0] = 1.0;
    for j in 1..=j_max {
        m[j] = (0..j)
            .map(|l| binomial(j - 1, l) * kappa[l] * m[j - 1 - l])
            .sum();
    }
    m
}

/// One row of the moment-domination comparison.
#[derive(Debug, Clone, Serialize)]
pub struct MomentComparison {
    /// Moment order.
    pub j: usize,
    /// ⟨W^j⟩ from the full cumulant set.
    pub work_moment: f64,
    /// ⟨ΔÛ^j⟩ from the Gaussian (κ_1, κ_2) alone.
    pub du_moment: f64,
    /// work_moment − du_moment; nonnegative for every order.
    pub gap: f64,
}

/// Raw-moment comparison ⟨W^j⟩ vs ⟨ΔÛ^j⟩ for j = 1..=j_max: work moments use
/// κ_1..κ_j, the Gaussian ΔÛ moments use κ_1, κ_2 only.
pub fn moment_inequality_check(
    cfg: &FieldConfig,
    j_max: usize,
) -> Result<Vec<MomentComparison>, FieldError> {
    let kappa = cumulant_vector(cfg, j_max)?.kappa;
    let work = raw_moments_from_cumulants(&kappa);
    let mut du_kappa = vec![0.0; j_max];
    du_kappa[0] = kappa[0];
    if j_max > 1 {
        du_kappa[1] = kappa[1];
    }
    let du = raw_moments_from_cumulants(&du_kappa);
    Ok((1..=j_max)
        .map(|j| MomentComparison {
            j,
            work_moment: work[j],
            du_moment: du[j],
            gap: work[j] - du[j],
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Grid inversion
// ---------------------------------------------------------------------------

/// Work quasi-distribution density sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct GridDistribution {
    /// Uniform W grid (energy units).
    pub w_values: Vec<f64>,
    /// Density at each grid point (1/energy). The imaginary part is
    /// reported, never discarded; for KMS inputs it vanishes within 1e−6.
    pub density: Vec<Complex64>,
}

impl GridDistribution {
    /// Grid spacing.
    pub fn step(&self) -> f64 {
        self.w_values[1] - self.w_values[0]
    }

    fn trapezoid<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let n = self.w_values.len();
        let sum: f64 = (0..n).map(&f).sum();
        (sum - 0.5 * (f(0) + f(n - 1))) * self.step()
    }

    /// Trapezoid normalization ∫ Re ρ(W) dW.
    pub fn norm(&self) -> f64 {
        self.trapezoid(|l| self.density[l].re)
    }

    /// Trapezoid mean of the real density.
    pub fn mean(&self) -> f64 {
        self.trapezoid(|l| self.w_values[l] * self.density[l].re)
    }

    /// Trapezoid central variance of the real density.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.trapezoid(|l| (self.w_values[l] - mean).powi(2) * self.density[l].re)
    }

    /// Trapezoid skewness (third central moment over variance^{3/2}).
    pub fn skewness(&self) -> f64 {
        let mean = self.mean();
        let third = self.trapezoid(|l| (self.w_values[l] - mean).powi(3) * self.density[l].re);
        third / self.variance().powf(1.5)
    }

    /// Largest |Im density| on the grid.
    pub fn max_imag(&self) -> f64 {
        self.density.iter().fold(0.0, |m, d| m.max(d.im.abs()))
    }
}

/// Invert the work characteristic function to a density on [w_min, w_max].
///
/// The conjugate μ grid has spacing Δμ = 2π/(w_max − w_min) and N points,
/// so the inversion is a single forward FFT of the phase-shifted samples.
/// Degenerate configs (κ_2 = 0, a point mass) skip the boundary-decay check:
/// their characteristic function never decays, yet the discrete inversion is
/// exact on the grid.
///
/// # Errors
/// [`FieldError::InvalidConfig`] for a malformed window or N (need a power
/// of two ≥ 256 and coverage of κ_1 ± 8√κ_2);
/// [`FieldError::WindowTooNarrow`] when |P̃| at the μ boundary exceeds 1e−8;
/// [`FieldError::InversionInconsistent`] when the result violates its
/// normalization, moment-match, or realness invariants.
pub fn dist_work_grid(
    cfg: &FieldConfig,
    w_min: f64,
    w_max: f64,
    n_grid: usize,
) -> Result<GridDistribution, FieldError> {
    cfg.validate()?;
    if !w_min.is_finite() || !w_max.is_finite() || w_max <= w_min {
        return Err(FieldError::InvalidConfig {
            context: format!("window [{w_min}, {w_max}] is not an interval"),
        });
    }
    if n_grid < 256 || !n_grid.is_power_of_two() {
        return Err(FieldError::InvalidConfig {
            context: format!("grid size {n_grid} must be a power of two ≥ 256"),
        });
    }
    let (k1, k2) = mean_variance(cfg)?;
    let sigma = k2.sqrt();
    if w_min > k1 - 8.0 * sigma || w_max < k1 + 8.0 * sigma {
        return Err(FieldError::InvalidConfig {
            context: format!(
                "window [{w_min}, {w_max}] must cover κ_1 ± 8√κ_2 = \
                 [{}, {}]",
                k1 - 8.0 * sigma,
                k1 + 8.0 * sigma
            ),
        });
    }

    let span = w_max - w_min;
    let d_mu = 2.0 * std::f64::consts::PI / span;
    let d_w = span / n_grid as f64;
    let half = 0.5 * n_grid as f64;

    use rayon::prelude::*;
    let samples: Vec<Complex64> = (0..n_grid)
        .into_par_iter()
        .map(|j| char_work(cfg, Complex64::new((j as f64 - half) * d_mu, 0.0)))
        .collect::<Result<_, _>>()?;

    let degenerate = k2 <= 1e-14;
    if !degenerate {
        let edge = samples[0].norm().max(samples[n_grid - 1].norm());
        if edge > 1e-8 {
            return Err(FieldError::WindowTooNarrow {
                boundary_magnitude: edge,
            });
        }
    }

    // density(W_l) = (Δμ/2π)(−1)^l Σ_j [P̃(μ_j) e^{−iμ_j w_min}] e^{−2πijl/N}.
    let mut buffer: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(j, &c)| c * Complex64::new(0.0, -(j as f64 - half) * d_mu * w_min).exp())
        .collect();
    rustfft::FftPlanner::<f64>::new()
        .plan_fft_forward(n_grid)
        .process(&mut buffer);

    let scale = d_mu / (2.0 * std::f64::consts::PI);
    let density: Vec<Complex64> = buffer
        .iter()
        .enumerate()
        .map(|(l, &v)| v * scale * if l % 2 == 1 { -1.0 } else { 1.0 })
        .collect();
    let w_values: Vec<f64> = (0..n_grid).map(|l| w_min + l as f64 * d_w).collect();
    let dist = GridDistribution { w_values, density };

    let norm = dist.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(FieldError::InversionInconsistent {
            context: format!("density integrates to {norm}, want 1 ± 1e−6"),
        });
    }
    let max_imag = dist.max_imag();
    if max_imag > 1e-6 {
        return Err(FieldError::InversionInconsistent {
            context: format!("KMS density grew an imaginary part of {max_imag:.3e}"),
        });
    }
    if !degenerate {
        let mean_err = (dist.mean() - k1).abs() / k1.abs().max(1e-6);
        let var_err = (dist.variance() - k2).abs() / k2.max(1e-6);
        if mean_err > 1e-4 || var_err > 1e-4 {
            return Err(FieldError::InversionInconsistent {
                context: format!(
                    "grid moments drifted from cumulants (relative errors \
                     {mean_err:.3e}, {var_err:.3e})"
                ),
            });
        }
    }
    Ok(dist)
}

// ---------------------------------------------------------------------------
// Mode-resolved quantities
// ---------------------------------------------------------------------------

/// Coherent displacement amplitude of the radial mode k:
/// α(k) = −iλ χ̃(ω_k) F̃(k)* / √(2(2π)ⁿ ω_k).
///
/// # Errors
/// [`FieldError::PhaseUnavailable`] when either profile is tabulated
/// (magnitude-only); [`FieldError::InvalidConfig`] at the massless zero mode.
pub fn coherent_amplitude(cfg: &FieldConfig, k: f64) -> Result<Complex64, FieldError> {
    cfg.validate()?;
    if k < 0.0 {
        return Err(FieldError::InvalidConfig {
            context: format!("radial wavenumber must be ≥ 0, got {k}"),
        });
    }
    let omega = cfg.omega(k);
    if omega == 0.0 {
        return Err(FieldError::InvalidConfig {
            context: "coherent amplitude undefined at the massless zero mode".into(),
        });
    }
    let chi_t = cfg.chi.transform(omega)?;
    let f_t = cfg.f.transform(k)?; // real profiles: F̃* = F̃
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(cfg.n as i32);
    let denom = (2.0 * two_pi_n * omega).sqrt();
    Ok(Complex64::new(0.0, -1.0) * cfg.lambda * chi_t * f_t / denom)
}

/// Global phase θ of the Magnus-closed displacement:
/// θ = λ² ∫ dⁿk |F̃(k)|²/((2π)ⁿ ω_k) ∫dt ∫_{−∞}^{t} dt′ χ(t)χ(t′) sin(ω_k(t−t′)).
///
/// Physically inert, computed for completeness. The double time integral is
/// reduced through the autocorrelation C(s) = ∫χ(t)χ(t−s)dt to
/// ∫₀^∞ C(s) sin(ω s) ds, then integrated radially; nested adaptive
/// quadrature with overall tolerance 1e−6.
pub fn phase_theta(cfg: &FieldConfig, chi_time: &TimeSwitching) -> Result<f64, FieldError> {
    cfg.validate()?;
    chi_time.validate()?;
    let (t0, t1) = chi_time.support();
    let s_max = t1 - t0;
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(cfg.n as i32);
    let prefactor = cfg.lambda * cfg.lambda * cfg.surface() / two_pi_n;
    if prefactor == 0.0 || s_max <= 0.0 {
        return Ok(0.0);
    }

    // Radial cutoff, once: the envelope min(1/ω, s ∨ 1) matches the
    // |sin(ωs)|/ω tail bound while staying finite at the massless origin.
    let envelope = |k: f64| {
        let omega = cfg.omega(k);
        k.powi(cfg.n as i32 - 1)
            * cfg.f.squared_transform(k)
            * (1.0 / omega).min(s_max.max(1.0))
    };
    let k_max = match cfg.f.support_end() {
        Some(b) => b,
        None => decay_cutoff(envelope, "phase radial transform")?,
    };

    // The nested quadratures run inside Fn(f64) -> f64 closures; a failure
    // in an inner integral is stashed and re-raised after the outer loop.
    let failure: std::cell::Cell<Option<FieldError>> = std::cell::Cell::new(None);
    let radial = |s: f64| -> f64 {
        let result = integrate(
            |k| {
                let omega = cfg.omega(k);
                let w = k.powi(cfg.n as i32 - 1) * cfg.f.squared_transform(k);
                if w == 0.0 {
                    0.0
                } else {
                    w * (omega * s).sin() / omega
                }
            },
            0.0,
            k_max,
            1e-9,
            1e-7,
            "phase radial transform",
        );
        match result {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let outer = integrate(
        |s| {
            let c = match chi_time.autocorrelation(s) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e));
                    return 0.0;
                }
            };
            if c == 0.0 {
                0.0
            } else {
                c * radial(s)
            }
        },
        0.0,
        s_max,
        1e-8,
        1e-6,
        "phase time integral",
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(prefactor * outer)
}

/// Finite coefficient multiplying the divergent δ(0) in the naive (bare
/// Hamiltonian-difference) variance: 2 ∫ dⁿk ω_k² e^{βω_k}/(e^{βω_k}−1)²,
/// angularly reduced. Independent of λ and the profiles.
pub fn naive_variance_divergence_coefficient(cfg: &FieldConfig) -> Result<f64, FieldError> {
    cfg.validate()?;
    let beta = cfg.beta;
    let integrand = |k: f64| {
        let omega = cfg.omega(k);
        let bw = beta * omega;
        // e^{βω}/(e^{βω}−1)² = e^{−βω}/(1−e^{−βω})², stable at both ends.
        let em = (-bw).exp_m1();
        k.powi(cfg.n as i32 - 1) * omega * omega * (-bw).exp() / (em * em)
    };
    let k_max = decay_cutoff(|k| integrand(k).abs(), "naive variance coefficient")?;
    let value = integrate(
        integrand,
        0.0,
        k_max,
        ABS_TOL,
        REL_TOL,
        "naive variance coefficient",
    )?;
    Ok(2.0 * cfg.surface() * value)
}

/// Characteristic function of the work done on one bosonic mode of frequency
/// ω displaced by |α|², at inverse temperature β:
/// exp[|α|²(i sin ωμ + coth(βω/2)(cos ωμ − 1))].
///
/// This is the one-mode collapse of the field result and the bridge oracle
/// to the truncated-oscillator matrix computation.
pub fn single_mode_char(alpha_mod2: f64, omega: f64, beta: f64, mu: Complex64) -> Complex64 {
    let z = mu * omega;
    let half = 0.5 * z;
    let cos_m1 = -2.0 * half.sin() * half.sin();
    let term = Complex64::i() * z.sin() + coth_half(beta * omega) * cos_m1;
    (alpha_mod2 * term).exp()
}
