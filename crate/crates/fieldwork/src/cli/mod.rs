//! Scenario runner: parse declarative configs, execute finite-dimensional or
//! field computations, and emit machine-readable tables.
//!
//! Output conventions: grids and scans go to CSV with a versioned comment
//! header documenting the columns; scalar reports go to JSON with a
//! `version` field. All outputs are byte-deterministic for a fixed input
//! (and fixed seed, where sampling is involved).
//!
//! Exit codes: 0 success, 2 validation error (malformed config, domain
//! violation), 3 numerical non-convergence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{
    self, parse_profile_csv, FieldConfig, FieldError, ProfileRole, SpectralProfile,
    TimeSwitching,
};
use crate::qsys::{
    gibbs, log_partition_ratio, ComplexMatrix, DensityMatrix, HermitianOperator, ProcessSpec,
    QsysError, Tolerances, UnitaryOperator,
};
use crate::ramsey;
use crate::workdist::{
    self, DistributionKind, QuasiDistribution, WorkdistError,
};

/// Schema version stamped into configs and outputs.
pub const CONFIG_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// CLI-level error classification; carries the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input or domain violation — exit code 2.
    Validation(String),
    /// A computation failed to converge or violated a numerical invariant —
    /// exit code 3.
    Numerical(String),
}

impl CliError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// The message shown on stderr.
    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<QsysError> for CliError {
    fn from(e: QsysError) -> Self {
        match &e {
            QsysError::EigenFailure { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<WorkdistError> for CliError {
    fn from(e: WorkdistError) -> Self {
        match &e {
            WorkdistError::NumericalUnderflow { .. }
            | WorkdistError::FcsReconstruction { .. }
            | WorkdistError::NotNormalized { .. }
            | WorkdistError::WeightsNotReal { .. }
            | WorkdistError::NegativeWeight { .. }
            | WorkdistError::Qsys(QsysError::EigenFailure { .. }) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match &e {
            FieldError::QuadratureNonConvergence { .. }
            | FieldError::InversionInconsistent { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::Validation(format!(
            "{} at {}:{}:{}",
            e,
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

// ---------------------------------------------------------------------------
// Process documents
// ---------------------------------------------------------------------------

/// A complex matrix as rows of `[re, im]` entries.
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

fn matrix_from_doc(doc: &MatrixDoc, name: &str) -> Result<ComplexMatrix, CliError> {
    let d = doc.len();
    if d == 0 || doc.iter().any(|row| row.len() != d) {
        return Err(CliError::Validation(format!(
            "{name}: matrix must be square and nonempty"
        )));
    }
    Ok(ComplexMatrix::from_fn(d, d, |i, j| {
        Complex64::new(doc[i][j][0], doc[i][j][1])
    }))
}

/// Encode a matrix as rows of `[re, im]` pairs for a process document.
pub fn matrix_to_doc(m: &ComplexMatrix) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Declarative description of one finite-dimensional process.
///
/// `rho` defaults to the Gibbs state of `h0` at `beta` when omitted; at
/// least one of the two must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDocument {
    /// Schema version; must be 1.
    pub version: u32,
    /// Inverse temperature for Gibbs defaults and fluctuation checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Initial Hamiltonian.
    pub h0: MatrixDoc,
    /// Final Hamiltonian.
    pub htau: MatrixDoc,
    /// Evolution unitary.
    pub u: MatrixDoc,
    /// Initial state; omitted ⇒ Gibbs(h0, beta).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<MatrixDoc>,
}

impl ProcessDocument {
    /// Validate and assemble the process.
    pub fn build(&self) -> Result<ProcessSpec, CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if let Some(b) = self.beta {
            if !b.is_finite() || b < 0.0 {
                return Err(CliError::Validation(format!(
                    "beta must be finite and ≥ 0, got {b}"
                )));
            }
        }
        let tol = Tolerances::default();
        let h0 = HermitianOperator::new(matrix_from_doc(&self.h0, "h0")?, &tol)?;
        let htau = HermitianOperator::new(matrix_from_doc(&self.htau, "htau")?, &tol)?;
        let u = UnitaryOperator::new(matrix_from_doc(&self.u, "u")?, &tol)?;
        let rho = match (&self.rho, self.beta) {
            (Some(doc), _) => DensityMatrix::new(matrix_from_doc(doc, "rho")?, &tol)?,
            (None, Some(beta)) => gibbs(&h0, beta)?,
            (None, None) => {
                return Err(CliError::Validation(
                    "process needs either rho or beta (for the Gibbs default)".into(),
                ))
            }
        };
        Ok(ProcessSpec::new(rho, h0, htau, u)?)
    }

    /// The β this document carries, or a validation error naming `need`.
    pub fn require_beta(&self, need: &str) -> Result<f64, CliError> {
        self.beta.ok_or_else(|| {
            CliError::Validation(format!("{need} requires a beta field in the process config"))
        })
    }
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// Which quasi-distribution to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKindArg {
    /// Kirkwood–Dirac (complex weights).
    Rs,
    /// Real part of RS.
    Atmh,
    /// Full counting statistics.
    Fcs,
    /// Two-point projective measurement.
    Tpm,
    /// Convolution of initial/final energy measurements.
    DuConv,
    /// Spectral distribution of the Heisenberg difference operator.
    DuOp,
}

impl DistKindArg {
    fn to_kind(self) -> DistributionKind {
        match self {
            DistKindArg::Rs => DistributionKind::Rs,
            DistKindArg::Atmh => DistributionKind::Atmh,
            DistKindArg::Fcs => DistributionKind::Fcs,
            DistKindArg::Tpm => DistributionKind::Tpm,
            DistKindArg::DuConv => DistributionKind::DuConv,
            DistKindArg::DuOp => DistributionKind::DuOp,
        }
    }

    fn label(self) -> &'static str {
        match self {
            DistKindArg::Rs => "rs",
            DistKindArg::Atmh => "atmh",
            DistKindArg::Fcs => "fcs",
            DistKindArg::Tpm => "tpm",
            DistKindArg::DuConv => "du_conv",
            DistKindArg::DuOp => "du_op",
        }
    }
}

/// Finite-dimensional scenario payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FiniteOp {
    /// Support table of one quasi-distribution. (The field is named
    /// `distribution`, not `kind`: scenario documents already use `kind`
    /// as the top-level tag.)
    Dist { distribution: DistKindArg },
    /// Raw moments for every kind, orders 1..=jmax.
    Moments { jmax: usize },
    /// First-law gaps and the commutator expectation.
    FirstLaw,
}

/// Fluctuation-theorem checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum CheckOp {
    /// Detailed Crooks identity over a μ grid.
    Crooks { mu_min: f64, mu_max: f64, points: usize },
    /// Jarzynski equality against the partition ratio.
    Jarzynski,
    /// Variance relation between the two internal-energy notions.
    VarianceRelation,
}

/// Field-module tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FieldTask {
    /// Work cumulants κ_1..κ_jmax.
    Cumulants { jmax: usize },
    /// Characteristic function on a μ grid shifted by im_mu into the strip.
    Char { mu_min: f64, mu_max: f64, points: usize, im_mu: f64 },
    /// FFT inversion to a density grid.
    Dist { w_min: f64, w_max: f64, n_grid: usize },
    /// Crooks strip identity residuals on a symmetric grid.
    Crooks { mu_max: f64, points: usize },
    /// Raw-moment domination table.
    Inequality { jmax: usize },
    /// Global displacement phase θ.
    Theta,
    /// Finite coefficient of the naive-variance divergence.
    Divcoeff,
}

/// One declarative scenario; every variant round-trips through
/// serialize/parse bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Finite-dimensional distribution/moment computation.
    Finite {
        version: u32,
        process: ProcessDocument,
        #[serde(flatten)]
        op: FiniteOp,
    },
    /// Fluctuation-theorem check on a finite process.
    Check {
        version: u32,
        process: ProcessDocument,
        #[serde(flatten)]
        op: CheckOp,
    },
    /// Interference-protocol characteristic-function scan.
    Ramsey {
        version: u32,
        process: ProcessDocument,
        mu_min: f64,
        mu_max: f64,
        points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shots: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Thermal-field computation.
    Field {
        version: u32,
        config: FieldConfig,
        #[serde(flatten)]
        task: FieldTask,
    },
}

fn check_version(version: u32) -> Result<(), CliError> {
    if version != CONFIG_VERSION {
        return Err(CliError::Validation(format!(
            "unsupported scenario version {version} (expected {CONFIG_VERSION})"
        )));
    }
    Ok(())
}

fn linspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !min.is_finite() || !max.is_finite() || max < min || points == 0 {
        return Err(CliError::Validation(format!(
            "grid [{min}, {max}] × {points} is not a valid sampling"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points).map(|i| min + i as f64 * step).collect())
}

// ---------------------------------------------------------------------------
// Output documents
// ---------------------------------------------------------------------------

fn fmt_f64(v: f64) -> String {
    // Shortest round-trip formatting; deterministic for a given binary.
    format!("{v}")
}

fn csv_document(
    command: &str,
    comments: &[(&str, String)],
    columns: &[&str],
    rows: &[Vec<String>],
) -> String {
    let mut s = String::new();
    s.push_str("# fieldwork-csv v1\n");
    let _ = writeln!(s, "# command: {command}");
    for (k, v) in comments {
        let _ = writeln!(s, "# {k}: {v}");
    }
    let _ = writeln!(s, "# columns: {}", columns.join(","));
    let _ = writeln!(s, "{}", columns.join(","));
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn json_document<T: Serialize>(report: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Validation(format!("report serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn config_comment(cfg: &FieldConfig) -> (&'static str, String) {
    (
        "config",
        serde_json::to_string(cfg).expect("field config serializes"),
    )
}

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FirstLawReportDoc {
    version: u32,
    command: String,
    /// ⟨ΔÛ⟩ − ⟨W⟩ as [re, im]; zero for every process.
    mean_gap: [f64; 2],
    /// ⟨ΔÛ²⟩ − ⟨W²_RS⟩ as [re, im].
    var_gap: [f64; 2],
    /// ⟨[Û†Ĥ_τÛ, Ĥ₀]⟩ as [re, im]; purely imaginary, equals var_gap.
    commutator_expectation: [f64; 2],
    /// |var_gap − commutator_expectation|.
    identity_residual: f64,
}

#[derive(Serialize)]
struct JarzynskiReportDoc {
    version: u32,
    command: String,
    /// ⟨e^{−βW}⟩ as [re, im].
    average: [f64; 2],
    /// Tr e^{−βĤ_τ} / Tr e^{−βĤ₀}.
    partition_ratio: f64,
    /// |average − partition_ratio|.
    deviation: f64,
}

#[derive(Serialize)]
struct VarianceRelationReportDoc {
    version: u32,
    command: String,
    /// Residual of the finite-dimensional variance relation.
    residual: f64,
}

#[derive(Serialize)]
struct ThetaReportDoc {
    version: u32,
    command: String,
    /// Global displacement phase θ (radians).
    theta: f64,
}

#[derive(Serialize)]
struct DivcoeffReportDoc {
    version: u32,
    command: String,
    /// Finite coefficient multiplying δ(0) in the naive variance.
    coefficient: f64,
}

fn dist_rows(dist: &QuasiDistribution) -> Vec<Vec<String>> {
    dist.support()
        .iter()
        .map(|p| vec![fmt_f64(p.value), fmt_f64(p.weight.re), fmt_f64(p.weight.im)])
        .collect()
}

fn exec_finite(process: &ProcessDocument, op: &FiniteOp) -> Result<String, CliError> {
    let spec = process.build()?;
    match op {
        FiniteOp::Dist { distribution } => {
            let dist = match distribution.to_kind() {
                DistributionKind::Rs => workdist::dist_rs(&spec)?,
                DistributionKind::Atmh => workdist::dist_atmh(&spec)?,
                DistributionKind::Fcs => workdist::dist_fcs(&spec)?,
                DistributionKind::Tpm => workdist::dist_tpm(&spec)?,
                DistributionKind::DuConv => workdist::dist_du_conv(&spec)?,
                DistributionKind::DuOp => workdist::dist_du_op(&spec)?,
            };
            Ok(csv_document(
                "finite dist",
                &[
                    ("distribution", distribution.label().to_string()),
                    ("degeneracy_merged", dist.degeneracy_merged.to_string()),
                    (
                        "conditioning_fallback",
                        dist.conditioning_fallback.to_string(),
                    ),
                ],
                &["value", "weight_re", "weight_im"],
                &dist_rows(&dist),
            ))
        }
        FiniteOp::Moments { jmax } => {
            if !(1..=4).contains(jmax) {
                return Err(CliError::Validation(format!(
                    "jmax must be in 1..=4 for finite moments, got {jmax}"
                )));
            }
            let kinds = [
                DistKindArg::Rs,
                DistKindArg::Atmh,
                DistKindArg::Fcs,
                DistKindArg::Tpm,
                DistKindArg::DuConv,
                DistKindArg::DuOp,
            ];
            let mut rows = Vec::new();
            for kind in kinds {
                for j in 1..=*jmax {
                    let m = workdist::moments(&spec, kind.to_kind(), j)?;
                    rows.push(vec![
                        kind.label().to_string(),
                        j.to_string(),
                        fmt_f64(m.re),
                        fmt_f64(m.im),
                    ]);
                }
            }
            Ok(csv_document(
                "finite moments",
                &[],
                &["distribution", "j", "moment_re", "moment_im"],
                &rows,
            ))
        }
        FiniteOp::FirstLaw => {
            let report = workdist::first_law_report(&spec)?;
            json_document(&FirstLawReportDoc {
                version: CONFIG_VERSION,
                command: "finite first-law".into(),
                mean_gap: [report.mean_gap.re, report.mean_gap.im],
                var_gap: [report.var_gap.re, report.var_gap.im],
                commutator_expectation: [
                    report.commutator_expectation.re,
                    report.commutator_expectation.im,
                ],
                identity_residual: (report.var_gap - report.commutator_expectation).norm(),
            })
        }
    }
}

fn exec_check(process: &ProcessDocument, op: &CheckOp) -> Result<String, CliError> {
    match op {
        CheckOp::Crooks { mu_min, mu_max, points } => {
            let beta = process.require_beta("check crooks")?;
            let spec = process.build()?;
            let grid = linspace(*mu_min, *mu_max, *points)?;
            let report = workdist::crooks_check(&spec.h0, &spec.htau, &spec.u, beta, &grid)?;
            let rows: Vec<Vec<String>> = report
                .mu_values
                .iter()
                .zip(&report.residuals)
                .map(|(&mu, &r)| vec![fmt_f64(mu), fmt_f64(r)])
                .collect();
            Ok(csv_document(
                "check crooks",
                &[
                    ("beta", fmt_f64(beta)),
                    (
                        "free_energy_factor",
                        fmt_f64(report.free_energy_factor),
                    ),
                    ("max_residual", fmt_f64(report.max_residual)),
                ],
                &["mu", "residual"],
                &rows,
            ))
        }
        CheckOp::Jarzynski => {
            let beta = process.require_beta("check jarzynski")?;
            let spec = process.build()?;
            let avg = workdist::jarzynski_value(&spec, beta)?;
            let ratio = log_partition_ratio(&spec.h0, &spec.htau, beta).exp();
            json_document(&JarzynskiReportDoc {
                version: CONFIG_VERSION,
                command: "check jarzynski".into(),
                average: [avg.re, avg.im],
                partition_ratio: ratio,
                deviation: (avg - Complex64::new(ratio, 0.0)).norm(),
            })
        }
        CheckOp::VarianceRelation => {
            let spec = process.build()?;
            let residual = workdist::du_variance_relation_check(&spec)?;
            json_document(&VarianceRelationReportDoc {
                version: CONFIG_VERSION,
                command: "check variance-relation".into(),
                residual,
            })
        }
    }
}

fn exec_ramsey(
    process: &ProcessDocument,
    mu_min: f64,
    mu_max: f64,
    points: usize,
    shots: Option<u64>,
    seed: Option<u64>,
) -> Result<String, CliError> {
    let spec = process.build()?;
    let grid = linspace(mu_min, mu_max, points)?;
    let mut comments: Vec<(&str, String)> = Vec::new();
    let scan = match shots {
        Some(n) => {
            if n == 0 {
                return Err(CliError::Validation("shots must be ≥ 1".into()));
            }
            let seed = seed.unwrap_or(0);
            comments.push(("shots", n.to_string()));
            comments.push(("seed", seed.to_string()));
            ramsey::scan_sampled(&spec, &grid, n, seed)
        }
        None => {
            comments.push(("shots", "exact".to_string()));
            ramsey::scan(&spec, &grid)
        }
    };
    let rows: Vec<Vec<String>> = scan
        .mu_values
        .iter()
        .zip(&scan.values)
        .map(|(&mu, v)| vec![fmt_f64(mu), fmt_f64(v.re), fmt_f64(v.im)])
        .collect();
    Ok(csv_document(
        "ramsey scan",
        &comments,
        &["mu", "char_re", "char_im"],
        &rows,
    ))
}

fn exec_field(config: &FieldConfig, task: &FieldTask) -> Result<String, CliError> {
    config.validate()?;
    match task {
        FieldTask::Cumulants { jmax } => {
            let v = field::cumulant_vector(config, *jmax)?;
            let rows: Vec<Vec<String>> = v
                .kappa
                .iter()
                .enumerate()
                .map(|(i, k)| vec![(i + 1).to_string(), fmt_f64(*k)])
                .collect();
            Ok(csv_document(
                "field cumulants",
                &[config_comment(config)],
                &["j", "kappa"],
                &rows,
            ))
        }
        FieldTask::Char { mu_min, mu_max, points, im_mu } => {
            let grid = linspace(*mu_min, *mu_max, *points)?;
            let rows = grid
                .iter()
                .map(|&x| {
                    let mu = Complex64::new(x, *im_mu);
                    let c = field::char_work(config, mu)?;
                    Ok(vec![
                        fmt_f64(x),
                        fmt_f64(*im_mu),
                        fmt_f64(c.re),
                        fmt_f64(c.im),
                    ])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(csv_document(
                "field char",
                &[config_comment(config)],
                &["mu_re", "mu_im", "char_re", "char_im"],
                &rows,
            ))
        }
        FieldTask::Dist { w_min, w_max, n_grid } => {
            let dist = field::dist_work_grid(config, *w_min, *w_max, *n_grid)?;
            let rows: Vec<Vec<String>> = dist
                .w_values
                .iter()
                .zip(&dist.density)
                .map(|(&w, d)| vec![fmt_f64(w), fmt_f64(d.re), fmt_f64(d.im)])
                .collect();
            Ok(csv_document(
                "field dist",
                &[
                    config_comment(config),
                    ("norm", fmt_f64(dist.norm())),
                    ("mean", fmt_f64(dist.mean())),
                    ("variance", fmt_f64(dist.variance())),
                ],
                &["w", "density_re", "density_im"],
                &rows,
            ))
        }
        FieldTask::Crooks { mu_max, points } => {
            let grid = linspace(-mu_max.abs(), mu_max.abs(), *points)?;
            let mut max_residual = 0.0f64;
            let mut rows = Vec::with_capacity(grid.len());
            for &mu in &grid {
                let up = field::char_work(config, Complex64::new(mu, config.beta))?;
                let reflected = field::char_work(config, Complex64::new(-mu, 0.0))?;
                let residual = (up - reflected).norm();
                max_residual = max_residual.max(residual);
                rows.push(vec![
                    fmt_f64(mu),
                    fmt_f64(up.re),
                    fmt_f64(up.im),
                    fmt_f64(reflected.re),
                    fmt_f64(reflected.im),
                    fmt_f64(residual),
                ]);
            }
            Ok(csv_document(
                "field crooks",
                &[config_comment(config), ("max_residual", fmt_f64(max_residual))],
                &[
                    "mu",
                    "continued_re",
                    "continued_im",
                    "reflected_re",
                    "reflected_im",
                    "residual",
                ],
                &rows,
            ))
        }
        FieldTask::Inequality { jmax } => {
            let table = field::moment_inequality_check(config, *jmax)?;
            let rows: Vec<Vec<String>> = table
                .iter()
                .map(|row| {
                    vec![
                        row.j.to_string(),
                        fmt_f64(row.work_moment),
                        fmt_f64(row.du_moment),
                        fmt_f64(row.gap),
                    ]
                })
                .collect();
            Ok(csv_document(
                "field inequality",
                &[config_comment(config)],
                &["j", "work_moment", "du_moment", "gap"],
                &rows,
            ))
        }
        FieldTask::Theta => {
            let switching = TimeSwitching::from_spectral(&config.chi)?;
            let theta = field::phase_theta(config, &switching)?;
            json_document(&ThetaReportDoc {
                version: CONFIG_VERSION,
                command: "field theta".into(),
                theta,
            })
        }
        FieldTask::Divcoeff => {
            let coefficient = field::naive_variance_divergence_coefficient(config)?;
            json_document(&DivcoeffReportDoc {
                version: CONFIG_VERSION,
                command: "field divcoeff".into(),
                coefficient,
            })
        }
    }
}

/// Execute one scenario and return its report document.
pub fn run_scenario(scenario: &Scenario) -> Result<String, CliError> {
    match scenario {
        Scenario::Finite { version, process, op } => {
            check_version(*version)?;
            exec_finite(process, op)
        }
        Scenario::Check { version, process, op } => {
            check_version(*version)?;
            exec_check(process, op)
        }
        Scenario::Ramsey { version, process, mu_min, mu_max, points, shots, seed } => {
            check_version(*version)?;
            exec_ramsey(process, *mu_min, *mu_max, *points, *shots, *seed)
        }
        Scenario::Field { version, config, task } => {
            check_version(*version)?;
            exec_field(config, task)
        }
    }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// One swept parameter: a dotted path into the field config and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    /// One of: m, beta, lambda, chi.amplitude, chi.width, f.amplitude,
    /// f.width.
    pub param: String,
    /// Values this axis takes, in order.
    pub values: Vec<f64>,
}

/// Cartesian sweep over field-config parameters.
///
/// Scenario index is row-major over the axes in document order (the first
/// axis varies slowest); rows are emitted in index order regardless of the
/// parallel execution schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    /// Schema version; must be 1.
    pub version: u32,
    /// Base field config every combination starts from.
    pub config: FieldConfig,
    /// Scalar task evaluated per combination.
    #[serde(flatten)]
    pub task: FieldTask,
    /// Swept parameters.
    pub axes: Vec<SweepAxis>,
}

fn apply_sweep_param(cfg: &mut FieldConfig, param: &str, value: f64) -> Result<(), CliError> {
    fn gaussian_slot<'a>(
        profile: &'a mut SpectralProfile,
        param: &str,
        want_width: bool,
    ) -> Result<&'a mut f64, CliError> {
        match profile {
            SpectralProfile::Gaussian { amplitude, width } => {
                Ok(if want_width { width } else { amplitude })
            }
            SpectralProfile::Tabulated { .. } => Err(CliError::Validation(format!(
                "sweep parameter {param} needs a gaussian profile"
            ))),
        }
    }
    match param {
        "m" => cfg.m = value,
        "beta" => cfg.beta = value,
        "lambda" => cfg.lambda = value,
        "chi.amplitude" => *gaussian_slot(&mut cfg.chi, param, false)? = value,
        "chi.width" => *gaussian_slot(&mut cfg.chi, param, true)? = value,
        "f.amplitude" => *gaussian_slot(&mut cfg.f, param, false)? = value,
        "f.width" => *gaussian_slot(&mut cfg.f, param, true)? = value,
        other => {
            return Err(CliError::Validation(format!(
                "unknown sweep parameter {other:?} (supported: m, beta, lambda, \
                 chi.amplitude, chi.width, f.amplitude, f.width)"
            )))
        }
    }
    Ok(())
}

/// Scalar outputs of one sweep cell.
fn sweep_outputs(cfg: &FieldConfig, task: &FieldTask) -> Result<Vec<f64>, CliError> {
    match task {
        FieldTask::Cumulants { jmax } => {
            Ok(field::cumulant_vector(cfg, *jmax)?.kappa)
        }
        FieldTask::Theta => {
            let switching = TimeSwitching::from_spectral(&cfg.chi)?;
            Ok(vec![field::phase_theta(cfg, &switching)?])
        }
        FieldTask::Divcoeff => {
            Ok(vec![field::naive_variance_divergence_coefficient(cfg)?])
        }
        _ => Err(CliError::Validation(
            "sweep supports the scalar tasks cumulants, theta, divcoeff \
             (grid tasks produce one table per scenario, not one row)"
                .into(),
        )),
    }
}

/// Expand and run a sweep; returns the aggregated CSV.
pub fn run_sweep(doc: &SweepDocument) -> Result<String, CliError> {
    check_version(doc.version)?;
    doc.config.validate()?;
    for axis in &doc.axes {
        if axis.values.is_empty() {
            return Err(CliError::Validation(format!(
                "sweep axis {} has no values",
                axis.param
            )));
        }
        if axis.values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!(
                "sweep axis {} contains a non-finite value",
                axis.param
            )));
        }
    }

    let total: usize = doc.axes.iter().map(|a| a.values.len()).product::<usize>().max(1);
    let mut combos: Vec<(usize, Vec<f64>, FieldConfig)> = Vec::with_capacity(total);
    for index in 0..total {
        let mut cfg = doc.config.clone();
        let mut coords = Vec::with_capacity(doc.axes.len());
        // Row-major: the first axis varies slowest.
        let mut rem = index;
        let mut strides: Vec<usize> = Vec::with_capacity(doc.axes.len());
        let mut acc = total;
        for axis in &doc.axes {
            acc /= axis.values.len();
            strides.push(acc);
        }
        for (axis, stride) in doc.axes.iter().zip(&strides) {
            let pos = rem / stride;
            rem %= stride;
            let v = axis.values[pos];
            coords.push(v);
            apply_sweep_param(&mut cfg, &axis.param, v)?;
        }
        cfg.validate()?;
        combos.push((index, coords, cfg));
    }

    use rayon::prelude::*;
    let results: Vec<Vec<f64>> = combos
        .par_iter()
        .map(|(_, _, cfg)| sweep_outputs(cfg, &doc.task))
        .collect::<Result<_, _>>()?;

    let output_columns: Vec<String> = match &doc.task {
        FieldTask::Cumulants { jmax } => (1..=*jmax).map(|j| format!("kappa_{j}")).collect(),
        FieldTask::Theta => vec!["theta".into()],
        FieldTask::Divcoeff => vec!["coefficient".into()],
        _ => unreachable!("sweep_outputs rejects grid tasks"),
    };
    let mut columns: Vec<String> = vec!["index".into()];
    columns.extend(doc.axes.iter().map(|a| a.param.clone()));
    columns.extend(output_columns);
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();

    let rows: Vec<Vec<String>> = combos
        .iter()
        .zip(&results)
        .map(|((index, coords, _), outputs)| {
            let mut row = vec![index.to_string()];
            row.extend(coords.iter().map(|v| fmt_f64(*v)));
            row.extend(outputs.iter().map(|v| fmt_f64(*v)));
            row
        })
        .collect();

    Ok(csv_document(
        "sweep",
        &[
            ("base", serde_json::to_string(&doc.config).expect("serializes")),
            ("scenarios", total.to_string()),
        ],
        &column_refs,
        &rows,
    ))
}

// ---------------------------------------------------------------------------
// Flag parsing
// ---------------------------------------------------------------------------

/// Parse `gaussian:A:w` or `tabulated:path.csv` into a profile.
fn parse_profile_flag(text: &str, role: ProfileRole) -> Result<SpectralProfile, CliError> {
    if let Some(rest) = text.strip_prefix("gaussian:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(CliError::Validation(format!(
                "gaussian profile flag must be gaussian:AMPLITUDE:WIDTH, got {text:?}"
            )));
        }
        let amplitude: f64 = parts[0]
            .parse()
            .map_err(|_| CliError::Validation(format!("bad amplitude {:?}", parts[0])))?;
        let width: f64 = parts[1]
            .parse()
            .map_err(|_| CliError::Validation(format!("bad width {:?}", parts[1])))?;
        let p = SpectralProfile::Gaussian { amplitude, width };
        p.validate()?;
        Ok(p)
    } else if let Some(path) = text.strip_prefix("tabulated:") {
        let path = PathBuf::from(path);
        let (file_role, profile) = parse_profile_csv(&read_text(&path)?)?;
        if file_role != role {
            return Err(CliError::Validation(format!(
                "{} declares role {:?}, expected {:?}",
                path.display(),
                file_role,
                role
            )));
        }
        Ok(profile)
    } else {
        Err(CliError::Validation(format!(
            "profile flag must start with gaussian: or tabulated:, got {text:?}"
        )))
    }
}

/// Field-config flags shared by every `field` subcommand.
#[derive(Debug, Args)]
pub struct FieldCfgArgs {
    /// Spatial dimension (1..=3).
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Field mass m ≥ 0.
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    /// Inverse temperature β > 0.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Coupling strength λ.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Switching profile: gaussian:A:w or tabulated:path.csv.
    #[arg(long, default_value = "gaussian:1:1")]
    chi: String,
    /// Smearing profile: gaussian:A:w or tabulated:path.csv.
    #[arg(long, default_value = "gaussian:1:1")]
    f: String,
}

impl FieldCfgArgs {
    fn build(&self) -> Result<FieldConfig, CliError> {
        let chi = parse_profile_flag(&self.chi, ProfileRole::Chi)?;
        let f = parse_profile_flag(&self.f, ProfileRole::F)?;
        Ok(FieldConfig::new(self.n, self.m, self.beta, self.lambda, chi, f)?)
    }
}

// ---------------------------------------------------------------------------
// Command tree
// ---------------------------------------------------------------------------

/// Work and internal-energy quasi-distributions for unitary processes.
//
// Leaf subcommands set `allow_negative_numbers` so grid bounds like
// `--mu-min -5` parse without the `=` form.
#[derive(Debug, Parser)]
#[command(name = "fieldwork", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Finite-dimensional process computations.
    Finite {
        #[command(subcommand)]
        cmd: FiniteCmd,
    },
    /// Fluctuation-theorem and variance-relation checks.
    Check {
        #[command(subcommand)]
        cmd: CheckCmd,
    },
    /// Interference-protocol characteristic-function reconstruction.
    Ramsey {
        #[command(subcommand)]
        cmd: RamseyCmd,
    },
    /// Thermal-field closed-form computations.
    Field {
        #[command(subcommand)]
        cmd: FieldCmd,
    },
    /// Cartesian parameter sweep over field configs.
    Sweep {
        /// Sweep document (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum FiniteCmd {
    /// Support table of one quasi-distribution.
    Dist {
        /// Process document (JSON).
        #[arg(long)]
        process: PathBuf,
        /// Which quasi-distribution to build.
        #[arg(long, value_enum)]
        kind: DistKindArg,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Raw moments of every distribution kind.
    Moments {
        #[arg(long)]
        process: PathBuf,
        /// Highest moment order (1..=4).
        #[arg(long, default_value_t = 2)]
        jmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First-law mean/variance gaps and the commutator expectation.
    FirstLaw {
        #[arg(long)]
        process: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum CheckCmd {
    /// Detailed Crooks identity over a μ grid.
    #[command(allow_negative_numbers = true)]
    Crooks {
        /// Process document (JSON) with a beta field.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = -5.0)]
        mu_min: f64,
        #[arg(long, default_value_t = 5.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Jarzynski equality against the partition ratio.
    Jarzynski {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variance relation between the two internal-energy notions.
    VarianceRelation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum RamseyCmd {
    /// Characteristic-function scan via the interference protocol.
    #[command(allow_negative_numbers = true)]
    Scan {
        #[arg(long)]
        process: PathBuf,
        #[arg(long, default_value_t = -10.0)]
        mu_min: f64,
        #[arg(long, default_value_t = 10.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Finite-shot simulation instead of exact expectations.
        #[arg(long)]
        shots: Option<u64>,
        /// RNG seed for --shots (default 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum FieldCmd {
    /// Work cumulants κ_1..κ_jmax.
    #[command(allow_negative_numbers = true)]
    Cumulants {
        #[command(flatten)]
        cfg: FieldCfgArgs,
        #[arg(long, default_value_t = 4)]
        jmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Characteristic function on a μ grid (optionally shifted into the strip).
    #[command(allow_negative_numbers = true)]
    Char {
        #[command(flatten)]
        cfg: FieldCfgArgs,
        #[arg(long, default_value_t = -10.0)]
        mu_min: f64,
        #[arg(long, default_value_t = 10.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Imaginary part of μ; |im_mu| ≤ β.
        #[arg(long, default_value_t = 0.0)]
        im_mu: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// FFT inversion to a work-density grid.
    #[command(allow_negative_numbers = true)]
    Dist {
        #[command(flatten)]
        cfg: FieldCfgArgs,
        /// Window start; default κ₁ − max(12√κ₂, 1).
        #[arg(long)]
        w_min: Option<f64>,
        /// Window end; default κ₁ + max(12√κ₂, 1).
        #[arg(long)]
        w_max: Option<f64>,
        /// Grid size (power of two ≥ 256).
        #[arg(long, default_value_t = 1024)]
        n_grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crooks strip-identity residuals on a symmetric μ grid.
    #[command(allow_negative_numbers = true)]
    Crooks {
        #[command(flatten)]
        cfg: FieldCfgArgs,
        #[arg(long, default_value_t = 5.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Raw-moment domination table ⟨W^j⟩ vs ⟨ΔÛ^j⟩.
    #[command(allow_negative_numbers = true)]
    Inequality {
        #[command(flatten)]
        cfg: FieldCfgArgs,
        #[arg(long, default_value_t = 8)]
        jmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Global displacement phase θ.
    #[command(allow_negative_numbers = true)]
    Theta {
        #[command(flatten)]
        cfg: FieldCfgArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite coefficient of the naive-variance divergence.
    #[command(allow_negative_numbers = true)]
    Divcoeff {
        #[command(flatten)]
        cfg: FieldCfgArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn load_process(path: &Path) -> Result<ProcessDocument, CliError> {
    parse_json(&read_text(path)?, path)
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            CliError::Validation(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn init_thread_pool() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("FIELDWORK_THREADS") {
        let n: usize = raw.parse().map_err(|_| {
            CliError::Validation(format!(
                "FIELDWORK_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
        if n == 0 {
            return Err(CliError::Validation(
                "FIELDWORK_THREADS must be ≥ 1".into(),
            ));
        }
        // A second initialization (tests, library callers) is harmless:
        // the pool is already running with the earlier setting.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_thread_pool()?;
    match cli.command {
        Command::Finite { cmd } => {
            let (scenario, out) = match cmd {
                FiniteCmd::Dist { process, kind, out } => (
                    Scenario::Finite {
                        version: CONFIG_VERSION,
                        process: load_process(&process)?,
                        op: FiniteOp::Dist { distribution: kind },
                    },
                    out,
                ),
                FiniteCmd::Moments { process, jmax, out } => (
                    Scenario::Finite {
                        version: CONFIG_VERSION,
                        process: load_process(&process)?,
                        op: FiniteOp::Moments { jmax },
                    },
                    out,
                ),
                FiniteCmd::FirstLaw { process, out } => (
                    Scenario::Finite {
                        version: CONFIG_VERSION,
                        process: load_process(&process)?,
                        op: FiniteOp::FirstLaw,
                    },
                    out,
                ),
            };
            emit(out.as_deref(), &run_scenario(&scenario)?)
        }
        Command::Check { cmd } => {
            let (scenario, out) = match cmd {
                CheckCmd::Crooks { config, mu_min, mu_max, points, out } => (
                    Scenario::Check {
                        version: CONFIG_VERSION,
                        process: load_process(&config)?,
                        op: CheckOp::Crooks { mu_min, mu_max, points },
                    },
                    out,
                ),
                CheckCmd::Jarzynski { config, out } => (
                    Scenario::Check {
                        version: CONFIG_VERSION,
                        process: load_process(&config)?,
                        op: CheckOp::Jarzynski,
                    },
                    out,
                ),
                CheckCmd::VarianceRelation { config, out } => (
                    Scenario::Check {
                        version: CONFIG_VERSION,
                        process: load_process(&config)?,
                        op: CheckOp::VarianceRelation,
                    },
                    out,
                ),
            };
            emit(out.as_deref(), &run_scenario(&scenario)?)
        }
        Command::Ramsey { cmd } => {
            let RamseyCmd::Scan { process, mu_min, mu_max, points, shots, seed, out } = cmd;
            let scenario = Scenario::Ramsey {
                version: CONFIG_VERSION,
                process: load_process(&process)?,
                mu_min,
                mu_max,
                points,
                shots,
                seed,
            };
            emit(out.as_deref(), &run_scenario(&scenario)?)
        }
        Command::Field { cmd } => {
            let (cfg_args, task, out) = match cmd {
                FieldCmd::Cumulants { cfg, jmax, out } => {
                    (cfg, FieldTask::Cumulants { jmax }, out)
                }
                FieldCmd::Char { cfg, mu_min, mu_max, points, im_mu, out } => {
                    (cfg, FieldTask::Char { mu_min, mu_max, points, im_mu }, out)
                }
                FieldCmd::Dist { cfg, w_min, w_max, n_grid, out } => {
                    let config = cfg.build()?;
                    let (w_lo, w_hi) = match (w_min, w_max) {
                        (Some(lo), Some(hi)) => (lo, hi),
                        _ => {
                            let (k1, k2) = field::mean_variance(&config)?;
                            let half = (12.0 * k2.sqrt()).max(1.0);
                            (
                                w_min.unwrap_or(k1 - half),
                                w_max.unwrap_or(k1 + half),
                            )
                        }
                    };
                    let scenario = Scenario::Field {
                        version: CONFIG_VERSION,
                        config,
                        task: FieldTask::Dist { w_min: w_lo, w_max: w_hi, n_grid },
                    };
                    return emit(out.as_deref(), &run_scenario(&scenario)?);
                }
                FieldCmd::Crooks { cfg, mu_max, points, out } => {
                    (cfg, FieldTask::Crooks { mu_max, points }, out)
                }
                FieldCmd::Inequality { cfg, jmax, out } => {
                    (cfg, FieldTask::Inequality { jmax }, out)
                }
                FieldCmd::Theta { cfg, out } => (cfg, FieldTask::Theta, out),
                FieldCmd::Divcoeff { cfg, out } => (cfg, FieldTask::Divcoeff, out),
            };
            let scenario = Scenario::Field {
                version: CONFIG_VERSION,
                config: cfg_args.build()?,
                task,
            };
            emit(out.as_deref(), &run_scenario(&scenario)?)
        }
        Command::Sweep { config, out } => {
            let doc: SweepDocument = parse_json(&read_text(&config)?, &config)?;
            emit(out.as_deref(), &run_sweep(&doc)?)
        }
    }
}

/// CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout with success; usage errors
            // go to stderr with the validation exit code.
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let _ = e.print();
                    2
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit_doc() -> ProcessDocument {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ProcessDocument {
            version: 1,
            beta: Some(1.0),
            h0: vec![
                vec![[0.0, 0.0], [0.0, 0.0]],
                vec![[0.0, 0.0], [1.0, 0.0]],
            ],
            htau: vec![
                vec![[0.0, 0.0], [0.0, 0.0]],
                vec![[0.0, 0.0], [1.0, 0.0]],
            ],
            u: vec![vec![[s, 0.0], [s, 0.0]], vec![[s, 0.0], [-s, 0.0]]],
            rho: None,
        }
    }

    fn field_scenario() -> Scenario {
        Scenario::Field {
            version: 1,
            config: FieldConfig {
                n: 1,
                m: 0.0,
                beta: 1.0,
                lambda: 1.0,
                chi: SpectralProfile::Gaussian { amplitude: 1.0, width: 1.0 },
                f: SpectralProfile::Gaussian { amplitude: 1.0, width: 1.0 },
            },
            task: FieldTask::Cumulants { jmax: 3 },
        }
    }

    #[test]
    fn scenarios_round_trip_bit_identically() {
        let scenarios = vec![
            field_scenario(),
            Scenario::Finite {
                version: 1,
                process: qubit_doc(),
                op: FiniteOp::Dist { distribution: DistKindArg::Tpm },
            },
            Scenario::Check {
                version: 1,
                process: qubit_doc(),
                op: CheckOp::Crooks { mu_min: -5.0, mu_max: 5.0, points: 11 },
            },
            Scenario::Ramsey {
                version: 1,
                process: qubit_doc(),
                mu_min: -1.0,
                mu_max: 1.0,
                points: 5,
                shots: Some(100),
                seed: Some(7),
            },
        ];
        for s in scenarios {
            let text = serde_json::to_string_pretty(&s).unwrap();
            let back: Scenario = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s, "parse(serialize) must be the identity");
            let again = serde_json::to_string_pretty(&back).unwrap();
            assert_eq!(again, text, "serialize must be stable byte-for-byte");
        }
    }

    #[test]
    fn nan_and_infinity_literals_are_rejected() {
        let text = r#"{"kind":"field","version":1,"config":{"n":1,"m":NaN,
            "beta":1.0,"lambda":1.0,
            "chi":{"gaussian":{"amplitude":1.0,"width":1.0}},
            "f":{"gaussian":{"amplitude":1.0,"width":1.0}}},
            "op":"theta"}"#;
        assert!(serde_json::from_str::<Scenario>(text).is_err());
        let inf = text.replace("NaN", "Infinity");
        assert!(serde_json::from_str::<Scenario>(&inf).is_err());
    }

    #[test]
    fn process_document_builds_with_gibbs_default() {
        let spec = qubit_doc().build().unwrap();
        assert_eq!(spec.dim(), 2);
        // Gibbs populations at β = 1, ε = 1.
        let z = 1.0 + (-1.0f64).exp();
        let rho = spec.rho.matrix();
        assert!((rho[(0, 0)].re - 1.0 / z).abs() < 1e-12);
        assert!((rho[(1, 1)].re - (-1.0f64).exp() / z).abs() < 1e-12);

        let mut no_state = qubit_doc();
        no_state.beta = None;
        assert!(matches!(no_state.build(), Err(CliError::Validation(_))));

        let mut bad_version = qubit_doc();
        bad_version.version = 2;
        assert!(matches!(bad_version.build(), Err(CliError::Validation(_))));
    }

    #[test]
    fn matrix_doc_round_trips() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| {
            Complex64::new(i as f64, j as f64)
        });
        let doc = matrix_to_doc(&m);
        let back = matrix_from_doc(&doc, "m").unwrap();
        assert_eq!(back, m);
        assert!(matrix_from_doc(&vec![vec![[0.0, 0.0]]; 2], "m").is_err());
    }

    #[test]
    fn finite_dist_emits_versioned_csv() {
        let scenario = Scenario::Finite {
            version: 1,
            process: qubit_doc(),
            op: FiniteOp::Dist { distribution: DistKindArg::Tpm },
        };
        let csv = run_scenario(&scenario).unwrap();
        assert!(csv.starts_with("# fieldwork-csv v1\n"));
        assert!(csv.contains("# command: finite dist\n"));
        assert!(csv.contains("# columns: value,weight_re,weight_im\n"));
        // Deterministic: identical rerun bytes.
        assert_eq!(run_scenario(&scenario).unwrap(), csv);
    }

    #[test]
    fn check_crooks_reports_small_residuals() {
        let scenario = Scenario::Check {
            version: 1,
            process: qubit_doc(),
            op: CheckOp::Crooks { mu_min: -3.0, mu_max: 3.0, points: 7 },
        };
        let csv = run_scenario(&scenario).unwrap();
        let max_line = csv
            .lines()
            .find(|l| l.starts_with("# max_residual:"))
            .expect("max_residual comment");
        let value: f64 = max_line.rsplit(':').next().unwrap().trim().parse().unwrap();
        assert!(value < 1e-10, "Crooks residual {value}");
    }

    #[test]
    fn field_cumulants_csv_matches_library_values() {
        let csv = run_scenario(&field_scenario()).unwrap();
        let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], "j,kappa");
        assert_eq!(lines.len(), 4);
        let first: Vec<&str> = lines[1].split(',').collect();
        let kappa1: f64 = first[1].parse().unwrap();
        assert!((kappa1 - std::f64::consts::PI.powf(1.5) / 4.0).abs() < 1e-8);
    }

    #[test]
    fn strip_violation_maps_to_validation_exit() {
        let err = run_scenario(&Scenario::Field {
            version: 1,
            config: match field_scenario() {
                Scenario::Field { config, .. } => config,
                _ => unreachable!(),
            },
            task: FieldTask::Char { mu_min: -1.0, mu_max: 1.0, points: 3, im_mu: 2.0 },
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sweep_rows_follow_index_order() {
        let doc = SweepDocument {
            version: 1,
            config: match field_scenario() {
                Scenario::Field { config, .. } => config,
                _ => unreachable!(),
            },
            task: FieldTask::Cumulants { jmax: 2 },
            axes: vec![
                SweepAxis { param: "beta".into(), values: vec![0.5, 2.0] },
                SweepAxis { param: "lambda".into(), values: vec![1.0, 2.0, 3.0] },
            ],
        };
        let csv = run_sweep(&doc).unwrap();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "index,beta,lambda,kappa_1,kappa_2");
        assert_eq!(rows.len(), 7, "2×3 scenarios plus header");
        // Row-major: first axis slowest.
        for (i, row) in rows[1..].iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            assert_eq!(cells[0], i.to_string());
            let beta: f64 = cells[1].parse().unwrap();
            let lambda: f64 = cells[2].parse().unwrap();
            assert_eq!(beta, [0.5, 2.0][i / 3]);
            assert_eq!(lambda, [1.0, 2.0, 3.0][i % 3]);
        }
        // λ² scaling of κ_1 within one β block.
        let k1 = |row: &str| -> f64 { row.split(',').nth(3).unwrap().parse().unwrap() };
        let base = k1(rows[1]);
        assert!((k1(rows[2]) - 4.0 * base).abs() < 1e-8 * base.max(1.0));
        assert!((k1(rows[3]) - 9.0 * base).abs() < 1e-8 * base.max(1.0));

        // Determinism across repeated runs.
        assert_eq!(run_sweep(&doc).unwrap(), csv);
    }

    #[test]
    fn sweep_rejects_unknown_parameters_and_grid_tasks() {
        let config = match field_scenario() {
            Scenario::Field { config, .. } => config,
            _ => unreachable!(),
        };
        let bad_param = SweepDocument {
            version: 1,
            config: config.clone(),
            task: FieldTask::Cumulants { jmax: 2 },
            axes: vec![SweepAxis { param: "n".into(), values: vec![1.0] }],
        };
        assert!(matches!(run_sweep(&bad_param), Err(CliError::Validation(_))));

        let grid_task = SweepDocument {
            version: 1,
            config,
            task: FieldTask::Char { mu_min: 0.0, mu_max: 1.0, points: 3, im_mu: 0.0 },
            axes: vec![SweepAxis { param: "beta".into(), values: vec![1.0] }],
        };
        assert!(matches!(run_sweep(&grid_task), Err(CliError::Validation(_))));
    }

    #[test]
    fn profile_flags_parse_both_forms() {
        let g = parse_profile_flag("gaussian:2.5:0.5", ProfileRole::Chi).unwrap();
        assert_eq!(
            g,
            SpectralProfile::Gaussian { amplitude: 2.5, width: 0.5 }
        );
        assert!(parse_profile_flag("gaussian:1", ProfileRole::Chi).is_err());
        assert!(parse_profile_flag("lorentzian:1:1", ProfileRole::Chi).is_err());
        assert!(parse_profile_flag("tabulated:/nonexistent/x.csv", ProfileRole::F).is_err());
    }
}
