//! Work and internal-energy-difference quasi-distributions on finite
//! Hilbert spaces, their moments, and fluctuation-theorem checks.
//!
//! Six distribution kinds are computed for a process (ρ, H₀, H_τ, U):
//!
//! * **RS** — the Kirkwood–Dirac work quasi-probability measured by the
//!   ancilla Ramsey scheme; complex weights in general.
//! * **ATMH** — its real part (Terletsky–Margenau–Hill); real weights, may
//!   be negative.
//! * **FCS** — the full-counting-statistics distribution defined by the
//!   half-angle split characteristic function; real weights on half-sum
//!   support points.
//! * **TPM** — the two-point projective-measurement work distribution; a
//!   true probability distribution.
//! * **DU_CONV** — the two-independent-measurements convolution of initial
//!   and final energies (internal-energy difference as classically sampled).
//! * **DU_OP** — the spectral distribution of the operator U†H_τU − H₀ in ρ.
//!
//! All supports are finite sets of energy gaps; degenerate eigenvalues are
//! merged onto one level (projectors summed over the eigenspace) so every
//! quantity is basis-choice independent.

mod chars;
mod moments;
mod theorems;

pub use chars::{char_atmh, char_fcs, char_rs, CharScan, ProcessChars};
pub use moments::{du_variance_relation_check, first_law_report, moments, FirstLawReport};
pub use theorems::{crooks_check, jarzynski_value, CrooksReport};

use crate::qsys::{ComplexMatrix, HermitianOperator, ProcessSpec, QsysError, Tolerances};
use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance (times the spectral span) below which two energies are
/// treated as one degenerate level.
pub const MERGE_TOL_REL: f64 = 1e-9;

/// Weights with modulus below this are dropped from supports after merging.
/// Small enough that the discarded mass never moves any 1e−10-level check.
const PRUNE_TOL: f64 = 1e-14;

/// Errors from distribution construction and theorem checks.
#[derive(Debug, Error)]
pub enum WorkdistError {
    /// Moment order outside the supported 1..=4 range.
    #[error("unsupported moment order j = {j} (supported: 1..=4)")]
    UnsupportedMoment { j: usize },
    /// A reverse characteristic function vanished beyond recovery.
    #[error("numerical underflow: |reverse characteristic value| = {magnitude:.3e} at μ = {mu}")]
    NumericalUnderflow { mu: f64, magnitude: f64 },
    /// Weights failed the Σw = 1 invariant.
    #[error("distribution not normalized: Σ weights = {sum}")]
    NotNormalized { sum: Complex64 },
    /// A kind that must be real carried an imaginary part.
    #[error("weights of a {kind:?} distribution are not real: max |Im| = {max_imag:.3e}")]
    WeightsNotReal { kind: DistributionKind, max_imag: f64 },
    /// A true-probability kind carried a negative weight.
    #[error("negative weight {weight:.3e} in a {kind:?} distribution")]
    NegativeWeight { kind: DistributionKind, weight: f64 },
    /// The FCS support reconstruction could not be completed.
    #[error("FCS reconstruction failed: {context}")]
    FcsReconstruction { context: String },
    /// Preconditions on the process were violated.
    #[error("invalid process: {context}")]
    InvalidProcess { context: String },
    /// Underlying linear-algebra failure.
    #[error(transparent)]
    Qsys(#[from] QsysError),
}

/// Which quasi-distribution a support set represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Ramsey-scheme Kirkwood–Dirac work distribution (complex weights).
    Rs,
    /// Real part of RS (Terletsky–Margenau–Hill).
    Atmh,
    /// Full-counting-statistics work distribution.
    Fcs,
    /// Two-point projective measurement work distribution.
    Tpm,
    /// Convolution of independently measured initial/final energies.
    DuConv,
    /// Spectral distribution of the Heisenberg difference operator.
    DuOp,
}

impl DistributionKind {
    /// Kinds whose weights are mathematically real.
    pub fn is_real(self) -> bool {
        !matches!(self, DistributionKind::Rs)
    }

    /// Kinds that are true probability distributions (real and nonnegative).
    pub fn is_probability(self) -> bool {
        matches!(self, DistributionKind::Tpm | DistributionKind::DuConv)
    }
}

/// One support point: an energy value and its (quasi-)probability weight.
#[derive(Debug, Clone, Copy)]
pub struct SupportPoint {
    /// Energy (work or internal-energy difference).
    pub value: f64,
    /// Complex weight; real for all kinds except RS.
    pub weight: Complex64,
}

/// A finite-support quasi-probability distribution, normalized to 1.
///
/// Support values are ascending and distinct (merged within
/// [`MERGE_TOL_REL`] times the value span); weights below the pruning
/// threshold are dropped.
#[derive(Debug, Clone)]
pub struct QuasiDistribution {
    kind: DistributionKind,
    support: Vec<SupportPoint>,
    /// True when a (near-)degenerate spectrum forced level merging.
    pub degeneracy_merged: bool,
    /// FCS only: true when the support solve hit the conditioning fallback.
    pub conditioning_fallback: bool,
}

impl QuasiDistribution {
    /// Build from raw (value, weight) pairs: sort, merge near-equal values,
    /// prune negligible weights, then enforce the kind's invariants.
    pub fn from_points(
        kind: DistributionKind,
        points: Vec<(f64, Complex64)>,
        degeneracy_merged: bool,
    ) -> Result<Self, WorkdistError> {
        let mut pts = points;
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let span = match (pts.first(), pts.last()) {
            (Some(f), Some(l)) => l.0 - f.0,
            _ => 0.0,
        };
        let tol = MERGE_TOL_REL * span;

        let mut support: Vec<SupportPoint> = Vec::new();
        for (value, weight) in pts {
            match support.last_mut() {
                Some(last) if value - last.value <= tol => {
                    // Weighted merge keeps the value stable for clustered points.
                    let total = last.weight + weight;
                    if total.norm() > 0.0 {
                        last.value = (last.value * last.weight.norm() + value * weight.norm())
                            / (last.weight.norm() + weight.norm()).max(f64::MIN_POSITIVE);
                    }
                    last.weight = total;
                }
                _ => support.push(SupportPoint { value, weight }),
            }
        }
        support.retain(|p| p.weight.norm() > PRUNE_TOL);

        let dist = QuasiDistribution {
            kind,
            support,
            degeneracy_merged,
            conditioning_fallback: false,
        };
        dist.validate()?;
        Ok(dist)
    }

    fn validate(&self) -> Result<(), WorkdistError> {
        let sum: Complex64 = self.support.iter().map(|p| p.weight).sum();
        if (sum - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(WorkdistError::NotNormalized { sum });
        }
        if self.kind.is_real() {
            let max_imag = self
                .support
                .iter()
                .fold(0.0f64, |m, p| m.max(p.weight.im.abs()));
            if max_imag > 1e-10 {
                return Err(WorkdistError::WeightsNotReal {
                    kind: self.kind,
                    max_imag,
                });
            }
        }
        if self.kind.is_probability() {
            for p in &self.support {
                if p.weight.re < -1e-12 {
                    return Err(WorkdistError::NegativeWeight {
                        kind: self.kind,
                        weight: p.weight.re,
                    });
                }
            }
        }
        Ok(())
    }

    /// Which distribution this is.
    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Support points, ascending in value.
    pub fn support(&self) -> &[SupportPoint] {
        &self.support
    }

    /// Characteristic function Σ_k w_k e^{iμW_k}; μ may be complex.
    pub fn char_at(&self, mu: impl Into<Complex64>) -> Complex64 {
        let mu: Complex64 = mu.into();
        self.support
            .iter()
            .map(|p| p.weight * (Complex64::i() * mu * p.value).exp())
            .sum()
    }

    /// Raw moment Σ_k w_k W_k^j (complex for RS).
    pub fn moment(&self, j: usize) -> Complex64 {
        self.support
            .iter()
            .map(|p| p.weight * p.value.powi(j as i32))
            .sum()
    }

    /// Exponential average Σ_k w_k e^{sW_k} (e.g. s = −β for Jarzynski-type
    /// averages over this distribution).
    pub fn exponential_average(&self, s: f64) -> Complex64 {
        self.support
            .iter()
            .map(|p| p.weight * (s * p.value).exp())
            .sum()
    }
}

/// Ascending energy levels of `h` with (near-)equal eigenvalues grouped.
///
/// Returns `(levels, blocks, merged_any)`: `blocks[l]` lists the eigenvector
/// column indices spanning level `l`, so projectors are sums of dyads over a
/// block — the unique basis-invariant treatment of degeneracy.
fn merged_levels(h: &HermitianOperator) -> (Vec<f64>, Vec<Vec<usize>>, bool) {
    let vals = h.eigenvalues();
    let tol = MERGE_TOL_REL * h.spectral_span();
    let mut levels: Vec<f64> = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match levels.last() {
            Some(&last) if v - last <= tol => blocks.last_mut().unwrap().push(i),
            _ => {
                levels.push(v);
                blocks.push(vec![i]);
            }
        }
    }
    let merged = levels.len() < vals.len();
    (levels, blocks, merged)
}

/// Spectral data shared by every distribution and characteristic function:
/// the process expressed in the (merged) eigenbases of H₀ and H_τ.
pub(crate) struct SpectralData {
    /// Merged ascending eigenvalues of H₀ and the column blocks per level.
    pub levels0: Vec<f64>,
    pub blocks0: Vec<Vec<usize>>,
    /// Merged ascending eigenvalues of H_τ and the column blocks per level.
    pub levels_tau: Vec<f64>,
    pub blocks_tau: Vec<Vec<usize>>,
    /// True when either Hamiltonian had (near-)degenerate eigenvalues.
    pub merged: bool,
    /// b[(j,i)] = ⟨ε'_j|U|ε_i⟩.
    pub b: ComplexMatrix,
    /// r[(i,i')] = ⟨ε_i|ρ|ε_{i'}⟩.
    pub r: ComplexMatrix,
    /// c[(i,j)] = ⟨ε_i|ρU†|ε'_j⟩.
    pub c: ComplexMatrix,
    /// Unmerged per-column eigenvalues (ascending as stored in the operators).
    pub eps0: Vec<f64>,
    pub eps_tau: Vec<f64>,
    /// Column-index → level-index maps.
    pub block_of0: Vec<usize>,
    pub block_of_tau: Vec<usize>,
}

impl SpectralData {
    pub fn new(p: &ProcessSpec) -> Self {
        let (levels0, blocks0, m0) = merged_levels(&p.h0);
        let (levels_tau, blocks_tau, mt) = merged_levels(&p.htau);
        let v0 = p.h0.eigenvectors();
        let vt = p.htau.eigenvectors();
        let b = vt.adjoint() * p.u.matrix() * v0;
        let r = v0.adjoint() * p.rho.matrix() * v0;
        let c = v0.adjoint() * p.rho.matrix() * p.u.matrix().adjoint() * vt;
        let d = p.dim();
        let mut block_of0 = vec![0usize; d];
        for (l, blk) in blocks0.iter().enumerate() {
            for &i in blk {
                block_of0[i] = l;
            }
        }
        let mut block_of_tau = vec![0usize; d];
        for (l, blk) in blocks_tau.iter().enumerate() {
            for &j in blk {
                block_of_tau[j] = l;
            }
        }
        SpectralData {
            eps0: p.h0.eigenvalues().to_vec(),
            eps_tau: p.htau.eigenvalues().to_vec(),
            levels0,
            blocks0,
            levels_tau,
            blocks_tau,
            merged: m0 || mt,
            b,
            r,
            c,
            block_of0,
            block_of_tau,
        }
    }

    /// Kirkwood–Dirac weight matrix on merged levels:
    /// q[(I,J)] = Σ_{i∈I, j∈J} ⟨ε_i|ρU†|ε'_j⟩⟨ε'_j|U|ε_i⟩.
    pub fn kd_weights(&self) -> ComplexMatrix {
        let (n0, nt) = (self.levels0.len(), self.levels_tau.len());
        let mut q = ComplexMatrix::zeros(n0, nt);
        let d = self.eps0.len();
        for i in 0..d {
            for j in 0..d {
                q[(self.block_of0[i], self.block_of_tau[j])] += self.c[(i, j)] * self.b[(j, i)];
            }
        }
        q
    }

    /// TPM joint probabilities on merged levels:
    /// t[(I,J)] = Tr(P'_J U P_I ρ P_I U†) ≥ 0.
    pub fn tpm_weights(&self) -> ComplexMatrix {
        let (n0, nt) = (self.levels0.len(), self.levels_tau.len());
        let mut t = ComplexMatrix::zeros(n0, nt);
        let d = self.eps0.len();
        for i in 0..d {
            for ip in 0..d {
                if self.block_of0[i] != self.block_of0[ip] {
                    continue;
                }
                let blk = self.block_of0[i];
                let r_iip = self.r[(i, ip)];
                for j in 0..d {
                    t[(blk, self.block_of_tau[j])] +=
                        self.b[(j, i)] * r_iip * self.b[(j, ip)].conj();
                }
            }
        }
        t
    }
}

/// Kirkwood–Dirac joint quasi-probability over (initial level, final level).
///
/// `weights[(i, j)]` is the complex weight for the transition from initial
/// level `initial_levels[i]` to final level `final_levels[j]`; it sums to 1.
/// `degeneracy_merged` reports that (near-)equal energies were merged — the
/// "degenerate basis" warning surface.
#[derive(Debug, Clone)]
pub struct KdJoint {
    pub initial_levels: Vec<f64>,
    pub final_levels: Vec<f64>,
    pub weights: ComplexMatrix,
    pub degeneracy_merged: bool,
}

/// Joint Kirkwood–Dirac quasi-probability of initial and final energy.
pub fn kd_joint(p: &ProcessSpec) -> Result<KdJoint, WorkdistError> {
    let sd = SpectralData::new(p);
    let weights = sd.kd_weights();
    let total: Complex64 = weights.iter().sum();
    if (total - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(WorkdistError::NotNormalized { sum: total });
    }
    Ok(KdJoint {
        initial_levels: sd.levels0,
        final_levels: sd.levels_tau,
        weights,
        degeneracy_merged: sd.merged,
    })
}

fn gaps_to_points(
    levels0: &[f64],
    levels_tau: &[f64],
    weights: &ComplexMatrix,
    map: impl Fn(Complex64) -> Complex64,
) -> Vec<(f64, Complex64)> {
    let mut pts = Vec::with_capacity(levels0.len() * levels_tau.len());
    for (i, &e0) in levels0.iter().enumerate() {
        for (j, &et) in levels_tau.iter().enumerate() {
            pts.push((et - e0, map(weights[(i, j)])));
        }
    }
    pts
}

/// Ramsey-scheme (Kirkwood–Dirac) work quasi-distribution.
pub fn dist_rs(p: &ProcessSpec) -> Result<QuasiDistribution, WorkdistError> {
    let sd = SpectralData::new(p);
    let q = sd.kd_weights();
    let pts = gaps_to_points(&sd.levels0, &sd.levels_tau, &q, |w| w);
    QuasiDistribution::from_points(DistributionKind::Rs, pts, sd.merged)
}

/// Terletsky–Margenau–Hill work quasi-distribution: the real part of RS.
pub fn dist_atmh(p: &ProcessSpec) -> Result<QuasiDistribution, WorkdistError> {
    let sd = SpectralData::new(p);
    let q = sd.kd_weights();
    let pts = gaps_to_points(&sd.levels0, &sd.levels_tau, &q, |w| {
        Complex64::new(w.re, 0.0)
    });
    QuasiDistribution::from_points(DistributionKind::Atmh, pts, sd.merged)
}

/// Two-point-measurement work distribution (a true probability).
pub fn dist_tpm(p: &ProcessSpec) -> Result<QuasiDistribution, WorkdistError> {
    let sd = SpectralData::new(p);
    let t = sd.tpm_weights();
    let pts = gaps_to_points(&sd.levels0, &sd.levels_tau, &t, |w| w);
    QuasiDistribution::from_points(DistributionKind::Tpm, pts, sd.merged)
}

/// Convolution distribution of independently measured initial and final
/// energies: weight p₀(ε₀)·p_τ(ε_τ) at ΔU = ε_τ − ε₀, where p_τ comes from
/// measuring H_τ on UρU† (a fresh copy of the state).
pub fn dist_du_conv(p: &ProcessSpec) -> Result<QuasiDistribution, WorkdistError> {
    let sd = SpectralData::new(p);
    // Initial-energy marginal from ρ, final-energy marginal from UρU†.
    let p0: Vec<f64> = sd
        .blocks0
        .iter()
        .map(|blk| blk.iter().map(|&i| sd.r[(i, i)].re).sum())
        .collect();
    let rho_final = p.rho.evolved(&p.u);
    let s = p.htau.eigenvectors().adjoint() * rho_final.matrix() * p.htau.eigenvectors();
    let pt: Vec<f64> = sd
        .blocks_tau
        .iter()
        .map(|blk| blk.iter().map(|&j| s[(j, j)].re).sum())
        .collect();
    let mut pts = Vec::with_capacity(p0.len() * pt.len());
    for (i, &e0) in sd.levels0.iter().enumerate() {
        for (j, &et) in sd.levels_tau.iter().enumerate() {
            pts.push((et - e0, Complex64::new(p0[i] * pt[j], 0.0)));
        }
    }
    QuasiDistribution::from_points(DistributionKind::DuConv, pts, sd.merged)
}

/// The Heisenberg internal-energy-difference operator U†H_τU − H₀.
pub fn du_operator(p: &ProcessSpec) -> Result<HermitianOperator, WorkdistError> {
    let a = p.u.matrix().adjoint() * p.htau.matrix() * p.u.matrix();
    let m = a - p.h0.matrix();
    Ok(HermitianOperator::new(m, &Tolerances::default())?)
}

/// Spectral distribution of U†H_τU − H₀ in the state ρ: weights are the
/// populations of ρ on the operator's (merged) eigenspaces.
pub fn dist_du_op(p: &ProcessSpec) -> Result<QuasiDistribution, WorkdistError> {
    let du = du_operator(p)?;
    let (levels, blocks, merged) = merged_levels(&du);
    let w = du.eigenvectors().adjoint() * p.rho.matrix() * du.eigenvectors();
    let pts: Vec<(f64, Complex64)> = levels
        .iter()
        .zip(blocks.iter())
        .map(|(&v, blk)| {
            let weight: Complex64 = blk.iter().map(|&k| w[(k, k)]).sum();
            (v, Complex64::new(weight.re, 0.0))
        })
        .collect();
    QuasiDistribution::from_points(DistributionKind::DuOp, pts, merged)
}

/// Full-counting-statistics work distribution.
///
/// The FCS characteristic function is an exponential sum over half-sum
/// support points s = ε'_j − (ε_i + ε_{i'})/2 with provably real weights
/// (conjugate pairing under i ↔ i'). The support set is identified from the
/// spectral structure (triples whose coefficient is not negligible); the
/// published weights are then reconstructed by sampling the characteristic
/// function at distinct μ values and solving the resulting Vandermonde-type
/// system in the least-squares sense. If the system's condition number
/// exceeds 1e8 the solve is repeated with a wider, denser μ sampling and
/// truncated SVD, and the result is flagged via `conditioning_fallback`.
pub fn dist_fcs(p: &ProcessSpec) -> Result<QuasiDistribution, WorkdistError> {
    let sd = SpectralData::new(p);
    let d = sd.eps0.len();

    // Half-sum support values with their exact structural weights
    //   w(i,i',j) = ⟨ε_i|ρ|ε_{i'}⟩⟨ε_{i'}|U†|ε'_j⟩⟨ε'_j|U|ε_i⟩,
    // used only to locate the support (points with negligible total weight
    // are dropped before the solve).
    let mut raw: Vec<(f64, Complex64)> = Vec::with_capacity(d * d * d);
    for i in 0..d {
        for ip in 0..d {
            for j in 0..d {
                let w = sd.r[(i, ip)] * sd.b[(j, ip)].conj() * sd.b[(j, i)];
                raw.push((sd.eps_tau[j] - 0.5 * (sd.eps0[i] + sd.eps0[ip]), w));
            }
        }
    }
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let span = raw.last().unwrap().0 - raw.first().unwrap().0;
    let tol = MERGE_TOL_REL * span;
    let mut support: Vec<f64> = Vec::new();
    let mut structural: Vec<Complex64> = Vec::new();
    for (v, w) in raw {
        match support.last() {
            Some(&last) if v - last <= tol => *structural.last_mut().unwrap() += w,
            _ => {
                support.push(v);
                structural.push(w);
            }
        }
    }
    let keep: Vec<usize> = (0..support.len())
        .filter(|&k| structural[k].norm() > PRUNE_TOL)
        .collect();
    let support: Vec<f64> = keep.iter().map(|&k| support[k]).collect();
    let n = support.len();

    // Reconstruct the weights from characteristic-function samples on an
    // alias-free uniform μ grid (Δμ·span < 2π keeps the Vandermonde nodes
    // distinct on the unit circle).
    let chars = ProcessChars::new(p);
    let d_mu = 0.45 * 2.0 * std::f64::consts::PI / span.max(1e-6);
    let solve = |oversample: usize, svd_rel_cut: f64| -> (Vec<Complex64>, f64) {
        let n_mu = (oversample * n).max(8);
        let mus: Vec<f64> = (0..n_mu)
            .map(|m| (m as f64 - 0.5 * (n_mu - 1) as f64) * d_mu)
            .collect();
        let a = ComplexMatrix::from_fn(n_mu, n, |m, k| {
            (Complex64::i() * mus[m] * support[k]).exp()
        });
        let rhs = nalgebra::DVector::from_iterator(n_mu, mus.iter().map(|&m| chars.char_fcs(m)));
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        let sol = svd
            .solve(&rhs, smax * svd_rel_cut)
            .expect("SVD solve with computed singular vectors");
        (sol.iter().copied().collect(), cond)
    };

    let (mut weights, cond) = solve(4, 1e-13);
    let mut fallback = false;
    if cond > 1e8 {
        fallback = true;
        (weights, _) = solve(16, 1e-10);
    }

    let pts: Vec<(f64, Complex64)> = support.iter().copied().zip(weights).collect();
    let mut dist = QuasiDistribution::from_points(DistributionKind::Fcs, pts, sd.merged)?;
    dist.conditioning_fallback = fallback;

    // The reconstruction must reproduce the trace-formula characteristic
    // function it was built from; reject silently wrong solves.
    for &mu in &[0.37, -1.91, 4.73] {
        let resid = (dist.char_at(mu) - chars.char_fcs(mu)).norm();
        if resid > 1e-8 {
            return Err(WorkdistError::FcsReconstruction {
                context: format!("characteristic mismatch {resid:.3e} at μ = {mu}"),
            });
        }
    }
    Ok(dist)
}
