//! Dense complex linear algebra and quantum-state primitives.
//!
//! Everything downstream (work distributions, the interferometric protocol,
//! the truncated-oscillator bridge) runs on four value types built here:
//! [`HermitianOperator`] (an observable with its spectral decomposition
//! cached at construction), [`DensityMatrix`], [`UnitaryOperator`], and the
//! [`ProcessSpec`] quadruple (ρ, H₀, H_τ, U) that every distribution
//! consumes.
//!
//! Design notes:
//!
//! * The eigendecomposition is computed once per operator and cached, so a
//!   characteristic-function scan evaluating e^{iμH} at hundreds of μ values
//!   pays the O(d³) factorization a single time.
//! * All values are immutable after construction and every operation is a
//!   pure function; sharing across threads needs no synchronization.
//! * Validation tolerances live in one [`Tolerances`] record instead of
//!   scattered magic numbers.

pub mod random;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Dense square complex matrix (the only matrix representation used here).
pub type ComplexMatrix = DMatrix<Complex64>;

/// Validation tolerances, centralized so property tests have a single knob.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Construction-time symmetry/unitarity/trace checks (relative).
    pub construction: f64,
    /// Eigendecomposition reconstruction residual ‖VΛV† − A‖_max (absolute,
    /// relative to the matrix scale).
    pub reconstruction: f64,
    /// How negative a density-matrix eigenvalue may be before the state is
    /// rejected (absorbs round-off in products and partial traces).
    pub psd_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            construction: 1e-12,
            reconstruction: 1e-10,
            psd_floor: 1e-10,
        }
    }
}

/// Errors from state/operator construction and algebra.
#[derive(Debug, Error)]
pub enum QsysError {
    /// Input failed the Hermitian symmetry check.
    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NonHermitian { residual: f64, tolerance: f64 },
    /// Input failed the unitarity check U†U = I.
    #[error("matrix is not unitary: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotUnitary { residual: f64, tolerance: f64 },
    /// Input failed a density-matrix requirement.
    #[error("matrix is not a density matrix: {reason}")]
    NotDensity { reason: String },
    /// Operands do not share the required dimensions.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    /// A scalar parameter was out of range (NaN, infinite, negative β, …).
    #[error("invalid parameter: {context}")]
    InvalidParameter { context: String },
    /// The eigensolver produced an unusable decomposition.
    #[error("eigendecomposition failed: reconstruction residual {residual:.3e}")]
    EigenFailure { residual: f64 },
}

fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// Verifies the symmetry residual ‖A − A†‖_max ≤ tol·‖A‖_max, symmetrizes
/// the round-off remainder, and checks that V diag(λ) V† reconstructs the
/// input. Returns `(eigenvalues ascending, eigenvector columns)`.
///
/// # Errors
/// [`QsysError::NonHermitian`] when the symmetry check fails;
/// [`QsysError::EigenFailure`] when reconstruction is worse than
/// `tol.reconstruction` relative to the matrix scale.
pub fn eigh(a: &ComplexMatrix, tol: &Tolerances) -> Result<(Vec<f64>, ComplexMatrix), QsysError> {
    let scale = max_abs(a).max(1.0);
    let sym_residual = (a - a.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if sym_residual > tol.construction * scale {
        return Err(QsysError::NonHermitian {
            residual: sym_residual,
            tolerance: tol.construction * scale,
        });
    }
    // Fold round-off asymmetry away so the solver sees an exactly Hermitian input.
    let h = (a + a.adjoint()).scale(0.5);
    let se = h.clone().symmetric_eigen();

    // nalgebra returns eigenvalues in no particular order; sort ascending and
    // permute the eigenvector columns to match.
    let d = a.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        eigenvectors.set_column(col, &se.eigenvectors.column(i));
    }

    let lam = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        eigenvalues.iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    let recon_residual = max_abs(&(&eigenvectors * lam * eigenvectors.adjoint() - &h));
    if recon_residual > tol.reconstruction * scale {
        return Err(QsysError::EigenFailure {
            residual: recon_residual,
        });
    }
    Ok((eigenvalues, eigenvectors))
}

/// A Hermitian observable with its spectral decomposition cached.
///
/// Holds H = V diag(λ) V† with λ ascending; the decomposition is computed
/// once at construction so repeated matrix functions of H (Gibbs weights,
/// e^{isH} at many s) cost O(d²) each plus one multiply.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl HermitianOperator {
    /// Validate Hermiticity and cache the eigendecomposition.
    pub fn new(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self, QsysError> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(QsysError::DimensionMismatch {
                context: format!("operator must be square and nonempty, got {}×{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let (eigenvalues, eigenvectors) = eigh(&matrix, tol)?;
        Ok(HermitianOperator {
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    /// Diagonal operator with the given real entries (in the standard basis).
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let matrix = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        // Already diagonal: the decomposition is the sorted permutation.
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let mut eigenvectors = ComplexMatrix::zeros(d, d);
        for (col, &i) in order.iter().enumerate() {
            eigenvectors[(i, col)] = Complex64::new(1.0, 0.0);
        }
        HermitianOperator {
            matrix,
            eigenvalues,
            eigenvectors,
        }
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The operator as a matrix.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvector columns, ordered to match [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    /// Largest −smallest eigenvalue (the energy scale for merge tolerances).
    pub fn spectral_span(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

/// Matrix exponential e^{isH} from the cached spectrum: V diag(e^{isλ}) V†.
///
/// `s` may be complex; the Crooks-theorem strip μ + iβ enters here. For real
/// `s` the result is unitary to round-off.
pub fn expm_i(h: &HermitianOperator, s: impl Into<Complex64>) -> ComplexMatrix {
    let s: Complex64 = s.into();
    let d = h.dim();
    let phases = nalgebra::DVector::from_iterator(
        d,
        h.eigenvalues.iter().map(|&lam| (Complex64::i() * s * lam).exp()),
    );
    let v = &h.eigenvectors;
    // V * diag(phases) * V†, with the diagonal applied by column scaling.
    let mut scaled = v.clone();
    for (c, phase) in phases.iter().enumerate() {
        let mut col = scaled.column_mut(c);
        col *= *phase;
    }
    scaled * v.adjoint()
}

/// A quantum state: Hermitian, unit trace, positive semi-definite.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate Hermiticity, unit trace, and positivity (eigenvalues ≥ −psd_floor).
    pub fn new(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self, QsysError> {
        let (eigenvalues, _) = eigh(&matrix, tol).map_err(|e| match e {
            QsysError::NonHermitian { residual, .. } => QsysError::NotDensity {
                reason: format!("not Hermitian (residual {residual:.3e})"),
            },
            other => other,
        })?;
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol.construction || trace.im.abs() > tol.construction {
            return Err(QsysError::NotDensity {
                reason: format!("trace {trace} is not 1"),
            });
        }
        if let Some(&lam_min) = eigenvalues.first() {
            if lam_min < -tol.psd_floor {
                return Err(QsysError::NotDensity {
                    reason: format!("negative eigenvalue {lam_min:.3e}"),
                });
            }
        }
        Ok(DensityMatrix { matrix })
    }

    /// Pure state |ψ⟩⟨ψ| from a (not necessarily normalized) ket.
    pub fn pure(ket: &[Complex64]) -> Result<Self, QsysError> {
        let norm_sq: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(QsysError::InvalidParameter {
                context: "pure-state ket must be nonzero and finite".into(),
            });
        }
        let d = ket.len();
        let matrix = ComplexMatrix::from_fn(d, d, |i, j| ket[i] * ket[j].conj() / norm_sq);
        Ok(DensityMatrix { matrix })
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(d: usize) -> Self {
        let matrix = ComplexMatrix::identity(d, d).scale(1.0 / d as f64);
        DensityMatrix { matrix }
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The state as a matrix.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Expectation value Tr(ρA).
    pub fn expectation(&self, a: &ComplexMatrix) -> Complex64 {
        (&self.matrix * a).trace()
    }

    /// The state evolved as UρU† (stays a valid state; no re-validation).
    pub fn evolved(&self, u: &UnitaryOperator) -> DensityMatrix {
        DensityMatrix {
            matrix: u.matrix() * &self.matrix * u.matrix().adjoint(),
        }
    }
}

/// A unitary evolution operator.
#[derive(Debug, Clone)]
pub struct UnitaryOperator {
    matrix: ComplexMatrix,
}

impl UnitaryOperator {
    /// Validate U†U = I within `tol.construction` (scaled by dimension-free max norm).
    pub fn new(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self, QsysError> {
        let d = matrix.nrows();
        if d != matrix.ncols() || d == 0 {
            return Err(QsysError::DimensionMismatch {
                context: format!("unitary must be square and nonempty, got {}×{}", d, matrix.ncols()),
            });
        }
        let residual = max_abs(&(matrix.adjoint() * &matrix - ComplexMatrix::identity(d, d)));
        if residual > tol.construction * (d as f64).sqrt().max(1.0) {
            return Err(QsysError::NotUnitary {
                residual,
                tolerance: tol.construction,
            });
        }
        Ok(UnitaryOperator { matrix })
    }

    /// Identity evolution.
    pub fn identity(d: usize) -> Self {
        UnitaryOperator {
            matrix: ComplexMatrix::identity(d, d),
        }
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The operator as a matrix.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// The reverse evolution U†.
    pub fn adjoint(&self) -> UnitaryOperator {
        UnitaryOperator {
            matrix: self.matrix.adjoint(),
        }
    }
}

/// The quadruple (ρ, H₀, H_τ, U) defining a unitary work process.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    pub rho: DensityMatrix,
    pub h0: HermitianOperator,
    pub htau: HermitianOperator,
    pub u: UnitaryOperator,
}

impl ProcessSpec {
    /// Bundle the quadruple, checking that all four share one dimension.
    pub fn new(
        rho: DensityMatrix,
        h0: HermitianOperator,
        htau: HermitianOperator,
        u: UnitaryOperator,
    ) -> Result<Self, QsysError> {
        let d = rho.dim();
        if h0.dim() != d || htau.dim() != d || u.dim() != d {
            return Err(QsysError::DimensionMismatch {
                context: format!(
                    "process parts disagree: ρ {}, H0 {}, Hτ {}, U {}",
                    d,
                    h0.dim(),
                    htau.dim(),
                    u.dim()
                ),
            });
        }
        Ok(ProcessSpec { rho, h0, htau, u })
    }

    /// Shared Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

/// Thermal (Gibbs) state e^{−βH}/Tr e^{−βH}.
///
/// Computed in the eigenbasis of H with the exponent shifted by its maximum
/// (i.e. the smallest eigenvalue of H is subtracted) so that βε up to ~700
/// cannot overflow. β = 0 gives the maximally mixed state.
///
/// # Errors
/// [`QsysError::InvalidParameter`] for β < 0 or non-finite β.
pub fn gibbs(h: &HermitianOperator, beta: f64) -> Result<DensityMatrix, QsysError> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(QsysError::InvalidParameter {
            context: format!("inverse temperature must be finite and ≥ 0, got {beta}"),
        });
    }
    let lam_min = h.eigenvalues[0];
    let weights: Vec<f64> = h
        .eigenvalues
        .iter()
        .map(|&lam| (-(beta * (lam - lam_min))).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let v = h.eigenvectors();
    let mut scaled = v.clone();
    for (c, w) in weights.iter().enumerate() {
        let mut col = scaled.column_mut(c);
        col *= Complex64::new(w / z, 0.0);
    }
    let matrix = scaled * v.adjoint();
    // Exactly Hermitian up to round-off by construction; skip re-validation.
    Ok(DensityMatrix { matrix })
}

/// Log of the partition-function ratio: ln(Tr e^{−β·hb}/Tr e^{−β·ha}), computed
/// with per-operator eigenvalue shifts so β up to hundreds cannot overflow.
pub fn log_partition_ratio(ha: &HermitianOperator, hb: &HermitianOperator, beta: f64) -> f64 {
    let log_z = |h: &HermitianOperator| -> f64 {
        let lam_min = h.eigenvalues()[0];
        let s: f64 = h
            .eigenvalues()
            .iter()
            .map(|&lam| (-(beta * (lam - lam_min))).exp())
            .sum();
        s.ln() - beta * lam_min
    };
    log_z(hb) - log_z(ha)
}

/// Kronecker product a ⊗ b (entry ((i·db+k),(j·db+l)) = a_ij·b_kl).
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Which tensor factor `ptrace` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// The first Kronecker factor (dimension `dim_a`).
    First,
    /// The second Kronecker factor (dimension `dim_b`).
    Second,
}

/// Partial trace of a state on A⊗B, keeping the requested factor.
///
/// # Errors
/// [`QsysError::DimensionMismatch`] when `dim_a · dim_b` does not equal the
/// state dimension.
pub fn ptrace(
    state: &DensityMatrix,
    dim_a: usize,
    dim_b: usize,
    keep: Subsystem,
) -> Result<DensityMatrix, QsysError> {
    let d = state.dim();
    if dim_a * dim_b != d || dim_a == 0 || dim_b == 0 {
        return Err(QsysError::DimensionMismatch {
            context: format!("partial trace expects {dim_a}·{dim_b} = {d}"),
        });
    }
    let m = state.matrix();
    let matrix = match keep {
        Subsystem::First => ComplexMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
        Subsystem::Second => ComplexMatrix::from_fn(dim_b, dim_b, |k, l| {
            (0..dim_a).map(|i| m[(i * dim_b + k, i * dim_b + l)]).sum()
        }),
    };
    Ok(DensityMatrix { matrix })
}

/// Ancilla-controlled pair: u0 ⊗ |0⟩⟨0| + u1 ⊗ |1⟩⟨1|.
///
/// The control qubit is the SECOND tensor factor throughout this crate; this
/// layout matches the interferometric protocol's operator⊗projector form and
/// removes a silent transposition bug class.
pub fn controlled(u0: &UnitaryOperator, u1: &UnitaryOperator) -> Result<UnitaryOperator, QsysError> {
    if u0.dim() != u1.dim() {
        return Err(QsysError::DimensionMismatch {
            context: format!("controlled branches disagree: {} vs {}", u0.dim(), u1.dim()),
        });
    }
    let p0 = ComplexMatrix::from_fn(2, 2, |i, j| {
        Complex64::new(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0)
    });
    let p1 = ComplexMatrix::from_fn(2, 2, |i, j| {
        Complex64::new(if i == 1 && j == 1 { 1.0 } else { 0.0 }, 0.0)
    });
    let matrix = tensor(u0.matrix(), &p0) + tensor(u1.matrix(), &p1);
    Ok(UnitaryOperator { matrix })
}

/// Pauli σ_x.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

/// Pauli σ_y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

/// Pauli σ_z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ],
    )
}

/// Hadamard gate, defined exactly as (σ_z + σ_x)/√2.
pub fn hadamard() -> ComplexMatrix {
    (pauli_z() + pauli_x()).scale(1.0 / 2.0f64.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigh_identity_is_flat_spectrum() {
        let tol = Tolerances::default();
        let (vals, vecs) = eigh(&ComplexMatrix::identity(3, 3), &tol).unwrap();
        for v in vals {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
        let orth = (vecs.adjoint() * &vecs - ComplexMatrix::identity(3, 3))
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(orth < 1e-12);
    }

    #[test]
    fn eigh_diagonal_sorts_ascending() {
        let tol = Tolerances::default();
        let a = HermitianOperator::from_diagonal(&[0.0, 2.0]);
        assert_eq!(a.eigenvalues(), &[0.0, 2.0]);
        // Same via the generic path.
        let (vals, _) = eigh(a.matrix(), &tol).unwrap();
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_random_hermitian_reconstructs() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(7);
        let h = random::random_hermitian(6, &mut rng);
        let op = HermitianOperator::new(h.clone(), &tol).unwrap();
        let d = 6;
        let lam = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                c(op.eigenvalues()[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let recon = op.eigenvectors() * lam * op.eigenvectors().adjoint();
        assert!(max_abs(&(recon - h)) < 1e-10);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let tol = Tolerances::default();
        let mut a = ComplexMatrix::identity(2, 2);
        a[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(
            eigh(&a, &tol),
            Err(QsysError::NonHermitian { .. })
        ));
    }

    #[test]
    fn expm_at_zero_is_identity() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(3);
        let h = HermitianOperator::new(random::random_hermitian(4, &mut rng), &tol).unwrap();
        let e = expm_i(&h, 0.0);
        assert!(max_abs(&(e - ComplexMatrix::identity(4, 4))) < 1e-13);
    }

    #[test]
    fn expm_halfperiod_flips_sign() {
        // H = diag(0, ε), s = π/ε → diag(1, e^{iπ}) = diag(1, −1).
        let eps = 2.0;
        let h = HermitianOperator::from_diagonal(&[0.0, eps]);
        let e = expm_i(&h, std::f64::consts::PI / eps);
        assert!(max_abs(&(e.clone() - ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(1.0, 0.0),
            (1, 1) => c(-1.0, 0.0),
            _ => c(0.0, 0.0),
        }))) < 1e-13);
    }

    #[test]
    fn expm_pairs_to_identity() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(11);
        let h = HermitianOperator::new(random::random_hermitian(5, &mut rng), &tol).unwrap();
        let prod = expm_i(&h, 0.3) * expm_i(&h, -0.3);
        assert!(max_abs(&(prod - ComplexMatrix::identity(5, 5))) < 1e-12);
    }

    #[test]
    fn gibbs_infinite_temperature_is_maximally_mixed() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(19);
        let h = HermitianOperator::new(random::random_hermitian(4, &mut rng), &tol).unwrap();
        let g = gibbs(&h, 0.0).unwrap();
        assert!(max_abs(&(g.matrix() - ComplexMatrix::identity(4, 4).scale(0.25))) < 1e-13);
    }

    #[test]
    fn gibbs_qubit_matches_closed_form() {
        // H = diag(0, ε) with βε = ln 2 → populations (2/3, 1/3).
        let eps = 1.7;
        let beta = (2.0f64).ln() / eps;
        let h = HermitianOperator::from_diagonal(&[0.0, eps]);
        let g = gibbs(&h, beta).unwrap();
        assert_abs_diff_eq!(g.matrix()[(0, 0)].re, 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.matrix()[(1, 1)].re, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gibbs_zero_temperature_projects_onto_ground_state() {
        let eps = 1.0;
        let h = HermitianOperator::from_diagonal(&[0.0, eps]);
        let g = gibbs(&h, 50.0).unwrap();
        let ground = ComplexMatrix::from_fn(2, 2, |i, j| {
            c(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0)
        });
        assert!(max_abs(&(g.matrix() - ground)) < 1e-12);
    }

    #[test]
    fn gibbs_commutes_with_hamiltonian() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(23);
        let h = HermitianOperator::new(random::random_hermitian(6, &mut rng), &tol).unwrap();
        let g = gibbs(&h, 1.3).unwrap();
        let comm = g.matrix() * h.matrix() - h.matrix() * g.matrix();
        assert!(max_abs(&comm) < 1e-12);
    }

    #[test]
    fn controlled_identities_give_identity() {
        let u = UnitaryOperator::identity(3);
        let cu = controlled(&u, &u).unwrap();
        assert!(max_abs(&(cu.matrix() - ComplexMatrix::identity(6, 6))) < 1e-15);
    }

    #[test]
    fn ptrace_discards_product_ancilla() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(31);
        let rho = random::random_density(3, &mut rng);
        let plus = DensityMatrix::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let joint = DensityMatrix::new(tensor(rho.matrix(), plus.matrix()), &tol).unwrap();
        let back = ptrace(&joint, 3, 2, Subsystem::First).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-14);
        let anc = ptrace(&joint, 3, 2, Subsystem::Second).unwrap();
        assert!(max_abs(&(anc.matrix() - plus.matrix())) < 1e-14);
    }

    #[test]
    fn controlled_pair_matches_explicit_blocks() {
        // controlled(X, Z) with the control as the second factor, applied to
        // |0⟩⊗|+⟩, cross-checked against the explicitly assembled 4×4 matrix.
        let tol = Tolerances::default();
        let x = UnitaryOperator::new(pauli_x(), &tol).unwrap();
        let z = UnitaryOperator::new(pauli_z(), &tol).unwrap();
        let cu = controlled(&x, &z).unwrap();

        // Explicit oracle: entry ((i,k),(j,l)) = X_ij [k=l=0] + Z_ij [k=l=1].
        let mut oracle = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                oracle[(2 * i, 2 * j)] = pauli_x()[(i, j)];
                oracle[(2 * i + 1, 2 * j + 1)] = pauli_z()[(i, j)];
            }
        }
        assert!(max_abs(&(cu.matrix() - &oracle)) < 1e-15);

        let s = 0.5f64.sqrt();
        let input = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        // |0⟩⊗|+⟩ in the (system, ancilla) ordering: amplitudes on |00⟩,|01⟩.
        let evolved = input.evolved(&cu);
        let oracle_vec = {
            let v = nalgebra::DVector::from_column_slice(&[c(s, 0.0), c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
            &oracle * v
        };
        let oracle_rho = ComplexMatrix::from_fn(4, 4, |i, j| oracle_vec[i] * oracle_vec[j].conj());
        assert!(max_abs(&(evolved.matrix() - &oracle_rho)) < 1e-14);

        let reduced = ptrace(&evolved, 2, 2, Subsystem::First).unwrap();
        let oracle_reduced = ComplexMatrix::from_fn(2, 2, |i, j| {
            (0..2).map(|k| oracle_rho[(2 * i + k, 2 * j + k)]).sum()
        });
        assert!(max_abs(&(reduced.matrix() - &oracle_reduced)) < 1e-14);
    }

    #[test]
    fn log_partition_ratio_matches_direct_sum() {
        let h0 = HermitianOperator::from_diagonal(&[-0.4, 0.3, 1.1]);
        let h1 = HermitianOperator::from_diagonal(&[0.2, 0.5, 2.0]);
        let beta = 0.9;
        let z0: f64 = h0.eigenvalues().iter().map(|&l| (-beta * l).exp()).sum();
        let z1: f64 = h1.eigenvalues().iter().map(|&l| (-beta * l).exp()).sum();
        assert_abs_diff_eq!(
            log_partition_ratio(&h0, &h1, beta),
            (z1 / z0).ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn density_rejects_bad_inputs() {
        let tol = Tolerances::default();
        // Trace ≠ 1.
        let m = ComplexMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(m, &tol),
            Err(QsysError::NotDensity { .. })
        ));
        // Negative eigenvalue.
        let m = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(1.5, 0.0),
            (1, 1) => c(-0.5, 0.0),
            _ => c(0.0, 0.0),
        });
        assert!(matches!(
            DensityMatrix::new(m, &tol),
            Err(QsysError::NotDensity { .. })
        ));
    }

    #[test]
    fn hadamard_squares_to_identity() {
        let h2 = hadamard() * hadamard();
        assert!(max_abs(&(h2 - ComplexMatrix::identity(2, 2))) < 1e-14);
    }
}
