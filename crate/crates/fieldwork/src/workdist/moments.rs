//! Moments of the work and internal-energy distributions from exact trace
//! formulas in the spectral basis, plus the first-law and variance-relation
//! reports built on them.
//!
//! Expanding P̃(μ) in powers of iμ turns each characteristic function into
//! an ordered polynomial in H₀ and U†H_τU; the jth raw moment is the
//! coefficient sum evaluated as traces. Numerical differentiation of P̃ is
//! deliberately excluded from the library path (it lives in test oracles).

use super::{dist_tpm, du_operator, DistributionKind, WorkdistError};
use crate::qsys::{ComplexMatrix, HermitianOperator, ProcessSpec};
use num_complex::Complex64;

/// Largest supported raw-moment order.
pub const MAX_MOMENT: usize = 4;

fn binomial(n: usize, k: usize) -> f64 {
    let mut num = 1.0f64;
    for i in 0..k {
        num = num * (n - i) as f64 / (i + 1) as f64;
    }
    num
}

/// H^k through the cached spectrum: V diag(λ^k) V†.
fn spectral_power(h: &HermitianOperator, k: usize) -> ComplexMatrix {
    let d = h.dim();
    if k == 0 {
        return ComplexMatrix::identity(d, d);
    }
    let v = h.eigenvectors();
    let mut scaled = v.clone();
    for (c, &lam) in h.eigenvalues().iter().enumerate() {
        let mut col = scaled.column_mut(c);
        col *= Complex64::new(lam.powi(k as i32), 0.0);
    }
    scaled * v.adjoint()
}

/// jth raw moment ⟨W^j⟩ (or ⟨ΔU^j⟩) of the given distribution kind, from
/// trace formulas. Complex in general for RS; real up to round-off for the
/// other kinds.
///
/// # Errors
/// [`WorkdistError::UnsupportedMoment`] for j outside 1..=4.
pub fn moments(p: &ProcessSpec, kind: DistributionKind, j: usize) -> Result<Complex64, WorkdistError> {
    if j == 0 || j > MAX_MOMENT {
        return Err(WorkdistError::UnsupportedMoment { j });
    }
    let u = p.u.matrix();
    // a_pow[a] = U† H_τ^a U; h_pow[b] = H₀^b.
    let a_pow: Vec<ComplexMatrix> = (0..=j)
        .map(|a| u.adjoint() * spectral_power(&p.htau, a) * u)
        .collect();
    let h_pow: Vec<ComplexMatrix> = (0..=j).map(|b| spectral_power(&p.h0, b)).collect();

    let value = match kind {
        DistributionKind::Rs => {
            // (−i d/dμ)^j ⟨U†e^{iμH_τ}Ue^{−iμH₀}⟩ at μ=0:
            // Σ_{a+b=j} C(j,a) (−1)^b ⟨ U†H_τ^aU · H₀^b ⟩.
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..=j {
                let b = j - a;
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                acc += p.rho.expectation(&(&a_pow[a] * &h_pow[b])) * binomial(j, a) * sign;
            }
            acc
        }
        DistributionKind::Atmh => {
            // Symmetrized ordering: ½(Σ ⟨A^a H^b⟩ + Σ ⟨H^b A^a⟩) with the
            // same binomial signs.
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..=j {
                let b = j - a;
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                let t1 = p.rho.expectation(&(&a_pow[a] * &h_pow[b]));
                let t2 = p.rho.expectation(&(&h_pow[b] * &a_pow[a]));
                acc += (t1 + t2) * (0.5 * binomial(j, a) * sign);
            }
            acc
        }
        DistributionKind::Fcs => {
            // Half-angle split: Σ_{a+b+c=j} j!/(a!b!c!) (−1/2)^{a+c}
            //   ⟨ H₀^a · U†H_τ^bU · H₀^c ⟩.
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..=j {
                for b in 0..=(j - a) {
                    let cc = j - a - b;
                    let multinomial = binomial(j, a) * binomial(j - a, b);
                    let factor = (-0.5f64).powi((a + cc) as i32);
                    acc += p.rho.expectation(&(&h_pow[a] * &a_pow[b] * &h_pow[cc]))
                        * (multinomial * factor);
                }
            }
            acc
        }
        DistributionKind::Tpm => dist_tpm(p)?.moment(j),
        DistributionKind::DuConv => {
            // Independent marginals: Σ_a C(j,a) (−1)^{j−a} ⟨H_τ^a⟩_final ⟨H₀^{j−a}⟩_initial.
            let rho_fin = p.rho.evolved(&p.u);
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..=j {
                let b = j - a;
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                acc += rho_fin.expectation(&spectral_power(&p.htau, a))
                    * p.rho.expectation(&h_pow[b])
                    * (binomial(j, a) * sign);
            }
            acc
        }
        DistributionKind::DuOp => {
            let du = du_operator(p)?;
            p.rho.expectation(&spectral_power(&du, j))
        }
    };
    Ok(value)
}

/// First-law diagnostics for a process: the mean always balances, the RS
/// second moment misses ⟨ΔÛ²⟩ by exactly the expectation of the commutator
/// [U†H_τU, H₀], which is purely imaginary.
#[derive(Debug, Clone, Copy)]
pub struct FirstLawReport {
    /// ⟨ΔÛ⟩ − ⟨W_RS⟩ (energy); zero within round-off for every process.
    pub mean_gap: Complex64,
    /// ⟨ΔÛ²⟩ − ⟨W²_RS⟩ (energy²).
    pub var_gap: Complex64,
    /// ⟨[U†H_τU, H₀]⟩_ρ (energy²); purely imaginary, equals `var_gap`.
    pub commutator_expectation: Complex64,
}

/// Compute the first-law report from trace formulas.
pub fn first_law_report(p: &ProcessSpec) -> Result<FirstLawReport, WorkdistError> {
    let mean_w = moments(p, DistributionKind::Rs, 1)?;
    let mean_du = moments(p, DistributionKind::DuOp, 1)?;
    let var_w = moments(p, DistributionKind::Rs, 2)?;
    let var_du = moments(p, DistributionKind::DuOp, 2)?;

    let u = p.u.matrix();
    let a = u.adjoint() * p.htau.matrix() * u;
    let comm = &a * p.h0.matrix() - p.h0.matrix() * &a;
    let commutator_expectation = p.rho.expectation(&comm);

    Ok(FirstLawReport {
        mean_gap: mean_du - mean_w,
        var_gap: var_du - var_w,
        commutator_expectation,
    })
}

/// Residual of the variance relation between the two internal-energy
/// notions (finite-dimensional version, no divergent term):
/// σ²_conv − σ²_op = ⟨ΔÛH₀⟩ + ⟨H₀ΔÛ⟩ − 2⟨ΔÛ⟩⟨H₀⟩ + 2⟨H₀²⟩ − 2⟨H₀⟩².
pub fn du_variance_relation_check(p: &ProcessSpec) -> Result<f64, WorkdistError> {
    let m1_conv = moments(p, DistributionKind::DuConv, 1)?;
    let m2_conv = moments(p, DistributionKind::DuConv, 2)?;
    let var_conv = m2_conv - m1_conv * m1_conv;

    let m1_op = moments(p, DistributionKind::DuOp, 1)?;
    let m2_op = moments(p, DistributionKind::DuOp, 2)?;
    let var_op = m2_op - m1_op * m1_op;

    let du = du_operator(p)?;
    let du_h = du.matrix() * p.h0.matrix();
    let h_du = p.h0.matrix() * du.matrix();
    let h2 = p.h0.matrix() * p.h0.matrix();
    let e_du = p.rho.expectation(du.matrix());
    let e_h = p.rho.expectation(p.h0.matrix());
    let rhs = p.rho.expectation(&du_h) + p.rho.expectation(&h_du) - e_du * e_h * 2.0
        + p.rho.expectation(&h2) * 2.0
        - e_h * e_h * 2.0;

    Ok((var_conv - var_op - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsys::{
        gibbs, hadamard, random, DensityMatrix, HermitianOperator, ProcessSpec, Tolerances,
        UnitaryOperator,
    };
    use super::super::{dist_atmh, dist_du_conv, dist_du_op, dist_rs};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn first_moments_agree_across_kinds() {
        let mut rng = random::seeded(14);
        let p = random::random_process(5, random::InitialState::Mixed, &mut rng);
        let reference = moments(&p, DistributionKind::DuOp, 1).unwrap();
        for kind in [
            DistributionKind::Rs,
            DistributionKind::Atmh,
            DistributionKind::Fcs,
            DistributionKind::DuConv,
        ] {
            let m = moments(&p, kind, 1).unwrap();
            assert!(
                (m - reference).norm() < 1e-12,
                "⟨W⟩ mismatch for {kind:?}: {m} vs {reference}"
            );
        }
    }

    #[test]
    fn counterexample_convolution_variance_closed_form() {
        // H0 = Hτ = ε|1⟩⟨1|, ρ = Gibbs, U = I: the convolution variance is
        // 2ε²e^{−βε}/(1+e^{−βε})² (mean is zero, so the raw second moment).
        let eps = 1.0;
        let beta = (2.0f64).ln();
        let h = HermitianOperator::from_diagonal(&[0.0, eps]);
        let rho = gibbs(&h, beta).unwrap();
        let p = ProcessSpec::new(rho, h.clone(), h, UnitaryOperator::identity(2)).unwrap();
        let e = (-beta * eps).exp();
        let expect = 2.0 * eps * eps * e / ((1.0 + e) * (1.0 + e));
        let m2 = moments(&p, DistributionKind::DuConv, 2).unwrap();
        assert_abs_diff_eq!(m2.re, expect, epsilon = 1e-13);
        assert_abs_diff_eq!(m2.im, 0.0, epsilon = 1e-15);
        // Direct sum over the three support points agrees.
        let dist = dist_du_conv(&p).unwrap();
        assert!((dist.moment(2) - m2).norm() < 1e-13);
    }

    #[test]
    fn rs_second_moment_gap_is_commutator_expectation() {
        // Brute-force commutator trace oracle on a random noncommuting process.
        let mut rng = random::seeded(70);
        let p = random::random_process(4, random::InitialState::Mixed, &mut rng);
        let w2 = moments(&p, DistributionKind::Rs, 2).unwrap();
        let du2 = moments(&p, DistributionKind::DuOp, 2).unwrap();
        let u = p.u.matrix();
        let a = u.adjoint() * p.htau.matrix() * u;
        let comm_oracle =
            p.rho.expectation(&(&a * p.h0.matrix() - p.h0.matrix() * &a));
        assert!(((w2 - du2) - (-comm_oracle)).norm() < 1e-10);
    }

    #[test]
    fn trace_moments_match_distribution_moments() {
        let mut rng = random::seeded(88);
        let p = random::random_process(4, random::InitialState::Mixed, &mut rng);
        for j in 1..=4 {
            let pairs: [(DistributionKind, super::super::QuasiDistribution); 3] = [
                (DistributionKind::Rs, dist_rs(&p).unwrap()),
                (DistributionKind::Atmh, dist_atmh(&p).unwrap()),
                (DistributionKind::DuOp, dist_du_op(&p).unwrap()),
            ];
            for (kind, dist) in pairs {
                let trace = moments(&p, kind, j).unwrap();
                let from_support = dist.moment(j);
                assert!(
                    (trace - from_support).norm() < 1e-10,
                    "kind {kind:?} j {j}: {trace} vs {from_support}"
                );
            }
        }
    }

    #[test]
    fn first_law_commuting_case_has_zero_gaps() {
        let mut rng = random::seeded(91);
        let p = random::random_process(5, random::InitialState::Thermal(1.1), &mut rng);
        let report = first_law_report(&p).unwrap();
        assert!(report.mean_gap.norm() < 1e-10);
        assert!(report.var_gap.norm() < 1e-10);
        assert!(report.commutator_expectation.norm() < 1e-10);
    }

    #[test]
    fn first_law_coherent_qubit_has_imaginary_var_gap() {
        // ρ = |ψ⟩⟨ψ| with |ψ⟩ = (|0⟩ + i|1⟩)/√2, H0 = Hτ = ε|1⟩⟨1|,
        // U = Hadamard. Hand-derived oracle: U†HτU = ε|−⟩⟨−|, so
        // [U†HτU, H0] = −(ε²/√2)(|−⟩⟨1| − |1⟩⟨−|) and its expectation in
        // |ψ⟩ is −iε²/2 — nonzero and purely imaginary. (The σx eigenstate
        // (|0⟩ + |1⟩)/√2 would give exactly zero: ⟨+|−⟩ = 0.)
        let tol = Tolerances::default();
        let eps = 1.0;
        let h = HermitianOperator::from_diagonal(&[0.0, eps]);
        let rho = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let u = UnitaryOperator::new(hadamard(), &tol).unwrap();
        let p = ProcessSpec::new(rho, h.clone(), h, u).unwrap();
        let report = first_law_report(&p).unwrap();

        assert!(report.mean_gap.norm() < 1e-12);
        assert!(report.var_gap.norm() > 1e-3, "expected a genuine violation");
        assert!(report.var_gap.re.abs() < 1e-10, "gap must be purely imaginary");
        let oracle = c(0.0, -0.5 * eps * eps);
        assert!((report.var_gap - oracle).norm() < 1e-12);
        assert!((report.var_gap - report.commutator_expectation).norm() < 1e-10);
    }

    #[test]
    fn atmh_and_fcs_obey_first_law_for_arbitrary_states() {
        // j = 1, 2 moments equal those of ΔÛ for every state, not just Gibbs.
        for seed in [5u64, 6, 7] {
            let mut rng = random::seeded(seed);
            let p = random::random_process(4, random::InitialState::Mixed, &mut rng);
            let du1 = moments(&p, DistributionKind::DuOp, 1).unwrap();
            let du2 = moments(&p, DistributionKind::DuOp, 2).unwrap();
            for kind in [DistributionKind::Atmh, DistributionKind::Fcs] {
                let m1 = moments(&p, kind, 1).unwrap();
                let m2 = moments(&p, kind, 2).unwrap();
                assert!((m1 - du1).norm() < 1e-10, "{kind:?} mean gap");
                assert!((m2 - du2).norm() < 1e-10, "{kind:?} variance gap");
            }
        }
    }

    #[test]
    fn variance_relation_residuals() {
        // Trivial case: eigenstate, identity process → both variances zero.
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let rho = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = ProcessSpec::new(rho, h.clone(), h.clone(), UnitaryOperator::identity(2)).unwrap();
        assert!(du_variance_relation_check(&p).unwrap() < 1e-12);

        // Counterexample process.
        let beta = (2.0f64).ln();
        let rho = gibbs(&h, beta).unwrap();
        let p = ProcessSpec::new(rho, h.clone(), h, UnitaryOperator::identity(2)).unwrap();
        assert!(du_variance_relation_check(&p).unwrap() < 1e-12);

        // Random noncommuting process.
        let mut rng = random::seeded(17);
        let p = random::random_process(4, random::InitialState::Mixed, &mut rng);
        assert!(du_variance_relation_check(&p).unwrap() < 1e-9);
    }

    #[test]
    fn moment_order_out_of_range_errors() {
        let mut rng = random::seeded(2);
        let p = random::random_process(3, random::InitialState::Mixed, &mut rng);
        assert!(matches!(
            moments(&p, DistributionKind::Rs, 5),
            Err(WorkdistError::UnsupportedMoment { j: 5 })
        ));
        assert!(matches!(
            moments(&p, DistributionKind::Rs, 0),
            Err(WorkdistError::UnsupportedMoment { j: 0 })
        ));
    }
}
