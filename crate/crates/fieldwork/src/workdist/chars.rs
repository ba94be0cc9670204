//! Characteristic functions P̃(μ) of the work quasi-distributions, evaluated
//! from trace formulas in the spectral bases — never by differentiating or
//! transforming a sampled distribution.
//!
//! All three evaluate finite exponential sums, so a complex μ (the
//! fluctuation-theorem strip μ + iβ) is handled by the same code path with
//! no analytic-continuation machinery: e^{i(μ+iβ)ε} is just the exponential
//! of a complex number.

use super::SpectralData;
use crate::qsys::{ComplexMatrix, ProcessSpec};
use num_complex::Complex64;

/// A characteristic function sampled on a μ grid.
#[derive(Debug, Clone)]
pub struct CharScan {
    /// Sample points μ (units: 1/energy).
    pub mu_values: Vec<f64>,
    /// P̃(μ) at each sample point.
    pub values: Vec<Complex64>,
}

impl CharScan {
    /// Bundle a scan; debug-asserts P̃(0) = 1 when 0 is on the grid.
    pub fn new(mu_values: Vec<f64>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(mu_values.len(), values.len());
        if let Some(k) = mu_values.iter().position(|&m| m == 0.0) {
            debug_assert!(
                (values[k] - Complex64::new(1.0, 0.0)).norm() < 1e-12,
                "characteristic function must be 1 at μ = 0"
            );
        }
        CharScan { mu_values, values }
    }
}

/// Precomputed spectral coefficients for fast repeated characteristic-
/// function evaluation on one process (one O(d³) setup, O(d²) per RS/ATMH
/// value and one small matrix product per FCS value).
pub struct ProcessChars {
    /// Eigenvalues of H₀ / H_τ, ascending, unmerged (sums over degenerate
    /// levels contribute identically whether or not they are grouped).
    eps0: Vec<f64>,
    eps_tau: Vec<f64>,
    /// q[(i,j)] = ⟨ε_i|ρU†|ε'_j⟩⟨ε'_j|U|ε_i⟩ — Kirkwood–Dirac coefficients.
    q: ComplexMatrix,
    /// b[(j,i)] = ⟨ε'_j|U|ε_i⟩ and r[(i,i')] = ⟨ε_i|ρ|ε_{i'}⟩ for FCS.
    b: ComplexMatrix,
    r: ComplexMatrix,
}

impl ProcessChars {
    /// Decompose the process into its spectral coefficients.
    pub fn new(p: &ProcessSpec) -> Self {
        let sd = SpectralData::new(p);
        let d = sd.eps0.len();
        let mut q = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                q[(i, j)] = sd.c[(i, j)] * sd.b[(j, i)];
            }
        }
        ProcessChars {
            eps0: sd.eps0,
            eps_tau: sd.eps_tau,
            q,
            b: sd.b,
            r: sd.r,
        }
    }

    fn phases(eps: &[f64], factor: Complex64) -> Vec<Complex64> {
        eps.iter().map(|&e| (factor * e).exp()).collect()
    }

    /// P̃_RS(μ) = ⟨U† e^{iμH_τ} U e^{−iμH₀}⟩_ρ = Σ_{ij} q_ij e^{iμ(ε'_j−ε_i)}.
    pub fn char_rs(&self, mu: impl Into<Complex64>) -> Complex64 {
        let imu = Complex64::i() * mu.into();
        let ph0 = Self::phases(&self.eps0, -imu);
        let pht = Self::phases(&self.eps_tau, imu);
        let d = self.eps0.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += self.q[(i, j)] * pht[j];
            }
            acc += row * ph0[i];
        }
        acc
    }

    /// P̃_ATMH(μ) = ½⟨U†e^{iμH_τ}Ue^{−iμH₀} + e^{−iμH₀}U†e^{iμH_τ}U⟩_ρ.
    ///
    /// On the spectral coefficients this is the same exponential sum as RS
    /// with Re(q_ij) in place of q_ij (for real μ the two operator orderings
    /// are complex conjugates pair by pair; the exponential sum below is the
    /// entire-function continuation of that real-μ identity).
    pub fn char_atmh(&self, mu: impl Into<Complex64>) -> Complex64 {
        let imu = Complex64::i() * mu.into();
        let ph0 = Self::phases(&self.eps0, -imu);
        let pht = Self::phases(&self.eps_tau, imu);
        let d = self.eps0.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += Complex64::new(self.q[(i, j)].re, 0.0) * pht[j];
            }
            acc += row * ph0[i];
        }
        acc
    }

    /// P̃_FCS(μ) = ⟨e^{−iμH₀/2} U† e^{iμH_τ} U e^{−iμH₀/2}⟩_ρ.
    pub fn char_fcs(&self, mu: impl Into<Complex64>) -> Complex64 {
        let imu = Complex64::i() * mu.into();
        let ph0: Vec<Complex64> = Self::phases(&self.eps0, -imu * 0.5);
        let pht = Self::phases(&self.eps_tau, imu);
        let d = self.eps0.len();
        // m = diag(ph0) · r · diag(ph0), then Σ_j pht_j (B m B†)_{jj}.
        let mut m = self.r.clone();
        for i in 0..d {
            for ip in 0..d {
                m[(i, ip)] *= ph0[i] * ph0[ip];
            }
        }
        let bm = &self.b * m;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..d {
            let mut z = Complex64::new(0.0, 0.0);
            for ip in 0..d {
                z += bm[(j, ip)] * self.b[(j, ip)].conj();
            }
            acc += pht[j] * z;
        }
        acc
    }

    /// Evaluate one kind over a μ grid.
    pub fn scan(&self, kind: super::DistributionKind, mu_grid: &[f64]) -> CharScan {
        let values = mu_grid
            .iter()
            .map(|&mu| match kind {
                super::DistributionKind::Rs => self.char_rs(mu),
                super::DistributionKind::Atmh => self.char_atmh(mu),
                super::DistributionKind::Fcs => self.char_fcs(mu),
                other => panic!("no characteristic-function engine for {other:?}"),
            })
            .collect();
        CharScan::new(mu_grid.to_vec(), values)
    }
}

/// One-shot P̃_RS(μ); μ may be complex (fluctuation-theorem strip).
pub fn char_rs(p: &ProcessSpec, mu: impl Into<Complex64>) -> Complex64 {
    ProcessChars::new(p).char_rs(mu)
}

/// One-shot P̃_ATMH(μ).
pub fn char_atmh(p: &ProcessSpec, mu: impl Into<Complex64>) -> Complex64 {
    ProcessChars::new(p).char_atmh(mu)
}

/// One-shot P̃_FCS(μ).
pub fn char_fcs(p: &ProcessSpec, mu: impl Into<Complex64>) -> Complex64 {
    ProcessChars::new(p).char_fcs(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsys::{
        expm_i, gibbs, pauli_x, random, DensityMatrix, HermitianOperator, ProcessSpec,
        Tolerances, UnitaryOperator,
    };
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn all_chars_are_one_at_mu_zero() {
        let mut rng = random::seeded(8);
        let p = random::random_process(5, random::InitialState::Mixed, &mut rng);
        let pc = ProcessChars::new(&p);
        for v in [pc.char_rs(0.0), pc.char_atmh(0.0), pc.char_fcs(0.0)] {
            assert!((v - c(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn spin_flip_char_is_a_pure_phase() {
        // ρ = |0⟩⟨0|, H0 = Hτ = ε|1⟩⟨1|, U = X → P̃_RS(μ) = e^{iμε}.
        let eps = 1.7;
        let tol = Tolerances::default();
        let h = HermitianOperator::from_diagonal(&[0.0, eps]);
        let p = ProcessSpec::new(
            DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(),
            h.clone(),
            h,
            UnitaryOperator::new(pauli_x(), &tol).unwrap(),
        )
        .unwrap();
        let pc = ProcessChars::new(&p);
        for &mu in &[0.3, -1.1, 2.4] {
            let expect = (Complex64::i() * mu * eps).exp();
            assert!((pc.char_rs(mu) - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn atmh_char_has_real_distribution_symmetry() {
        // Real weights ⇒ P̃(−μ) = conj(P̃(μ)).
        let mut rng = random::seeded(21);
        let h0 = HermitianOperator::new(random::random_hermitian(5, &mut rng), &Tolerances::default()).unwrap();
        let htau = HermitianOperator::new(random::random_hermitian(5, &mut rng), &Tolerances::default()).unwrap();
        let u = random::random_unitary(5, &mut rng);
        let rho = gibbs(&h0, 1.0).unwrap();
        let p = ProcessSpec::new(rho, h0, htau, u).unwrap();
        let pc = ProcessChars::new(&p);
        for &mu in &[0.4, 1.9, -3.3, 7.0] {
            let gap = (pc.char_atmh(-mu) - pc.char_atmh(mu).conj()).norm();
            assert!(gap < 1e-12);
        }
    }

    #[test]
    fn chars_coincide_when_state_commutes_with_h0() {
        let mut rng = random::seeded(33);
        let p = random::random_process(6, random::InitialState::Thermal(0.8), &mut rng);
        let pc = ProcessChars::new(&p);
        for &mu in &[0.1, -0.9, 2.2, 5.5, -8.8] {
            let rs = pc.char_rs(mu);
            let atmh = pc.char_atmh(mu);
            let fcs = pc.char_fcs(mu);
            assert!((rs - atmh).norm() < 1e-12, "RS vs ATMH at μ = {mu}");
            assert!((rs - fcs).norm() < 1e-12, "RS vs FCS at μ = {mu}");
        }
    }

    #[test]
    fn operator_form_oracle_matches_coefficient_sums() {
        // Brute-force matrix oracle for all three definitions, real μ.
        let mut rng = random::seeded(47);
        let p = random::random_process(4, random::InitialState::Mixed, &mut rng);
        let pc = ProcessChars::new(&p);
        let u = p.u.matrix();
        for &mu in &[0.7, -2.3] {
            let e_t = expm_i(&p.htau, mu);
            let e_0 = expm_i(&p.h0, -mu);
            let e_0h = expm_i(&p.h0, -mu * 0.5);

            let rs_oracle = p.rho.expectation(&(u.adjoint() * &e_t * u * &e_0));
            assert!((pc.char_rs(mu) - rs_oracle).norm() < 1e-12);

            let term1 = u.adjoint() * &e_t * u * &e_0;
            let term2 = &e_0 * u.adjoint() * &e_t * u;
            let atmh_oracle = (p.rho.expectation(&term1) + p.rho.expectation(&term2)) * 0.5;
            assert!((pc.char_atmh(mu) - atmh_oracle).norm() < 1e-12);

            let fcs_oracle = p.rho.expectation(&(&e_0h * u.adjoint() * &e_t * u * &e_0h));
            assert!((pc.char_fcs(mu) - fcs_oracle).norm() < 1e-12);
        }
    }

    #[test]
    fn complex_strip_matches_matrix_oracle() {
        // e^{i(μ+iβ)H} via the cached spectrum is the analytic continuation;
        // compare against explicit complex-exponential matrices.
        let mut rng = random::seeded(53);
        let p = random::random_process(4, random::InitialState::Thermal(1.2), &mut rng);
        let pc = ProcessChars::new(&p);
        let mu = Complex64::new(0.8, 1.2);
        let e_t = expm_i(&p.htau, mu);
        let e_0 = expm_i(&p.h0, -mu);
        let oracle = p
            .rho
            .expectation(&(p.u.matrix().adjoint() * &e_t * p.u.matrix() * &e_0));
        assert!((pc.char_rs(mu) - oracle).norm() < 1e-12);
    }

    #[test]
    fn scan_matches_pointwise_evaluation() {
        let mut rng = random::seeded(60);
        let p = random::random_process(3, random::InitialState::Mixed, &mut rng);
        let pc = ProcessChars::new(&p);
        let grid: Vec<f64> = (0..11).map(|k| -2.0 + 0.4 * k as f64).collect();
        let scan = pc.scan(super::super::DistributionKind::Rs, &grid);
        for (k, &mu) in grid.iter().enumerate() {
            assert_abs_diff_eq!(scan.values[k].re, pc.char_rs(mu).re, epsilon = 1e-15);
            assert_abs_diff_eq!(scan.values[k].im, pc.char_rs(mu).im, epsilon = 1e-15);
        }
    }
}
