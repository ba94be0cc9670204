//! Ancilla-qubit interferometric readout of the work characteristic function.
//!
//! A probe qubit is attached to the system, rotated into an equal
//! superposition, and used as the control of a two-branch unitary: one branch
//! applies the process unitary after a phase accumulated under the initial
//! Hamiltonian, the other applies it before a phase accumulated under the
//! final Hamiltonian. After a second Hadamard the probe's reduced state is
//!
//! ```text
//! ρ_μ = ½ [ I + Re P̃(μ) σ_z + Im P̃(μ) σ_y ]
//! ```
//!
//! so the two Pauli expectations of the probe reconstruct the full complex
//! characteristic function P̃(μ) of the work quasi-distribution with complex
//! weights — the point of the scheme is that an interference experiment
//! measures a quasi-distribution that is not sampleable as a histogram.
//!
//! Readout is computed at the expectation level (exact traces); a seeded
//! binomial shot-noise variant is available for realism studies and is never
//! engaged unless explicitly requested.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::qsys::{
    controlled, expm_i, hadamard, pauli_y, pauli_z, ptrace, tensor, ComplexMatrix, DensityMatrix,
    ProcessSpec, Subsystem, Tolerances, UnitaryOperator,
};
use crate::workdist::CharScan;

/// Outcome of one protocol run at a fixed real μ.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    /// Conjugate variable at which the characteristic function was probed.
    pub mu: f64,
    /// Reduced 2×2 state of the probe qubit after the second Hadamard.
    pub probe_state: DensityMatrix,
    /// ⟨σ_z⟩ + i⟨σ_y⟩ of the probe — the reconstructed characteristic value.
    pub reconstructed_char: Complex64,
}

/// Controlled two-branch unitary on system ⊗ ancilla:
/// M̂_μ = Û e^{−iμĤ_0} ⊗ |0⟩⟨0| + e^{−iμĤ_τ} Û ⊗ |1⟩⟨1|.
///
/// The ancilla is the second tensor factor. Both branches are products of
/// unitaries, so the result is unitary to machine precision.
pub fn build_m(p: &ProcessSpec, mu: f64) -> UnitaryOperator {
    let tol = Tolerances::default();
    let branch0 = UnitaryOperator::new(p.u.matrix() * expm_i(&p.h0, -mu), &tol)
        .expect("product of unitaries is unitary");
    let branch1 = UnitaryOperator::new(expm_i(&p.htau, -mu) * p.u.matrix(), &tol)
        .expect("product of unitaries is unitary");
    controlled(&branch0, &branch1).expect("branches share the system dimension")
}

/// Run the interferometric protocol at one real μ.
///
/// Sequence: ρ ⊗ |0⟩⟨0| → (I ⊗ H) → M̂_μ → (I ⊗ H) → partial trace over the
/// system. The reconstructed value equals the trace-formula characteristic
/// function of the complex-weight work distribution to machine precision.
pub fn run_protocol(p: &ProcessSpec, mu: f64) -> ProtocolResult {
    let tol = Tolerances::default();
    let d = p.dim();

    let ket0 = ComplexMatrix::from_fn(2, 2, |i, j| {
        Complex64::new(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0)
    });
    let joint = DensityMatrix::new(tensor(p.rho.matrix(), &ket0), &tol)
        .expect("density ⊗ projector is a density matrix");

    let h_anc = UnitaryOperator::new(tensor(&ComplexMatrix::identity(d, d), &hadamard()), &tol)
        .expect("I ⊗ H is unitary");
    let m = build_m(p, mu);

    let after = joint.evolved(&h_anc).evolved(&m).evolved(&h_anc);
    let probe_state =
        ptrace(&after, d, 2, Subsystem::Second).expect("joint state has dimension d·2");

    let z = probe_state.expectation(&pauli_z()).re;
    let y = probe_state.expectation(&pauli_y()).re;
    ProtocolResult {
        mu,
        probe_state,
        reconstructed_char: Complex64::new(z, y),
    }
}

/// Run the protocol over a μ grid and collect the reconstructed values.
pub fn scan(p: &ProcessSpec, mu_grid: &[f64]) -> CharScan {
    let values = mu_grid
        .iter()
        .map(|&mu| run_protocol(p, mu).reconstructed_char)
        .collect();
    CharScan::new(mu_grid.to_vec(), values)
}

/// Run the protocol with finite measurement statistics.
///
/// Each Pauli readout (σ_z, then σ_y) is sampled as `shots` independent
/// two-outcome measurements of the exact probe state, so the reconstructed
/// value carries binomial noise of scale 1/√shots and may exceed the unit
/// disc by that amount. The probe state itself is reported exactly.
pub fn run_protocol_sampled<R: Rng>(
    p: &ProcessSpec,
    mu: f64,
    shots: u64,
    rng: &mut R,
) -> ProtocolResult {
    assert!(shots > 0, "shot-noise mode needs at least one shot");
    let exact = run_protocol(p, mu);
    let mut estimate = |expectation: f64| -> f64 {
        let prob_up = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
        let bin = Binomial::new(shots, prob_up).expect("probability clamped to [0, 1]");
        let ups = bin.sample(rng);
        2.0 * ups as f64 / shots as f64 - 1.0
    };
    let z = estimate(exact.reconstructed_char.re);
    let y = estimate(exact.reconstructed_char.im);
    ProtocolResult {
        mu,
        probe_state: exact.probe_state,
        reconstructed_char: Complex64::new(z, y),
    }
}

/// Seeded shot-noise scan: one reproducible RNG stream across the grid.
pub fn scan_sampled(p: &ProcessSpec, mu_grid: &[f64], shots: u64, seed: u64) -> CharScan {
    let mut rng = crate::qsys::random::seeded(seed);
    let values = mu_grid
        .iter()
        .map(|&mu| run_protocol_sampled(p, mu, shots, &mut rng).reconstructed_char)
        .collect();
    // Constructed literally: binomial noise breaks the exact-scan P̃(0) = 1
    // identity by O(1/√shots), which CharScan::new would reject.
    CharScan {
        mu_values: mu_grid.to_vec(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsys::{eigh, gibbs, pauli_x, random, HermitianOperator};
    use crate::workdist::char_rs;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit_process(rho: DensityMatrix, eps: f64, u: ComplexMatrix) -> ProcessSpec {
        let tol = Tolerances::default();
        let h = HermitianOperator::from_diagonal(&[0.0, eps]);
        let u = UnitaryOperator::new(u, &tol).unwrap();
        ProcessSpec::new(rho, h.clone(), h, u).unwrap()
    }

    #[test]
    fn build_m_is_identity_for_trivial_inputs() {
        let rho = DensityMatrix::maximally_mixed(3);
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0, 2.0]);
        let p = ProcessSpec::new(rho, h.clone(), h, UnitaryOperator::identity(3)).unwrap();
        let m = build_m(&p, 0.0);
        let gap = (m.matrix() - ComplexMatrix::identity(6, 6)).norm();
        assert!(gap < 1e-14);
    }

    #[test]
    fn build_m_spin_flip_matches_hand_multiplied_blocks() {
        // ε = 1, μ = π: e^{−iπH} = diag(1, −1) = σ_z, so the two branches are
        // X·σ_z = [[0,−1],[1,0]] and σ_z·X = [[0,1],[−1,0]]. Interleaving with
        // the ancilla as the second factor gives an explicit 4×4 oracle.
        let rho = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = qubit_process(rho, 1.0, pauli_x());
        let m = build_m(&p, std::f64::consts::PI);

        let mut oracle = ComplexMatrix::zeros(4, 4);
        // Branch 0 entries A[i,j] at rows/cols (2i, 2j); branch 1 at odd ones.
        oracle[(0, 2)] = c(-1.0, 0.0);
        oracle[(2, 0)] = c(1.0, 0.0);
        oracle[(1, 3)] = c(1.0, 0.0);
        oracle[(3, 1)] = c(-1.0, 0.0);
        assert!((m.matrix() - oracle).norm() < 1e-12);
    }

    #[test]
    fn build_m_is_unitary_for_random_processes() {
        for seed in [3u64, 4, 5] {
            let mut rng = random::seeded(seed);
            let p = random::random_process(4, random::InitialState::Mixed, &mut rng);
            for mu in [-2.3, 0.7, 11.0] {
                let m = build_m(&p, mu);
                let gap = (m.matrix().adjoint() * m.matrix() - ComplexMatrix::identity(8, 8))
                    .norm();
                assert!(gap < 1e-12, "unitarity residual {gap:.3e}");
            }
        }
    }

    #[test]
    fn protocol_at_mu_zero_returns_probe_to_ground() {
        let mut rng = random::seeded(11);
        let p = random::random_process(3, random::InitialState::Thermal(0.8), &mut rng);
        let r = run_protocol(&p, 0.0);
        assert!((r.reconstructed_char - c(1.0, 0.0)).norm() < 1e-12);
        let ground = r.probe_state.matrix()[(0, 0)];
        assert_abs_diff_eq!(ground.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spin_flip_quarter_period_reconstructs_i() {
        // ρ = |0⟩⟨0|, H = ε|1⟩⟨1|, U = X: the work is deterministically ε, so
        // P̃(μ) = e^{iμε} and με = π/2 gives exactly i.
        let eps = 2.0;
        let rho = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = qubit_process(rho, eps, pauli_x());
        let r = run_protocol(&p, std::f64::consts::FRAC_PI_2 / eps);
        assert!((r.reconstructed_char - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn protocol_matches_trace_formula_for_thermal_process() {
        // The protocol measures the same object the trace formula computes;
        // the two routes share no code past ProcessSpec.
        let mut rng = random::seeded(17);
        let p = random::random_process(4, random::InitialState::Thermal(0.6), &mut rng);
        for k in 0..50 {
            let mu = -6.0 + 12.0 * k as f64 / 49.0;
            let r = run_protocol(&p, mu);
            let oracle = char_rs(&p, mu);
            assert!(
                (r.reconstructed_char - oracle).norm() < 1e-12,
                "protocol deviates at μ = {mu}"
            );
        }
    }

    #[test]
    fn probe_state_is_positive_and_char_stays_in_unit_disc() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(23);
        let p = random::random_process(5, random::InitialState::Mixed, &mut rng);
        for mu in [-4.2, -0.3, 1.9, 8.8] {
            let r = run_protocol(&p, mu);
            let (eigs, _) = eigh(r.probe_state.matrix(), &tol).unwrap();
            for e in eigs {
                assert!((-1e-12..=1.0 + 1e-12).contains(&e), "probe eigenvalue {e}");
            }
            assert!(r.reconstructed_char.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn scan_matches_direct_char_scan() {
        let beta = 1.1;
        let h = HermitianOperator::from_diagonal(&[0.0, 0.7, 1.9]);
        let mut rng = random::seeded(29);
        let u = random::random_unitary(3, &mut rng);
        let p = ProcessSpec::new(gibbs(&h, beta).unwrap(), h.clone(), h, u).unwrap();

        let grid: Vec<f64> = (0..101).map(|k| -5.0 + 0.1 * k as f64).collect();
        let s = scan(&p, &grid);
        for (k, &mu) in grid.iter().enumerate() {
            assert!((s.values[k] - char_rs(&p, mu)).norm() < 1e-12);
        }
    }

    #[test]
    fn scan_is_conjugate_symmetric_for_commuting_case() {
        // [ρ, H] = 0 and H_0 = H_τ with U = X: the distribution is a real
        // probability (coincides with its two-measurement histogram), so
        // P̃(−μ) = conj(P̃(μ)).
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let p = qubit_process(gibbs(&h, 0.9).unwrap(), 1.0, pauli_x());
        let grid: Vec<f64> = (-10..=10).map(|k| 0.35 * k as f64).collect();
        let s = scan(&p, &grid);
        let n = grid.len();
        for k in 0..n {
            let mirrored = s.values[n - 1 - k].conj();
            assert!((s.values[k] - mirrored).norm() < 1e-13);
        }
    }

    #[test]
    fn sampled_scan_is_reproducible_and_converges() {
        let rho = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = qubit_process(rho, 1.0, hadamard());
        let grid = [0.4, 1.3];

        let a = scan_sampled(&p, &grid, 40_000, 7);
        let b = scan_sampled(&p, &grid, 40_000, 7);
        assert_eq!(a.values, b.values, "same seed must reproduce bytes");

        let exact = scan(&p, &grid);
        for k in 0..grid.len() {
            let err = (a.values[k] - exact.values[k]).norm();
            // Binomial noise scale is 1/√40000 = 5e−3; allow a generous
            // multiple so the test is deterministic-by-seed, not flaky.
            assert!(err < 5e-2, "sampled estimate off by {err:.3e}");
        }
        // Different seed gives a different realization.
        let other = scan_sampled(&p, &grid, 40_000, 8);
        assert_ne!(a.values, other.values);
    }
}
