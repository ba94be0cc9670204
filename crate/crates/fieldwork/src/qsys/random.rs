//! Seeded random operators, states, and processes for test suites and
//! reproducible CLI scenarios.
//!
//! Everything is driven by an explicit [`ChaCha8Rng`] so a (seed, dimension)
//! pair pins the ensemble member exactly, across platforms and runs.

use super::{gibbs, ComplexMatrix, DensityMatrix, HermitianOperator, ProcessSpec, Tolerances, UnitaryOperator};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic generator from a bare integer seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ginibre(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Random Hermitian matrix (A + A†)/(2√d) with Gaussian entries.
///
/// The 1/√d scaling keeps the spectral radius O(1) independent of dimension,
/// so thermal weights at β up to ~5 stay far from overflow.
pub fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let a = ginibre(d, rng);
    (&a + a.adjoint()).scale(0.5 / (d as f64).sqrt())
}

/// Haar-random unitary via the phase-fixed QR of a Ginibre matrix.
pub fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> UnitaryOperator {
    let g = ginibre(d, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Fix the column phases so the distribution is exactly Haar.
    for c in 0..d {
        let r_cc = r[(c, c)];
        let phase = if r_cc.norm() > 0.0 {
            r_cc / r_cc.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(c);
        col *= phase;
    }
    UnitaryOperator::new(q, &Tolerances::default()).expect("QR of a Ginibre matrix is unitary")
}

/// Random full-rank mixed state GG†/Tr(GG†) (Hilbert–Schmidt ensemble).
pub fn random_density(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = ginibre(d, rng);
    let p = &g * g.adjoint();
    let tr = p.trace().re;
    let m = p.scale(1.0 / tr);
    DensityMatrix::new(m, &Tolerances::default()).expect("normalized Gram matrix is a state")
}

/// How the initial state of a random process is drawn.
#[derive(Debug, Clone, Copy)]
pub enum InitialState {
    /// Gibbs state of H₀ at the given inverse temperature.
    Thermal(f64),
    /// Hilbert–Schmidt-random mixed state (generically [ρ, H₀] ≠ 0).
    Mixed,
}

/// Random process (ρ, H₀, H_τ, U) with independent Hamiltonians and a Haar
/// unitary.
pub fn random_process(d: usize, initial: InitialState, rng: &mut ChaCha8Rng) -> ProcessSpec {
    let tol = Tolerances::default();
    let h0 = HermitianOperator::new(random_hermitian(d, rng), &tol).expect("Hermitian by construction");
    let htau = HermitianOperator::new(random_hermitian(d, rng), &tol).expect("Hermitian by construction");
    let u = random_unitary(d, rng);
    let rho = match initial {
        InitialState::Thermal(beta) => gibbs(&h0, beta).expect("β ≥ 0"),
        InitialState::Mixed => random_density(d, rng),
    };
    ProcessSpec::new(rho, h0, htau, u).expect("dimensions agree by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = random_hermitian(5, &mut seeded(42));
        let b = random_hermitian(5, &mut seeded(42));
        assert_eq!(a, b);
        let u1 = random_unitary(4, &mut seeded(9));
        let u2 = random_unitary(4, &mut seeded(9));
        assert_eq!(u1.matrix(), u2.matrix());
    }

    #[test]
    fn thermal_process_state_commutes_with_h0() {
        let p = random_process(6, InitialState::Thermal(1.5), &mut seeded(1));
        let comm = p.rho.matrix() * p.h0.matrix() - p.h0.matrix() * p.rho.matrix();
        let max = comm.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(max < 1e-12, "Gibbs state must commute with its Hamiltonian, got {max:.3e}");
    }

    #[test]
    fn mixed_process_state_generically_does_not_commute() {
        let p = random_process(4, InitialState::Mixed, &mut seeded(2));
        let comm = p.rho.matrix() * p.h0.matrix() - p.h0.matrix() * p.rho.matrix();
        let max = comm.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(max > 1e-6);
    }
}
