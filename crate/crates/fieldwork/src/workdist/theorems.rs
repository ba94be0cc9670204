//! Fluctuation-theorem checks: the detailed (Crooks) identity on the
//! analytic strip of the work characteristic function, and the Jarzynski
//! equality it implies at μ = iβ.
//!
//! Conventions: the forward process starts from the Gibbs state of H₀ and
//! runs U; the reverse process starts from the Gibbs state of H_τ, swaps the
//! Hamiltonians, and runs U†. The free-energy factor is the partition ratio
//! e^{−βΔF} = Tr e^{−βH_τ} / Tr e^{−βH₀}, evaluated through logs so large β
//! cannot overflow.

use super::{chars::ProcessChars, WorkdistError};
use crate::qsys::{gibbs, log_partition_ratio, HermitianOperator, ProcessSpec, UnitaryOperator};
use num_complex::Complex64;

/// Result of a Crooks-identity scan over a μ grid.
#[derive(Debug, Clone)]
pub struct CrooksReport {
    /// Grid points scanned.
    pub mu_values: Vec<f64>,
    /// |P̃_fwd(μ+iβ)/P̃_rev(−μ) − e^{−βΔF}| per grid point.
    pub residuals: Vec<f64>,
    /// Largest residual over the grid.
    pub max_residual: f64,
    /// The partition-ratio factor e^{−βΔF} both sides are compared to.
    pub free_energy_factor: f64,
}

/// Scan the detailed fluctuation identity
/// P̃_fwd(μ + iβ) = e^{−βΔF} · P̃_rev(−μ) over a real μ grid.
///
/// # Errors
/// [`WorkdistError::NumericalUnderflow`] when the reverse characteristic
/// value drops below 1e−300 in modulus (the ratio is then meaningless);
/// [`WorkdistError::InvalidProcess`] for β ≤ 0.
pub fn crooks_check(
    h0: &HermitianOperator,
    htau: &HermitianOperator,
    u: &UnitaryOperator,
    beta: f64,
    mu_grid: &[f64],
) -> Result<CrooksReport, WorkdistError> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(WorkdistError::InvalidProcess {
            context: format!("Crooks check needs finite β > 0, got {beta}"),
        });
    }
    let forward = ProcessSpec::new(gibbs(h0, beta)?, h0.clone(), htau.clone(), u.clone())?;
    let reverse = ProcessSpec::new(
        gibbs(htau, beta)?,
        htau.clone(),
        h0.clone(),
        u.adjoint(),
    )?;
    let fwd = ProcessChars::new(&forward);
    let rev = ProcessChars::new(&reverse);
    let factor = log_partition_ratio(h0, htau, beta).exp();

    let mut residuals = Vec::with_capacity(mu_grid.len());
    let mut max_residual = 0.0f64;
    for &mu in mu_grid {
        let num = fwd.char_rs(Complex64::new(mu, beta));
        let den = rev.char_rs(Complex64::new(-mu, 0.0));
        if den.norm() < 1e-300 {
            return Err(WorkdistError::NumericalUnderflow {
                mu,
                magnitude: den.norm(),
            });
        }
        let r = (num / den - factor).norm();
        residuals.push(r);
        max_residual = max_residual.max(r);
    }
    Ok(CrooksReport {
        mu_values: mu_grid.to_vec(),
        residuals,
        max_residual,
        free_energy_factor: factor,
    })
}

/// Jarzynski average ⟨e^{−βW}⟩ = P̃_W(iβ) for a process whose initial state
/// is the Gibbs state of H₀ at inverse temperature β. Equals the partition
/// ratio e^{−βΔF} for every unitary U.
///
/// # Errors
/// [`WorkdistError::InvalidProcess`] when ρ is not the Gibbs state of H₀ at
/// the given β (the equality is only claimed there).
pub fn jarzynski_value(p: &ProcessSpec, beta: f64) -> Result<Complex64, WorkdistError> {
    let thermal = gibbs(&p.h0, beta)?;
    let gap = (p.rho.matrix() - thermal.matrix())
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    if gap > 1e-9 {
        return Err(WorkdistError::InvalidProcess {
            context: format!(
                "initial state is not the Gibbs state of H₀ at β = {beta} (max deviation {gap:.3e})"
            ),
        });
    }
    Ok(ProcessChars::new(p).char_rs(Complex64::new(0.0, beta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsys::{hadamard, random, HermitianOperator, Tolerances, UnitaryOperator};

    #[test]
    fn cyclic_identity_process_has_zero_residual() {
        let h = HermitianOperator::from_diagonal(&[0.0, 0.6, 1.9]);
        let u = UnitaryOperator::identity(3);
        let grid: Vec<f64> = (0..9).map(|k| -2.0 + 0.5 * k as f64).collect();
        let report = crooks_check(&h, &h, &u, 1.0, &grid).unwrap();
        assert!(report.max_residual < 1e-14);
        assert!((report.free_energy_factor - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qubit_hadamard_satisfies_crooks_on_wide_grid() {
        let tol = Tolerances::default();
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let u = UnitaryOperator::new(hadamard(), &tol).unwrap();
        let grid: Vec<f64> = (0..21).map(|k| -10.0 + k as f64).collect();
        let report = crooks_check(&h, &h, &u, 1.0, &grid).unwrap();
        assert!(
            report.max_residual < 1e-10,
            "max residual {:.3e}",
            report.max_residual
        );
    }

    #[test]
    fn general_process_crooks_with_different_hamiltonians() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(40);
        let h0 = HermitianOperator::new(random::random_hermitian(5, &mut rng), &tol).unwrap();
        let htau = HermitianOperator::new(random::random_hermitian(5, &mut rng), &tol).unwrap();
        let u = random::random_unitary(5, &mut rng);
        let grid: Vec<f64> = (0..21).map(|k| -10.0 + k as f64).collect();
        let report = crooks_check(&h0, &htau, &u, 0.7, &grid).unwrap();
        assert!(
            report.max_residual < 1e-10,
            "max residual {:.3e}",
            report.max_residual
        );
    }

    #[test]
    fn jarzynski_is_one_for_cyclic_processes() {
        let mut rng = random::seeded(44);
        let h = HermitianOperator::new(
            random::random_hermitian(4, &mut rng),
            &Tolerances::default(),
        )
        .unwrap();
        let u = random::random_unitary(4, &mut rng);
        let beta = 1.4;
        let p = ProcessSpec::new(crate::qsys::gibbs(&h, beta).unwrap(), h.clone(), h.clone(), u)
            .unwrap();
        let v = jarzynski_value(&p, beta).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn jarzynski_matches_partition_ratio_for_general_process() {
        let tol = Tolerances::default();
        let mut rng = random::seeded(45);
        let h0 = HermitianOperator::new(random::random_hermitian(4, &mut rng), &tol).unwrap();
        let htau = HermitianOperator::new(random::random_hermitian(4, &mut rng), &tol).unwrap();
        let u = random::random_unitary(4, &mut rng);
        let beta = 0.9;
        let p = ProcessSpec::new(crate::qsys::gibbs(&h0, beta).unwrap(), h0.clone(), htau.clone(), u)
            .unwrap();
        let v = jarzynski_value(&p, beta).unwrap();
        // Partition-function trace oracle, summed directly.
        let z0: f64 = h0.eigenvalues().iter().map(|&l| (-beta * l).exp()).sum();
        let zt: f64 = htau.eigenvalues().iter().map(|&l| (-beta * l).exp()).sum();
        assert!((v - Complex64::new(zt / z0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn jarzynski_rejects_non_thermal_initial_state() {
        let mut rng = random::seeded(46);
        let p = random::random_process(3, random::InitialState::Mixed, &mut rng);
        assert!(matches!(
            jarzynski_value(&p, 1.0),
            Err(WorkdistError::InvalidProcess { .. })
        ));
    }
}
