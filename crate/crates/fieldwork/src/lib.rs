//! Work and internal-energy statistics for unitary quantum processes.
//!
//! The crate has two computational engines and the glue that compares them:
//!
//! * [`qsys`] — dense complex linear algebra for Hilbert spaces of dimension
//!   d ≲ 100: Hermitian eigendecomposition (cached), matrix exponentials,
//!   Gibbs states, tensor products and partial traces.
//! * [`workdist`] — finite-dimensional quasi-probability distributions of
//!   work and internal-energy change (Ramsey/Kirkwood–Dirac, Margenau–Hill
//!   real part, full-counting statistics, two-point measurement, and the
//!   two-measurement convolution), their moments, and Crooks/Jarzynski
//!   fluctuation-theorem checks.
//! * [`ramsey`] — the ancilla-qubit interferometric protocol that measures
//!   the work characteristic function, simulated at the density-matrix level.
//! * [`field`] — closed-form, non-perturbative work statistics for a
//!   displacement-type unitary acting on a thermal (KMS) state of a free
//!   scalar field in n+1 dimensions: cumulants, characteristic functions on
//!   the complex strip, FFT inversion to a density, and the moment
//!   inequalities between work and internal-energy change.
//! * [`cli`] — a scenario runner over JSON configs emitting CSV/JSON tables.
//!
//! All quantities are in natural units (ħ = c = 1); energies are in the same
//! unit as the Hamiltonian eigenvalues fed in, and μ (the characteristic-
//! function argument) carries inverse-energy units.

pub mod cli;
pub mod field;
pub mod qsys;
pub mod ramsey;
pub mod workdist;
