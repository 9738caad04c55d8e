//! Numerical tolerances used by validation checks.

use serde::{Deserialize, Serialize};

/// All tolerances in one place; defaults match the documented invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Norm drift allowed after a unitary step.
    pub unitarity: f64,
    /// Elementwise deviation from `A = A†`.
    pub hermiticity: f64,
    /// Imaginary residue tolerated in an expectation value.
    pub expectation_imag: f64,
    /// Trace deviation of a density matrix.
    pub density_trace: f64,
    /// Most negative eigenvalue accepted for a density matrix.
    pub density_negativity: f64,
    /// Eigen-residual `‖Hv − λv‖` relative to `‖H‖`.
    pub eigen_residual: f64,
    /// Distance of a system state from an eigenvector of `H_S`.
    pub eigenstate: f64,
    /// Relative gap (fraction of the spectral range) below which two
    /// unperturbed levels count as degenerate.
    pub gap_relative: f64,
    /// Matrix elements below this are "zero" in the degeneracy screen.
    pub matrix_element: f64,
    /// Norm drift that aborts a propagation.
    pub propagation_drift: f64,
    /// Largest boundary amplitude of a grid packet.
    pub packet_leakage: f64,
    /// Largest population allowed in the top two Fock levels.
    pub fock_truncation: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            unitarity: 1e-12,
            hermiticity: 1e-12,
            expectation_imag: 1e-10,
            density_trace: 1e-10,
            density_negativity: 1e-10,
            eigen_residual: 1e-10,
            eigenstate: 1e-8,
            gap_relative: 1e-8,
            matrix_element: 1e-10,
            propagation_drift: 1e-8,
            packet_leakage: 1e-8,
            fock_truncation: 1e-8,
        }
    }
}
