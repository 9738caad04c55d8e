//! Dense complex linear algebra over labeled finite-dimensional spaces.

mod density;
mod operator;
mod space;
mod spectral;
mod state;

pub use density::{partial_trace, DensityMatrix};
pub use operator::{hermiticity_defect, pauli, sigma_dot, HermitianOperator};
pub use space::{BasisKind, CompositeSpace, GridSpec, HilbertFactor};
pub use spectral::{eigensystem, matrix_exponential_apply, BlockSpectrum, BlockStructure, Eigensystem};
pub use state::QuantumState;

/// Dense representations stop here.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Free-function form of [`HermitianOperator::embed`].
pub fn embed<R: crate::Real>(
    op: &HermitianOperator<R>,
    space: &CompositeSpace,
) -> crate::Result<HermitianOperator<R>> {
    op.embed(space)
}

/// Free-function form of [`HermitianOperator::expectation`].
pub fn expectation<R: crate::Real>(op: &HermitianOperator<R>, psi: &QuantumState<R>) -> crate::Result<f64> {
    op.expectation(psi)
}
