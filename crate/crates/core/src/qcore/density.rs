use nalgebra::{Complex, DMatrix};

use super::operator::HermitianOperator;
use super::space::CompositeSpace;
use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::scalar::{czero, Real};

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<R: Real> {
    space: CompositeSpace,
    matrix: DMatrix<Complex<R>>,
}

impl<R: Real> DensityMatrix<R> {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(space: CompositeSpace, matrix: DMatrix<Complex<R>>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(space, matrix)?;
        let trace = rho.trace();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix trace {trace}")));
        }
        let defect = super::operator::hermiticity_defect(&rho.matrix);
        if defect > 1e-10 {
            return Err(Error::NotHermitian { name: "rho".into(), deviation: defect });
        }
        let min = rho.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix eigenvalue {min:.3e} < 0")));
        }
        Ok(rho)
    }

    pub fn pure(psi: &QuantumState<R>) -> Self {
        let v = psi.amplitudes();
        Self { space: psi.space().clone(), matrix: v * v.adjoint() }
    }

    fn from_matrix_unchecked(space: CompositeSpace, matrix: DMatrix<Complex<R>>) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex<R>> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re.as_f64()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr().as_f64()).sum()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn population(&self, psi: &QuantumState<R>) -> Result<f64> {
        psi.check_space(&self.space)?;
        let v = psi.amplitudes();
        Ok(v.dotc(&(&self.matrix * v)).re.as_f64())
    }

    /// `tr(ρ A)`.
    pub fn expectation(&self, op: &HermitianOperator<R>) -> Result<f64> {
        if op.space() != &self.space {
            return Err(Error::DimensionMismatch {
                expected: self.space.total_dim(),
                found: op.space().total_dim(),
            });
        }
        // tr(ρA) = Σ_ij ρ_ij A_ji
        let a = op.matrix();
        let n = self.matrix.nrows();
        let mut acc = czero::<R>();
        for j in 0..n {
            for i in 0..n {
                acc += self.matrix[(i, j)] * a[(j, i)];
            }
        }
        Ok(acc.re.as_f64())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .map(|x| x.as_f64())
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Reduced state on factor `keep`, tracing out every other factor.
    pub fn partial_trace(&self, keep: &str) -> Result<DensityMatrix<R>> {
        let pos = self.space.position(keep)?;
        let (outer, dim, inner) = self.space.split_at(pos);
        let mut out = DMatrix::from_element(dim, dim, czero::<R>());
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = czero::<R>();
                for o in 0..outer {
                    for r in 0..inner {
                        let a = (o * dim + i) * inner + r;
                        let b = (o * dim + j) * inner + r;
                        acc += self.matrix[(a, b)];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        Ok(DensityMatrix { space: self.space.subspace(keep)?, matrix: out })
    }
}

/// Reduced density matrix of a pure state on factor `keep`.
pub fn partial_trace<R: Real>(psi: &QuantumState<R>, keep: &str) -> Result<DensityMatrix<R>> {
    let space = psi.space();
    let pos = space.position(keep)?;
    let (outer, dim, inner) = space.split_at(pos);
    let v = psi.amplitudes();
    let mut out = DMatrix::from_element(dim, dim, czero::<R>());
    // ρ_ij = Σ_{o,r} ψ[o,i,r] ψ*[o,j,r]
    for o in 0..outer {
        for r in 0..inner {
            for i in 0..dim {
                let a = v[(o * dim + i) * inner + r];
                if a == czero() {
                    continue;
                }
                for j in 0..dim {
                    out[(i, j)] += a * v[(o * dim + j) * inner + r].conj();
                }
            }
        }
    }
    Ok(DensityMatrix { space: space.subspace(keep)?, matrix: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::space::{BasisKind, HilbertFactor};

    fn two_qubits() -> CompositeSpace {
        CompositeSpace::new(vec![
            HilbertFactor::new("a", 2, BasisKind::Spin).unwrap(),
            HilbertFactor::new("b", 2, BasisKind::Spin).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn product_state_is_pure() {
        let s = two_qubits();
        let psi = QuantumState::<f64>::from_parts(s, &[(0.6, 0.0), (0.0, 0.8), (0.0, 0.0), (0.0, 0.0)]).unwrap();
        for keep in ["a", "b"] {
            let rho = partial_trace(&psi, keep).unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-12);
            assert!((rho.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_state_is_maximally_mixed() {
        let s = two_qubits();
        let psi = QuantumState::<f64>::from_parts(s, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]).unwrap();
        let rho = partial_trace(&psi, "b").unwrap();
        assert!((rho.purity() - 0.5).abs() < 1e-12);
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!(rho.matrix()[(0, 1)].norm() < 1e-12);
        // the mixed-state path agrees with the pure-state path
        let via_rho = DensityMatrix::pure(&psi).partial_trace("b").unwrap();
        assert!((via_rho.matrix() - rho.matrix()).norm() < 1e-14);
    }

    #[test]
    fn unknown_label() {
        let psi = QuantumState::<f64>::basis(two_qubits(), 0).unwrap();
        assert!(matches!(partial_trace(&psi, "c"), Err(Error::UnknownFactor(_))));
    }

    #[test]
    fn validated_constructor() {
        let s = CompositeSpace::single(HilbertFactor::new("a", 2, BasisKind::Spin).unwrap());
        let half = Complex::new(0.5, 0.0);
        let good = DMatrix::from_row_slice(2, 2, &[half, czero(), czero(), half]);
        assert!(DensityMatrix::<f64>::new(s.clone(), good).is_ok());
        let neg = DMatrix::from_row_slice(2, 2, &[Complex::new(1.5, 0.0), czero(), czero(), Complex::new(-0.5, 0.0)]);
        assert!(DensityMatrix::<f64>::new(s, neg).is_err());
    }
}
