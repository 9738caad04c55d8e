use nalgebra::{Complex, ComplexField, DMatrix};

use super::space::CompositeSpace;
use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::scalar::{cone, creal, czero, Real};

/// Largest elementwise deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect<R: Real>(m: &DMatrix<Complex<R>>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus().as_f64();
            worst = worst.max(d);
        }
    }
    worst
}

/// Dense Hermitian matrix on a composite (or single-factor) space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<R: Real> {
    space: CompositeSpace,
    matrix: DMatrix<Complex<R>>,
    name: String,
}

impl<R: Real> HermitianOperator<R> {
    pub fn new(space: CompositeSpace, matrix: DMatrix<Complex<R>>, name: impl Into<String>) -> Result<Self> {
        Self::with_tolerance(space, matrix, name, 1e-12)
    }

    pub fn with_tolerance(
        space: CompositeSpace,
        matrix: DMatrix<Complex<R>>,
        name: impl Into<String>,
        tol: f64,
    ) -> Result<Self> {
        let name = name.into();
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        let scale = matrix.iter().map(|z| z.modulus().as_f64()).fold(1.0, f64::max);
        let deviation = hermiticity_defect(&matrix);
        if deviation > tol.max(32.0 * R::precision()) * scale {
            return Err(Error::NotHermitian { name, deviation });
        }
        Ok(Self { space, matrix, name })
    }

    pub fn from_real_diagonal(space: CompositeSpace, diag: &[f64], name: impl Into<String>) -> Result<Self> {
        let n = space.total_dim();
        if diag.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: diag.len() });
        }
        let mut m = DMatrix::from_element(n, n, czero());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = creal(R::lit(d));
        }
        Ok(Self { space, matrix: m, name: name.into() })
    }

    pub fn identity(space: CompositeSpace) -> Self {
        let n = space.total_dim();
        Self { space, matrix: DMatrix::identity(n, n), name: "I".into() }
    }

    pub fn zero(space: CompositeSpace, name: impl Into<String>) -> Self {
        let n = space.total_dim();
        Self { space, matrix: DMatrix::from_element(n, n, czero()), name: name.into() }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex<R>> {
        &self.matrix
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm().as_f64()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(&other.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
            name: format!("{} + {}", self.name, other.name),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.map(|z| z * R::lit(factor)),
            name: format!("{factor}·{}", self.name),
        }
    }

    /// `self ⊗ other` for operators on disjoint factor lists.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut factors = self.space.factors().to_vec();
        factors.extend_from_slice(other.space.factors());
        let space = CompositeSpace::new(factors)?;
        Ok(Self {
            space,
            matrix: self.matrix.kronecker(&other.matrix),
            name: format!("{}⊗{}", self.name, other.name),
        })
    }

    /// Lifts a single-factor operator into `space` as `I ⊗ … ⊗ op ⊗ … ⊗ I`.
    pub fn embed(&self, space: &CompositeSpace) -> Result<Self> {
        let [factor] = self.space.factors() else {
            return Err(Error::InvalidParameter(format!(
                "operator `{}` acts on {} factors; embed needs exactly one",
                self.name,
                self.space.factors().len()
            )));
        };
        let pos = space.position(factor.label())?;
        let target = &space.factors()[pos];
        if target.dim() != factor.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), found: factor.dim() });
        }
        let (outer, _, inner) = space.split_at(pos);
        let left: DMatrix<Complex<R>> = DMatrix::identity(outer, outer);
        let right: DMatrix<Complex<R>> = DMatrix::identity(inner, inner);
        let matrix = left.kronecker(&self.matrix).kronecker(&right);
        Ok(Self { space: space.clone(), matrix, name: self.name.clone() })
    }

    pub fn apply(&self, psi: &QuantumState<R>) -> Result<QuantumState<R>> {
        psi.check_space(&self.space)?;
        Ok(QuantumState::from_raw(self.space.clone(), &self.matrix * psi.amplitudes()))
    }

    /// `⟨ψ|op|ψ⟩`; an imaginary residue above `1e-10` signals a non-Hermitian input.
    pub fn expectation(&self, psi: &QuantumState<R>) -> Result<f64> {
        self.expectation_with(psi, 1e-10)
    }

    pub fn expectation_with(&self, psi: &QuantumState<R>, imag_tol: f64) -> Result<f64> {
        psi.check_space(&self.space)?;
        let v = psi.amplitudes();
        let z = v.dotc(&(&self.matrix * v));
        let scale = self.norm().max(1.0);
        if z.im.as_f64().abs() > imag_tol * scale {
            return Err(Error::ImaginaryExpectation(z.im.as_f64()));
        }
        Ok(z.re.as_f64())
    }

    /// `⟨a|op|b⟩`.
    pub fn matrix_element(&self, a: &QuantumState<R>, b: &QuantumState<R>) -> Result<Complex<R>> {
        a.check_space(&self.space)?;
        b.check_space(&self.space)?;
        Ok(a.amplitudes().dotc(&(&self.matrix * b.amplitudes())))
    }

    /// `i[A, B]` is Hermitian for Hermitian A and B.
    pub fn commutator_defect(&self, other: &Self) -> Result<f64> {
        self.check_space(&other.space)?;
        let c = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(c.iter().map(|z| z.modulus().as_f64()).fold(0.0, f64::max))
    }

    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(
        space: CompositeSpace,
        matrix: DMatrix<Complex<R>>,
        name: impl Into<String>,
    ) -> Self {
        Self { space, matrix, name: name.into() }
    }

    fn check_space(&self, other: &CompositeSpace) -> Result<()> {
        if &self.space != other {
            return Err(Error::DimensionMismatch {
                expected: self.space.total_dim(),
                found: other.total_dim(),
            });
        }
        Ok(())
    }
}

/// Pauli matrices `(σx, σy, σz)` as raw 2×2 matrices.
pub fn pauli<R: Real>() -> [DMatrix<Complex<R>>; 3] {
    let o = czero::<R>();
    let l = cone::<R>();
    let i = Complex::new(R::zero(), R::one());
    [
        DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

/// `σ·n` for a real 3-vector `n`.
pub fn sigma_dot<R: Real>(n: [f64; 3]) -> DMatrix<Complex<R>> {
    let [sx, sy, sz] = pauli::<R>();
    sx * creal(R::lit(n[0])) + sy * creal(R::lit(n[1])) + sz * creal(R::lit(n[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::space::{BasisKind, HilbertFactor};

    fn spin(label: &str) -> CompositeSpace {
        CompositeSpace::single(HilbertFactor::new(label, 2, BasisKind::Spin).unwrap())
    }

    #[test]
    fn embed_sigma_z_first_factor() {
        let comp = CompositeSpace::new(vec![
            HilbertFactor::new("a", 2, BasisKind::Spin).unwrap(),
            HilbertFactor::new("b", 2, BasisKind::Spin).unwrap(),
        ])
        .unwrap();
        let sz = HermitianOperator::<f64>::new(spin("a"), pauli()[2].clone(), "sz").unwrap();
        let e = sz.embed(&comp).unwrap();
        let d: Vec<f64> = (0..4).map(|i| e.matrix()[(i, i)].re).collect();
        assert_eq!(d, vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(e.matrix()[(0, 1)].norm(), 0.0);
    }

    #[test]
    fn embed_number_operator_before_spin() {
        let comp = CompositeSpace::new(vec![
            HilbertFactor::new("osc", 3, BasisKind::Fock).unwrap(),
            HilbertFactor::new("spin", 2, BasisKind::Spin).unwrap(),
        ])
        .unwrap();
        let osc = comp.subspace("osc").unwrap();
        let n = HermitianOperator::<f64>::from_real_diagonal(osc, &[0.0, 1.0, 2.0], "n").unwrap();
        let e = n.embed(&comp).unwrap();
        let d: Vec<f64> = (0..6).map(|i| e.matrix()[(i, i)].re).collect();
        assert_eq!(d, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn embed_identity_is_identity() {
        let comp = CompositeSpace::new(vec![
            HilbertFactor::new("osc", 3, BasisKind::Fock).unwrap(),
            HilbertFactor::new("spin", 2, BasisKind::Spin).unwrap(),
        ])
        .unwrap();
        let id = HermitianOperator::<f64>::identity(comp.subspace("spin").unwrap());
        assert_eq!(id.embed(&comp).unwrap().matrix(), &DMatrix::identity(6, 6));
    }

    #[test]
    fn embed_errors() {
        let comp = CompositeSpace::new(vec![HilbertFactor::new("a", 3, BasisKind::Fock).unwrap()]).unwrap();
        let sz = HermitianOperator::<f64>::new(spin("zz"), pauli()[2].clone(), "sz").unwrap();
        assert!(matches!(sz.embed(&comp), Err(Error::UnknownFactor(_))));
        let sa = HermitianOperator::<f64>::new(spin("a"), pauli()[2].clone(), "sz").unwrap();
        assert!(matches!(sa.embed(&comp), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn spin_expectations() {
        let s = spin("s");
        let up = QuantumState::<f64>::basis(s.clone(), 0).unwrap();
        let [sx, _, sz] = pauli::<f64>();
        let sz = HermitianOperator::new(s.clone(), sz, "sz").unwrap();
        let sx = HermitianOperator::new(s, sx, "sx").unwrap();
        assert_eq!(sz.expectation(&up).unwrap(), 1.0);
        assert_eq!(sx.expectation(&up).unwrap(), 0.0);
    }

    #[test]
    fn number_expectation_in_superposition() {
        let s = CompositeSpace::single(HilbertFactor::new("osc", 3, BasisKind::Fock).unwrap());
        let n = HermitianOperator::<f64>::from_real_diagonal(s.clone(), &[0.0, 1.0, 2.0], "n").unwrap();
        let psi = QuantumState::from_parts(s, &[(1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!((n.expectation(&psi).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[czero(), cone(), czero(), czero()]);
        assert!(matches!(
            HermitianOperator::<f64>::new(spin("s"), m.clone(), "bad"),
            Err(Error::NotHermitian { .. })
        ));
        // smuggled past the constructor, it is caught at expectation time
        let op = HermitianOperator::<f64>::from_matrix_unchecked(spin("s"), m * Complex::new(0.0, 1.0), "bad");
        let plus = QuantumState::from_parts(spin("s"), &[(1.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(op.expectation(&plus), Err(Error::ImaginaryExpectation(_))));
    }
}
