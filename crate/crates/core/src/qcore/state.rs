use nalgebra::{Complex, DVector};

use super::space::CompositeSpace;
use crate::error::{Error, Result};
use crate::scalar::{czero, Real};

/// Normalized amplitude vector over a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<R: Real> {
    space: CompositeSpace,
    amplitudes: DVector<Complex<R>>,
}

impl<R: Real> QuantumState<R> {
    /// Wraps `amplitudes` after normalizing them.
    pub fn new(space: CompositeSpace, amplitudes: DVector<Complex<R>>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm > R::zero()) {
            return Err(Error::InvalidParameter("state has zero norm".into()));
        }
        Ok(Self { space, amplitudes: amplitudes.unscale(norm) })
    }

    /// Wraps amplitudes that are already normalized (unitary images).
    pub(crate) fn from_raw(space: CompositeSpace, amplitudes: DVector<Complex<R>>) -> Self {
        debug_assert_eq!(amplitudes.len(), space.total_dim());
        Self { space, amplitudes }
    }

    pub fn basis(space: CompositeSpace, index: usize) -> Result<Self> {
        let n = space.total_dim();
        if index >= n {
            return Err(Error::DimensionMismatch { expected: n, found: index });
        }
        let mut v = DVector::from_element(n, czero());
        v[index] = Complex::new(R::one(), R::zero());
        Ok(Self { space, amplitudes: v })
    }

    pub fn from_parts(space: CompositeSpace, parts: &[(f64, f64)]) -> Result<Self> {
        let v = DVector::from_iterator(parts.len(), parts.iter().map(|&(re, im)| R::cplx(re, im)));
        Self::new(space, v)
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex<R>> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex<R>> {
        self.amplitudes
    }

    pub fn norm(&self) -> R {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &Self) -> Result<Complex<R>> {
        self.check_space(other.space())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> Result<R> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Tensor product `self ⊗ other` on the concatenated factor list.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut factors = self.space.factors().to_vec();
        factors.extend_from_slice(other.space.factors());
        let space = CompositeSpace::new(factors)?;
        let a = &self.amplitudes;
        let b = &other.amplitudes;
        let v = DVector::from_iterator(
            a.len() * b.len(),
            a.iter().flat_map(|x| b.iter().map(move |y| *x * *y)),
        );
        Ok(Self { space, amplitudes: v })
    }

    pub(crate) fn check_space(&self, space: &CompositeSpace) -> Result<()> {
        if &self.space != space {
            return Err(Error::DimensionMismatch {
                expected: self.space.total_dim(),
                found: space.total_dim(),
            });
        }
        Ok(())
    }
}
