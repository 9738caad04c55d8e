use nalgebra::{Complex, DMatrix};

use super::params::OscillatorParams;
use crate::error::{Error, Result};
use crate::qcore::{BasisKind, CompositeSpace, HermitianOperator, HilbertFactor};
use crate::scalar::{creal, czero, Real};

/// Hamiltonian, position and momentum of a truncated oscillator:
/// `X = √(1/2Mω)(a + a†)`, `P = i√(Mω/2)(a† − a)`, `H = ω(n̂ + ½)`.
pub struct FockOperators<R: Real> {
    pub hamiltonian: HermitianOperator<R>,
    pub position: HermitianOperator<R>,
    pub momentum: HermitianOperator<R>,
}

pub fn build_fock_ops<R: Real>(p: &OscillatorParams, label: &str) -> Result<FockOperators<R>> {
    p.validate()?;
    if p.frequency == 0.0 {
        return Err(Error::InvalidParameter("Fock basis needs a nonzero frequency".into()));
    }
    let d = p.fock_dim;
    let space = CompositeSpace::single(HilbertFactor::new(label, d, BasisKind::Fock)?);
    let mw = p.mass * p.frequency;
    let xs = (1.0 / (2.0 * mw)).sqrt();
    let ps = (mw / 2.0).sqrt();
    let mut x = DMatrix::from_element(d, d, czero::<R>());
    let mut mom = DMatrix::from_element(d, d, czero::<R>());
    for n in 1..d {
        // a[n-1, n] = √n
        let s = (n as f64).sqrt();
        x[(n - 1, n)] = creal(R::lit(xs * s));
        x[(n, n - 1)] = creal(R::lit(xs * s));
        // i(a† − a): row n, col n-1 gets +i√n; row n-1, col n gets −i√n
        mom[(n, n - 1)] = Complex::new(R::zero(), R::lit(ps * s));
        mom[(n - 1, n)] = Complex::new(R::zero(), R::lit(-ps * s));
    }
    let energies: Vec<f64> = (0..d).map(|n| p.frequency * (n as f64 + 0.5)).collect();
    Ok(FockOperators {
        hamiltonian: HermitianOperator::from_real_diagonal(space.clone(), &energies, format!("H_{label}"))?,
        position: HermitianOperator::new(space.clone(), x, format!("X_{label}"))?,
        momentum: HermitianOperator::new(space, mom, format!("P_{label}"))?,
    })
}
