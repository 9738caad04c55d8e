//! Periodic position/momentum grids and the discrete Fourier kernel joining them.

use nalgebra::{Complex, DMatrix, DVector};

use super::params::PacketParams;
use crate::error::{Error, Result};
use crate::qcore::{BasisKind, CompositeSpace, GridSpec, HermitianOperator, HilbertFactor, QuantumState};
use crate::scalar::{creal, Real};

/// Unitary `F[m, j] = exp(-i k_m x_j)/√n` taking position amplitudes to momentum amplitudes.
pub fn fourier_kernel<R: Real>(grid: &GridSpec) -> DMatrix<Complex<R>> {
    let xs = grid.positions();
    let ks = grid.momenta();
    let norm = 1.0 / (grid.points as f64).sqrt();
    DMatrix::from_fn(grid.points, grid.points, |m, j| {
        let phase = -ks[m] * xs[j];
        R::cplx(norm * phase.cos(), norm * phase.sin())
    })
}

fn diag<R: Real>(values: &[f64]) -> DMatrix<Complex<R>> {
    DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| creal(R::lit(v)))))
}

fn factor_space(label: &str, kind: BasisKind, grid: GridSpec) -> Result<CompositeSpace> {
    Ok(CompositeSpace::single(HilbertFactor::grid(label, kind, grid)?))
}

/// Position operator on a grid factor of either basis kind.
pub fn position_operator<R: Real>(label: &str, kind: BasisKind, grid: GridSpec) -> Result<HermitianOperator<R>> {
    let space = factor_space(label, kind, grid)?;
    let x = diag::<R>(&grid.positions());
    let m = match kind {
        BasisKind::GridPosition => x,
        _ => {
            let f = fourier_kernel::<R>(&grid);
            &f * x * f.adjoint()
        }
    };
    HermitianOperator::with_tolerance(space, m, format!("X_{label}"), 1e-10)
}

/// Momentum operator on a grid factor of either basis kind.
pub fn momentum_operator<R: Real>(label: &str, kind: BasisKind, grid: GridSpec) -> Result<HermitianOperator<R>> {
    let space = factor_space(label, kind, grid)?;
    let k = diag::<R>(&grid.momenta());
    let m = match kind {
        BasisKind::GridMomentum => k,
        _ => {
            let f = fourier_kernel::<R>(&grid);
            f.adjoint() * k * &f
        }
    };
    HermitianOperator::with_tolerance(space, m, format!("P_{label}"), 1e-10)
}

/// Function of momentum `f(k)` as an operator on a momentum-basis grid.
pub fn momentum_function<R: Real>(label: &str, grid: GridSpec, f: impl Fn(f64) -> f64, name: &str) -> Result<HermitianOperator<R>> {
    let space = factor_space(label, BasisKind::GridMomentum, grid)?;
    let vals: Vec<f64> = grid.momenta().into_iter().map(f).collect();
    HermitianOperator::from_real_diagonal(space, &vals, name)
}

/// Normalized Gaussian packet in the position basis.
pub fn build_grid_packet<R: Real>(p: &PacketParams, label: &str) -> Result<QuantumState<R>> {
    build_grid_packet_with(p, label, 1e-8)
}

pub fn build_grid_packet_with<R: Real>(p: &PacketParams, label: &str, leakage_tol: f64) -> Result<QuantumState<R>> {
    p.validate()?;
    let grid = p.grid();
    let raw: Vec<Complex<f64>> = grid
        .positions()
        .into_iter()
        .map(|x| {
            let env = (-(x - p.center).powi(2) / (2.0 * p.width * p.width)).exp();
            Complex::from_polar(env, p.momentum * x)
        })
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let edge = raw[0].norm().max(raw[raw.len() - 1].norm()) / norm;
    if edge > leakage_tol {
        return Err(Error::PacketLeakage(edge));
    }
    let amps = DVector::from_iterator(raw.len(), raw.iter().map(|z| R::cplx(z.re / norm, z.im / norm)));
    QuantumState::new(factor_space(label, BasisKind::GridPosition, grid)?, amps)
}

/// Same packet expressed in the momentum basis.
pub fn build_momentum_packet<R: Real>(p: &PacketParams, label: &str) -> Result<QuantumState<R>> {
    let pos = build_grid_packet::<R>(p, label)?;
    let f = fourier_kernel::<R>(&p.grid());
    QuantumState::new(
        factor_space(label, BasisKind::GridMomentum, p.grid())?,
        &f * pos.amplitudes(),
    )
}
