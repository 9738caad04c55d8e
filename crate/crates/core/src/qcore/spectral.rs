//! Eigendecompositions and the exponentials built from them.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use super::operator::{hermiticity_defect, HermitianOperator};
use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::scalar::{czero, Real};

const MAX_SWEEPS: usize = 10_000;

/// Ascending eigenvalues with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigensystem<R: Real> {
    pub values: Vec<R>,
    pub vectors: DMatrix<Complex<R>>,
}

impl<R: Real> Eigensystem<R> {
    pub fn of_matrix(m: &DMatrix<Complex<R>>) -> Result<Self> {
        let n = m.nrows();
        if n == 1 {
            return Ok(Self { values: vec![m[(0, 0)].re], vectors: DMatrix::identity(1, 1) });
        }
        let eig = SymmetricEigen::try_new(m.clone(), R::default_epsilon(), MAX_SWEEPS).ok_or_else(|| {
            Error::Eigen(format!(
                "no convergence for {n}×{n} matrix (norm {:.3e}, hermiticity defect {:.3e})",
                m.norm().as_f64(),
                hermiticity_defect(m)
            ))
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self { values, vectors })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> DVector<Complex<R>> {
        self.vectors.column(k).into_owned()
    }

    /// `Σ λ_k v_k v_k†`.
    pub fn reconstruct(&self) -> DMatrix<Complex<R>> {
        let v = &self.vectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.values[j]);
        scaled * v.adjoint()
    }

    /// `exp(-i λ t)` applied in the eigenbasis: `V e^{-iΛt} V† ψ`.
    pub fn evolve(&self, t: R, amps: &DVector<Complex<R>>) -> DVector<Complex<R>> {
        let mut c = self.vectors.ad_mul(amps);
        for (ck, &lam) in c.iter_mut().zip(&self.values) {
            let phase = -(lam * t);
            *ck *= Complex::new(phase.cos(), phase.sin());
        }
        &self.vectors * c
    }
}

pub fn eigensystem<R: Real>(h: &HermitianOperator<R>) -> Result<Eigensystem<R>> {
    Eigensystem::of_matrix(h.matrix())
}

/// `exp(-i H t) ψ` through the eigendecomposition of `H` (ħ = 1).
pub fn matrix_exponential_apply<R: Real>(
    h: &HermitianOperator<R>,
    t: f64,
    psi: &QuantumState<R>,
) -> Result<QuantumState<R>> {
    psi.check_space(h.space())?;
    let eig = eigensystem(h)?;
    Ok(QuantumState::from_raw(psi.space().clone(), eig.evolve(R::lit(t), psi.amplitudes())))
}

/// Partition of basis indices into sets that no operator in a family connects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    blocks: Vec<Vec<usize>>,
    dim: usize,
}

impl BlockStructure {
    /// Connected components of the union of the nonzero patterns.
    pub fn detect<R: Real>(matrices: &[&DMatrix<Complex<R>>]) -> Self {
        let n = matrices.first().map_or(0, |m| m.nrows());
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for m in matrices {
            for j in 0..n {
                for i in (j + 1)..n {
                    if m[(i, j)] != czero() || m[(j, i)] != czero() {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = find(&mut parent, i);
            by_root[r].push(i);
        }
        let blocks = by_root.into_iter().filter(|b| !b.is_empty()).collect();
        Self { blocks, dim: n }
    }

    pub fn trivial(dim: usize) -> Self {
        Self { blocks: vec![(0..dim).collect()], dim }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn largest(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Spectrum of a Hermitian matrix that is block diagonal under a known
/// [`BlockStructure`]; each block is diagonalized on its own.
#[derive(Debug, Clone)]
pub struct BlockSpectrum<R: Real> {
    blocks: Vec<(Vec<usize>, Eigensystem<R>)>,
}

impl<R: Real> BlockSpectrum<R> {
    pub fn new(h: &DMatrix<Complex<R>>, structure: &BlockStructure) -> Result<Self> {
        let blocks = structure
            .blocks()
            .iter()
            .map(|idx| {
                let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])]);
                Eigensystem::of_matrix(&sub).map(|e| (idx.clone(), e))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks })
    }

    /// In-place `ψ ← exp(-i H t) ψ`.
    pub fn evolve_in_place(&self, t: R, amps: &mut DVector<Complex<R>>) {
        for (idx, eig) in &self.blocks {
            let local = DVector::from_iterator(idx.len(), idx.iter().map(|&i| amps[i]));
            let out = eig.evolve(t, &local);
            for (&i, z) in idx.iter().zip(out.iter()) {
                amps[i] = *z;
            }
        }
    }

    pub fn values(&self) -> Vec<R> {
        self.blocks.iter().flat_map(|(_, e)| e.values.iter().copied()).collect()
    }
}
