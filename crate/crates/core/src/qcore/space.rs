use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Fock,
    GridPosition,
    GridMomentum,
    Spin,
}

impl BasisKind {
    pub fn is_grid(self) -> bool {
        matches!(self, BasisKind::GridPosition | BasisKind::GridMomentum)
    }
}

/// Periodic box of length `extent` sampled at `points` sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub extent: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    /// Position samples `x_j = -L/2 + j·dx`.
    pub fn positions(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.points)
            .map(|j| -0.5 * self.extent + j as f64 * dx)
            .collect()
    }

    /// Ascending wavenumbers `k_m = (m - n/2)·2π/L`.
    pub fn momenta(&self) -> Vec<f64> {
        let dk = 2.0 * std::f64::consts::PI / self.extent;
        let half = (self.points / 2) as f64;
        (0..self.points).map(|m| (m as f64 - half) * dk).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HilbertFactor {
    label: String,
    dim: usize,
    basis_kind: BasisKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
}

impl HilbertFactor {
    pub fn new(label: impl Into<String>, dim: usize, basis_kind: BasisKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("factor dimension must be ≥ 1".into()));
        }
        if basis_kind.is_grid() {
            return Err(Error::InvalidParameter(
                "grid factors must be created with HilbertFactor::grid".into(),
            ));
        }
        Ok(Self { label: label.into(), dim, basis_kind, grid: None })
    }

    pub fn grid(label: impl Into<String>, basis_kind: BasisKind, grid: GridSpec) -> Result<Self> {
        if !basis_kind.is_grid() {
            return Err(Error::InvalidParameter(format!("{basis_kind:?} is not a grid basis")));
        }
        if grid.points == 0 || !(grid.extent > 0.0) {
            return Err(Error::InvalidParameter("grid needs points ≥ 1 and extent > 0".into()));
        }
        Ok(Self { label: label.into(), dim: grid.points, basis_kind, grid: Some(grid) })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_kind(&self) -> BasisKind {
        self.basis_kind
    }

    pub fn grid_spec(&self) -> Option<GridSpec> {
        self.grid
    }
}

/// Ordered tensor product of factors; by convention the apparatus comes
/// first and the system second. Composite index is row-major, first factor
/// most significant (matches the Kronecker product).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpace {
    factors: Vec<HilbertFactor>,
}

impl CompositeSpace {
    pub fn new(factors: Vec<HilbertFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("composite space needs at least one factor".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::InvalidParameter(format!("duplicate factor label `{}`", f.label)));
            }
        }
        let space = Self { factors };
        if space.total_dim() > super::MAX_TOTAL_DIM {
            return Err(Error::InvalidParameter(format!(
                "total dimension {} exceeds the dense limit {}",
                space.total_dim(),
                super::MAX_TOTAL_DIM
            )));
        }
        Ok(space)
    }

    pub fn single(factor: HilbertFactor) -> Self {
        Self { factors: vec![factor] }
    }

    pub fn factors(&self) -> &[HilbertFactor] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| Error::UnknownFactor(label.to_string()))
    }

    pub fn factor(&self, label: &str) -> Result<&HilbertFactor> {
        Ok(&self.factors[self.position(label)?])
    }

    /// Space containing only the factor `label`.
    pub fn subspace(&self, label: &str) -> Result<CompositeSpace> {
        Ok(CompositeSpace::single(self.factor(label)?.clone()))
    }

    /// `(outer, dim, inner)` strides around factor `pos`.
    pub(crate) fn split_at(&self, pos: usize) -> (usize, usize, usize) {
        let outer = self.factors[..pos].iter().map(|f| f.dim).product();
        let inner = self.factors[pos + 1..].iter().map(|f| f.dim).product();
        (outer, self.factors[pos].dim, inner)
    }

    /// Per-factor digits of a composite index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % f.dim;
            index /= f.dim;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&d, f)| acc * f.dim + d)
    }
}
