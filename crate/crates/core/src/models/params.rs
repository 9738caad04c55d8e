use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Harmonic oscillator in a truncated Fock basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub mass: f64,
    pub frequency: f64,
    #[serde(default = "default_fock_dim")]
    pub fock_dim: usize,
}

pub const DEFAULT_FOCK_DIM: usize = 24;

fn default_fock_dim() -> usize {
    DEFAULT_FOCK_DIM
}

impl OscillatorParams {
    pub fn new(mass: f64, frequency: f64) -> Self {
        Self { mass, frequency, fock_dim: DEFAULT_FOCK_DIM }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::InvalidParameter(format!("oscillator mass {} must be > 0", self.mass)));
        }
        if !(self.frequency >= 0.0) || !self.frequency.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "oscillator frequency {} must be ≥ 0",
                self.frequency
            )));
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidParameter("fock_dim must be ≥ 2".into()));
        }
        Ok(())
    }
}

/// Magnetic-moment parameters for the spin scenarios.
///
/// `b0`/`n_tilde` is the static field defining the system Hamiltonian,
/// `b_i`/`n` the coupling field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinFieldParams {
    pub mu: f64,
    pub b0: f64,
    pub n_tilde: [f64; 3],
    pub b_i: f64,
    pub n: [f64; 3],
}

impl SpinFieldParams {
    /// Static field along z, coupling field tilted by `theta` toward x.
    pub fn in_plane(mu: f64, b0: f64, b_i: f64, theta: f64) -> Self {
        Self { mu, b0, n_tilde: [0.0, 0.0, 1.0], b_i, n: [theta.sin(), 0.0, theta.cos()] }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n_tilde", self.n_tilde), ("n", self.n)] {
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("direction {name} has norm {norm}, expected 1")));
            }
        }
        for (name, v) in [("mu", self.mu), ("b0", self.b0), ("b_i", self.b_i)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    pub fn alignment(&self) -> f64 {
        dot(self.n, self.n_tilde)
    }
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Gaussian packet `exp(-(x-x₀)²/2ε²)·e^{ip₀x}` sampled on a periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketParams {
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub momentum: f64,
    pub extent: f64,
    pub points: usize,
}

impl PacketParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(Error::InvalidParameter(format!("packet width {} must be > 0", self.width)));
        }
        if !(self.extent >= 10.0 * self.width) {
            return Err(Error::InvalidParameter(format!(
                "grid extent {} must be at least 10× the packet width {}",
                self.extent, self.width
            )));
        }
        if self.points < 2 || !self.points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid points {} must be a power of two ≥ 2",
                self.points
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> crate::qcore::GridSpec {
        crate::qcore::GridSpec { extent: self.extent, points: self.points }
    }
}
