//! Simulation of protective quantum measurements: an apparatus pointer weakly
//! and adiabatically coupled to a system in an energy eigenstate.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the studies use.

pub mod error;
pub mod evolve;
pub mod models;
pub mod protect;
pub mod qcore;
pub mod qnd;
pub mod scalar;
pub mod stats;
pub mod tolerance;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;
pub use tolerance::ToleranceConfig;

pub type State = qcore::QuantumState<f64>;
pub type Operator = qcore::HermitianOperator<f64>;
pub type Density = qcore::DensityMatrix<f64>;
pub type ScenarioF64 = models::Scenario<f64>;
pub type TrajectoryF64 = evolve::Trajectory<f64>;
