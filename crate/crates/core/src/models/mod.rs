//! Scenario construction for every apparatus-system setup studied.

mod builders;
mod grid;
mod ladder;
mod params;
mod perturbative;
mod scenario;
mod spec;

pub use builders::{build_aav_spin, build_degenerate_oscillators, build_degenerate_spin_oscillator, build_momentum_coupled};
pub use grid::{
    build_grid_packet, build_grid_packet_with, build_momentum_packet, fourier_kernel, momentum_function,
    momentum_operator, position_operator,
};
pub use ladder::{build_fock_ops, FockOperators};
pub use params::{OscillatorParams, PacketParams, SpinFieldParams, DEFAULT_FOCK_DIM};
pub use perturbative::{perturbative_prediction, perturbative_prediction_with, PerturbativePrediction};
pub use scenario::{
    eigen_residual, PredictedAmplitude, Scenario, SpreadingModel, APPARATUS, SYSTEM, TAG_DEGENERATE, TAG_NON_EIGENSTATE,
};
pub use spec::{ComplexMatrix, CustomScenario, ScenarioDocument, ScenarioSpec, SCHEMA_VERSION};

/// Default parameter sets used by the command-line front end and the studies.
pub mod defaults {
    use super::*;

    /// Box length `160π` makes the momentum spacing `1/80`, so the default
    /// shift `μB_i cos θ = 0.05` is exactly four grid cells.
    pub fn aav_packet() -> PacketParams {
        PacketParams { width: 40.0, center: 0.0, momentum: 0.0, extent: 160.0 * std::f64::consts::PI, points: 256 }
    }

    pub fn aav_spin() -> SpinFieldParams {
        SpinFieldParams::in_plane(1.0, 1.0, 0.1, std::f64::consts::FRAC_PI_3)
    }

    pub fn aav() -> ScenarioSpec {
        ScenarioSpec::Aav { spin: aav_spin(), packet: aav_packet() }
    }

    pub fn momentum_packet() -> PacketParams {
        PacketParams { width: 1.0, center: 0.0, momentum: 0.0, extent: 40.0, points: 256 }
    }

    pub fn momentum_spin() -> SpinFieldParams {
        SpinFieldParams::in_plane(1.0, 5.0, 1e-3, std::f64::consts::FRAC_PI_3)
    }

    pub fn momentum_coupled() -> ScenarioSpec {
        ScenarioSpec::MomentumCoupled { spin: momentum_spin(), packet: momentum_packet(), mass: 1.0 }
    }

    pub fn degenerate_osc() -> ScenarioSpec {
        let p = OscillatorParams::new(1.0, 1.0);
        ScenarioSpec::DegenerateOsc { apparatus: p, system: p, excitation: 1 }
    }

    pub fn degenerate_spin_osc() -> ScenarioSpec {
        ScenarioSpec::DegenerateSpinOsc { oscillator: OscillatorParams::new(1.0, 1.0), mu_b0: 0.5, n: [1.0, 0.0, 0.0] }
    }
}
