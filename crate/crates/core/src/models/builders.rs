use nalgebra::Complex;

use super::grid::{build_grid_packet, build_momentum_packet, momentum_function, momentum_operator, position_operator};
use super::ladder::build_fock_ops;
use super::params::{OscillatorParams, PacketParams, SpinFieldParams};
use super::scenario::{PredictedAmplitude, Scenario, ScenarioParts, SpreadingModel, APPARATUS, SYSTEM, TAG_DEGENERATE};
use super::spec::ScenarioSpec;
use crate::error::{Error, Result};
use crate::qcore::{eigensystem, sigma_dot, BasisKind, CompositeSpace, HermitianOperator, HilbertFactor, QuantumState};
use crate::scalar::Real;

fn spin_space() -> Result<CompositeSpace> {
    Ok(CompositeSpace::single(HilbertFactor::new(SYSTEM, 2, BasisKind::Spin)?))
}

fn spin_op<R: Real>(coef: f64, dir: [f64; 3], name: &str) -> Result<HermitianOperator<R>> {
    HermitianOperator::new(spin_space()?, sigma_dot::<R>(dir) * Complex::new(R::lit(coef), R::zero()), name)
}

/// `σ·d |+d⟩ = |+d⟩`.
fn spin_up_along<R: Real>(dir: [f64; 3]) -> Result<QuantumState<R>> {
    let op = spin_op::<R>(1.0, dir, "σ·d")?;
    let eig = eigensystem(&op)?;
    QuantumState::new(spin_space()?, eig.vector(1))
}

/// Spin in an unknown static field probed by a weak inhomogeneous field:
/// `H = −μB₀ σ·ñ − g(t) μB_i x σ·n` with `H_A = 0`.
///
/// The apparatus is a position grid, the pointer its momentum. Since
/// `[x, P] = i`, the momentum moves by `−⟨Q_S⟩ = μB_i n·ñ`.
pub fn build_aav_spin<R: Real>(p: &SpinFieldParams, packet: &PacketParams) -> Result<Scenario<R>> {
    p.validate()?;
    let grid = packet.grid();
    let app = CompositeSpace::single(HilbertFactor::grid(APPARATUS, BasisKind::GridPosition, grid)?);
    let system_initial = spin_up_along::<R>(p.n_tilde)?;
    Scenario::assemble(ScenarioParts {
        spec: ScenarioSpec::Aav { spin: *p, packet: *packet },
        h_apparatus: HermitianOperator::zero(app, "H_A"),
        h_system: spin_op(-p.mu * p.b0, p.n_tilde, "H_S")?,
        q_apparatus: position_operator(APPARATUS, BasisKind::GridPosition, grid)?,
        q_system: spin_op(-p.mu * p.b_i, p.n, "Q_S")?,
        apparatus_initial: build_grid_packet(packet, APPARATUS)?,
        predicted_final_system: Some(system_initial.clone()),
        system_initial,
        pointer: momentum_operator(APPARATUS, BasisKind::GridPosition, grid)?,
        pointer_response: -1.0,
        predicted_shift: Some(p.mu * p.b_i * p.alignment()),
        predicted_amplitudes: Vec::new(),
        spreading: None,
        tags: vec!["aav".into()],
    })
}

/// Spin coupled through a momentum-dependent field:
/// `H = P²/2M + μB₀ σ·ñ + g(t) μB_i P σ·n`.
///
/// The apparatus is a momentum grid so `H_A` and `Q_A = P` are both
/// diagonal; the pointer is the position, shifted by `+μB_i ⟨σ·n⟩₊`.
pub fn build_momentum_coupled<R: Real>(p: &SpinFieldParams, packet: &PacketParams, mass: f64) -> Result<Scenario<R>> {
    p.validate()?;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidParameter(format!("mass {mass} must be > 0")));
    }
    let grid = packet.grid();
    let system_initial = spin_up_along::<R>(p.n_tilde)?;
    let spreading = SpreadingModel { width: packet.width, mass };
    Scenario::assemble(ScenarioParts {
        spec: ScenarioSpec::MomentumCoupled { spin: *p, packet: *packet, mass },
        h_apparatus: momentum_function(APPARATUS, grid, |k| k * k / (2.0 * mass), "H_A")?,
        h_system: spin_op(p.mu * p.b0, p.n_tilde, "H_S")?,
        q_apparatus: momentum_operator(APPARATUS, BasisKind::GridMomentum, grid)?,
        q_system: spin_op(p.mu * p.b_i, p.n, "Q_S")?,
        apparatus_initial: build_momentum_packet(packet, APPARATUS)?,
        predicted_final_system: Some(system_initial.clone()),
        system_initial,
        pointer: position_operator(APPARATUS, BasisKind::GridMomentum, grid)?,
        pointer_response: 1.0,
        predicted_shift: Some(p.mu * p.b_i * p.alignment()),
        predicted_amplitudes: Vec::new(),
        spreading: Some(spreading),
        tags: vec![
            "momentum-coupled".into(),
            format!("spreading:width={},mass={}", packet.width, mass),
        ],
    })
}

/// Two oscillators of equal frequency coupled through `g(t) X x`.
///
/// `|1,0⟩` and `|0,1⟩` are degenerate and the coupling mixes them, so the
/// final state keeps amplitudes `cos λ` and `sin λ` with
/// `λ = ⟨0|X|1⟩⟨1|x|0⟩ = 1/(2ω√(Mm))` regardless of `T`.
pub fn build_degenerate_oscillators<R: Real>(
    apparatus: &OscillatorParams,
    system: &OscillatorParams,
    excitation: usize,
) -> Result<Scenario<R>> {
    apparatus.validate()?;
    system.validate()?;
    if (apparatus.frequency - system.frequency).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "frequencies {} and {} differ; the degeneracy needs them equal",
            apparatus.frequency, system.frequency
        )));
    }
    if apparatus.fock_dim < excitation + 2 || system.fock_dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "fock_dim {} too small for excitation {excitation}",
            apparatus.fock_dim
        )));
    }
    let a = build_fock_ops::<R>(apparatus, APPARATUS)?;
    let s = build_fock_ops::<R>(system, SYSTEM)?;
    let lambda = a.position.matrix()[(0, 1)].re.as_f64() * s.position.matrix()[(1, 0)].re.as_f64();
    let predicted_amplitudes = if excitation == 1 {
        vec![
            PredictedAmplitude { apparatus_level: 1, system_level: 0, magnitude: lambda.cos() },
            PredictedAmplitude { apparatus_level: 0, system_level: 1, magnitude: lambda.sin().abs() },
        ]
    } else {
        Vec::new()
    };
    Scenario::assemble(ScenarioParts {
        spec: ScenarioSpec::DegenerateOsc { apparatus: *apparatus, system: *system, excitation },
        apparatus_initial: QuantumState::basis(a.hamiltonian.space().clone(), excitation)?,
        system_initial: QuantumState::basis(s.hamiltonian.space().clone(), 0)?,
        h_apparatus: a.hamiltonian,
        h_system: s.hamiltonian,
        q_apparatus: a.position,
        q_system: s.position,
        pointer: a.momentum,
        pointer_response: -1.0,
        predicted_shift: None,
        predicted_final_system: None,
        predicted_amplitudes,
        spreading: None,
        tags: vec![TAG_DEGENERATE.into(), format!("lambda={lambda}")],
    })
}

/// Oscillator apparatus coupled to a spin by `g X σ·n` with `μB₀ = ω/2`,
/// which makes `|0⟩|+⟩` and `|1⟩|−⟩` degenerate.
pub fn build_degenerate_spin_oscillator<R: Real>(
    oscillator: &OscillatorParams,
    mu_b0: f64,
    n: [f64; 3],
) -> Result<Scenario<R>> {
    oscillator.validate()?;
    if (mu_b0 - 0.5 * oscillator.frequency).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "μB₀ = {mu_b0} breaks the degeneracy condition μB₀ = ω/2 = {}",
            0.5 * oscillator.frequency
        )));
    }
    let norm = n.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("direction n has norm {norm}")));
    }
    let a = build_fock_ops::<R>(oscillator, APPARATUS)?;
    Scenario::assemble(ScenarioParts {
        spec: ScenarioSpec::DegenerateSpinOsc { oscillator: *oscillator, mu_b0, n },
        apparatus_initial: QuantumState::basis(a.hamiltonian.space().clone(), 0)?,
        system_initial: QuantumState::basis(spin_space()?, 0)?,
        h_apparatus: a.hamiltonian,
        h_system: spin_op(mu_b0, [0.0, 0.0, 1.0], "H_S")?,
        q_apparatus: a.position,
        q_system: spin_op(1.0, n, "Q_S")?,
        pointer: a.momentum,
        pointer_response: -1.0,
        predicted_shift: None,
        predicted_final_system: None,
        predicted_amplitudes: Vec::new(),
        spreading: None,
        tags: vec![TAG_DEGENERATE.into()],
    })
}
