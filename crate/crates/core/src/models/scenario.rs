use nalgebra::{Complex, DMatrix};

use super::spec::ScenarioSpec;
use crate::error::{Error, Result};
use crate::qcore::{CompositeSpace, HermitianOperator, QuantumState};
use crate::scalar::Real;

pub const APPARATUS: &str = "apparatus";
pub const SYSTEM: &str = "system";

pub const TAG_DEGENERATE: &str = "degenerate";
pub const TAG_NON_EIGENSTATE: &str = "non-eigenstate-demo";

/// Amplitude magnitude expected on one composite basis state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedAmplitude {
    pub apparatus_level: usize,
    pub system_level: usize,
    pub magnitude: f64,
}

/// Free-packet spreading model: `ε(T)² = ½(ε² + T²/M²ε²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadingModel {
    pub width: f64,
    pub mass: f64,
}

impl SpreadingModel {
    pub fn predicted_variance(&self, t: f64) -> f64 {
        let e2 = self.width * self.width;
        0.5 * (e2 + t * t / (self.mass * self.mass * e2))
    }
}

/// One apparatus-system setup: `H = H_A + H_S + g(t) Q_A Q_S` plus the
/// product initial state and the pointer observable read out afterwards.
///
/// Operators `h_apparatus`, `q_apparatus` and `pointer` live on the
/// apparatus factor, `h_system` and `q_system` on the system factor.
/// `pointer_response` converts `⟨Q_S⟩` into the expected pointer shift:
/// with `[Q_A, pointer] = i` it is `-1`, with `[pointer, Q_A] = i` it is `+1`.
#[derive(Debug, Clone)]
pub struct Scenario<R: Real> {
    pub spec: ScenarioSpec,
    pub space: CompositeSpace,
    pub h_apparatus: HermitianOperator<R>,
    pub h_system: HermitianOperator<R>,
    pub q_apparatus: HermitianOperator<R>,
    pub q_system: HermitianOperator<R>,
    pub apparatus_initial: QuantumState<R>,
    pub system_initial: QuantumState<R>,
    pub initial: QuantumState<R>,
    pub pointer: HermitianOperator<R>,
    pub pointer_response: f64,
    pub predicted_shift: Option<f64>,
    pub predicted_final_system: Option<QuantumState<R>>,
    pub predicted_amplitudes: Vec<PredictedAmplitude>,
    pub spreading: Option<SpreadingModel>,
    pub tags: Vec<String>,
    h0: DMatrix<Complex<R>>,
    coupling: DMatrix<Complex<R>>,
}

/// Pieces a builder hands to [`Scenario::assemble`].
pub(crate) struct ScenarioParts<R: Real> {
    pub spec: ScenarioSpec,
    pub h_apparatus: HermitianOperator<R>,
    pub h_system: HermitianOperator<R>,
    pub q_apparatus: HermitianOperator<R>,
    pub q_system: HermitianOperator<R>,
    pub apparatus_initial: QuantumState<R>,
    pub system_initial: QuantumState<R>,
    pub pointer: HermitianOperator<R>,
    pub pointer_response: f64,
    pub predicted_shift: Option<f64>,
    pub predicted_final_system: Option<QuantumState<R>>,
    pub predicted_amplitudes: Vec<PredictedAmplitude>,
    pub spreading: Option<SpreadingModel>,
    pub tags: Vec<String>,
}

impl<R: Real> Scenario<R> {
    pub(crate) fn assemble(p: ScenarioParts<R>) -> Result<Self> {
        let app = single_factor(&p.h_apparatus)?;
        let sys = single_factor(&p.h_system)?;
        let checks = [
            (p.q_apparatus.space(), &app),
            (p.pointer.space(), &app),
            (p.apparatus_initial.space(), &app),
            (p.q_system.space(), &sys),
            (p.system_initial.space(), &sys),
        ];
        for (got, want) in checks {
            if got != want {
                return Err(Error::DimensionMismatch { expected: want.total_dim(), found: got.total_dim() });
            }
        }
        if app.factors()[0].label() != APPARATUS || sys.factors()[0].label() != SYSTEM {
            return Err(Error::InvalidParameter(format!(
                "factor labels must be `{APPARATUS}` and `{SYSTEM}`"
            )));
        }
        let initial = p.apparatus_initial.tensor(&p.system_initial)?;
        let space = initial.space().clone();
        let h0 = p.h_apparatus.embed(&space)?.matrix() + p.h_system.embed(&space)?.matrix();
        let coupling = p.q_apparatus.tensor(&p.q_system)?.matrix().clone();

        let exempt = p.tags.iter().any(|t| t == TAG_DEGENERATE || t == TAG_NON_EIGENSTATE);
        if !exempt {
            let residual = eigen_residual(&p.h_system, &p.system_initial)?;
            if residual > 1e-8 {
                return Err(Error::NotEigenstate(residual));
            }
        }

        Ok(Self {
            spec: p.spec,
            space,
            h_apparatus: p.h_apparatus,
            h_system: p.h_system,
            q_apparatus: p.q_apparatus,
            q_system: p.q_system,
            apparatus_initial: p.apparatus_initial,
            system_initial: p.system_initial,
            initial,
            pointer: p.pointer,
            pointer_response: p.pointer_response,
            predicted_shift: p.predicted_shift,
            predicted_final_system: p.predicted_final_system,
            predicted_amplitudes: p.predicted_amplitudes,
            spreading: p.spreading,
            tags: p.tags,
            h0,
            coupling,
        })
    }

    /// `H_A ⊗ I + I ⊗ H_S` on the composite space.
    pub fn h0(&self) -> &DMatrix<Complex<R>> {
        &self.h0
    }

    /// `Q_A ⊗ Q_S` on the composite space.
    pub fn coupling(&self) -> &DMatrix<Complex<R>> {
        &self.coupling
    }

    /// `H_0 + g Q_A Q_S`.
    pub fn hamiltonian(&self, g: f64) -> DMatrix<Complex<R>> {
        &self.h0 + &self.coupling * Complex::new(R::lit(g), R::zero())
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    pub fn is_degenerate(&self) -> bool {
        self.has_tag(TAG_DEGENERATE)
    }

    pub fn apparatus_space(&self) -> &CompositeSpace {
        self.apparatus_initial.space()
    }

    pub fn system_space(&self) -> &CompositeSpace {
        self.system_initial.space()
    }

    pub fn name(&self) -> &'static str {
        self.spec.name()
    }
}

/// `‖H φ − ⟨H⟩ φ‖ / max(1, ‖H‖)`.
pub fn eigen_residual<R: Real>(h: &HermitianOperator<R>, phi: &QuantumState<R>) -> Result<f64> {
    let hphi = h.apply(phi)?;
    let e = h.expectation(phi)?;
    let r = hphi.amplitudes() - phi.amplitudes() * Complex::new(R::lit(e), R::zero());
    Ok(r.norm().as_f64() / h.norm().max(1.0))
}

fn single_factor<R: Real>(op: &HermitianOperator<R>) -> Result<CompositeSpace> {
    if op.space().factors().len() != 1 {
        return Err(Error::InvalidParameter(format!("operator `{}` must act on one factor", op.name())));
    }
    Ok(op.space().clone())
}
