//! Serializable scenario descriptions (`"schema": "v1"` documents).

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::builders;
use super::params::{OscillatorParams, PacketParams, SpinFieldParams};
use super::scenario::{Scenario, ScenarioParts, APPARATUS, SYSTEM};
use crate::error::{Error, Result};
use crate::qcore::{CompositeSpace, HermitianOperator, HilbertFactor, QuantumState};
use crate::scalar::Real;

pub const SCHEMA_VERSION: &str = "v1";

/// Recipe for a scenario. Built-ins are stored by parameters; only
/// `custom` carries raw matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    Aav {
        spin: SpinFieldParams,
        packet: PacketParams,
    },
    MomentumCoupled {
        spin: SpinFieldParams,
        packet: PacketParams,
        mass: f64,
    },
    DegenerateOsc {
        apparatus: OscillatorParams,
        system: OscillatorParams,
        #[serde(default = "one")]
        excitation: usize,
    },
    DegenerateSpinOsc {
        oscillator: OscillatorParams,
        mu_b0: f64,
        n: [f64; 3],
    },
    Custom(CustomScenario),
}

fn one() -> usize {
    1
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::Aav { .. } => "aav",
            ScenarioSpec::MomentumCoupled { .. } => "momentum-coupled",
            ScenarioSpec::DegenerateOsc { .. } => "degenerate-osc",
            ScenarioSpec::DegenerateSpinOsc { .. } => "degenerate-spin-osc",
            ScenarioSpec::Custom(_) => "custom",
        }
    }

    pub fn build<R: Real>(&self) -> Result<Scenario<R>> {
        match self {
            ScenarioSpec::Aav { spin, packet } => builders::build_aav_spin(spin, packet),
            ScenarioSpec::MomentumCoupled { spin, packet, mass } => {
                builders::build_momentum_coupled(spin, packet, *mass)
            }
            ScenarioSpec::DegenerateOsc { apparatus, system, excitation } => {
                builders::build_degenerate_oscillators(apparatus, system, *excitation)
            }
            ScenarioSpec::DegenerateSpinOsc { oscillator, mu_b0, n } => {
                builders::build_degenerate_spin_oscillator(oscillator, *mu_b0, *n)
            }
            ScenarioSpec::Custom(c) => c.build(),
        }
    }
}

/// Top-level JSON document wrapping a [`ScenarioSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub schema: String,
    pub scenario: ScenarioSpec,
}

impl ScenarioDocument {
    pub fn new(scenario: ScenarioSpec) -> Self {
        Self { schema: SCHEMA_VERSION.into(), scenario }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!("unsupported schema `{}`", doc.schema)));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl<R: Real> Scenario<R> {
    pub fn to_json(&self) -> Result<String> {
        ScenarioDocument::new(self.spec.clone()).to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        ScenarioDocument::from_json(text)?.scenario.build()
    }

    /// Raw-matrix snapshot of this scenario.
    pub fn to_custom(&self) -> CustomScenario {
        CustomScenario {
            apparatus: self.apparatus_space().factors()[0].clone(),
            system: self.system_space().factors()[0].clone(),
            h_apparatus: ComplexMatrix::from_matrix(self.h_apparatus.matrix()),
            h_system: ComplexMatrix::from_matrix(self.h_system.matrix()),
            q_apparatus: ComplexMatrix::from_matrix(self.q_apparatus.matrix()),
            q_system: ComplexMatrix::from_matrix(self.q_system.matrix()),
            pointer: ComplexMatrix::from_matrix(self.pointer.matrix()),
            apparatus_initial: to_pairs(self.apparatus_initial.amplitudes()),
            system_initial: to_pairs(self.system_initial.amplitudes()),
            pointer_response: self.pointer_response,
            predicted_shift: self.predicted_shift,
            tags: self.tags.clone(),
        }
    }
}

/// Row-major complex matrix as `[[re, im], …]` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexMatrix(pub Vec<Vec<[f64; 2]>>);

impl ComplexMatrix {
    pub fn from_matrix<R: Real>(m: &DMatrix<Complex<R>>) -> Self {
        Self(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re.as_f64(), m[(i, j)].im.as_f64()]).collect())
                .collect(),
        )
    }

    pub fn to_matrix<R: Real>(&self, dim: usize) -> Result<DMatrix<Complex<R>>> {
        if self.0.len() != dim || self.0.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: self.0.len() });
        }
        Ok(DMatrix::from_fn(dim, dim, |i, j| R::cplx(self.0[i][j][0], self.0[i][j][1])))
    }
}

fn to_pairs<R: Real>(v: &DVector<Complex<R>>) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()
}

/// User-supplied scenario given by explicit matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomScenario {
    pub apparatus: HilbertFactor,
    pub system: HilbertFactor,
    pub h_apparatus: ComplexMatrix,
    pub h_system: ComplexMatrix,
    pub q_apparatus: ComplexMatrix,
    pub q_system: ComplexMatrix,
    pub pointer: ComplexMatrix,
    pub apparatus_initial: Vec<[f64; 2]>,
    pub system_initial: Vec<[f64; 2]>,
    pub pointer_response: f64,
    #[serde(default)]
    pub predicted_shift: Option<f64>,
    #[serde(default)]
    pub tags: Vec<String>,
}

fn revalidate(f: &HilbertFactor, label: &str) -> Result<HilbertFactor> {
    match f.grid_spec() {
        Some(g) if f.basis_kind().is_grid() => HilbertFactor::grid(label, f.basis_kind(), g),
        _ => HilbertFactor::new(label, f.dim(), f.basis_kind()),
    }
}

impl CustomScenario {
    pub fn build<R: Real>(&self) -> Result<Scenario<R>> {
        let app = CompositeSpace::single(revalidate(&self.apparatus, APPARATUS)?);
        let sys = CompositeSpace::single(revalidate(&self.system, SYSTEM)?);
        let op = |m: &ComplexMatrix, space: &CompositeSpace, name: &str| -> Result<HermitianOperator<R>> {
            HermitianOperator::with_tolerance(space.clone(), m.to_matrix(space.total_dim())?, name, 1e-10)
        };
        let state = |v: &[[f64; 2]], space: &CompositeSpace| -> Result<QuantumState<R>> {
            let pairs: Vec<(f64, f64)> = v.iter().map(|z| (z[0], z[1])).collect();
            QuantumState::from_parts(space.clone(), &pairs)
        };
        Scenario::assemble(ScenarioParts {
            spec: ScenarioSpec::Custom(self.clone()),
            h_apparatus: op(&self.h_apparatus, &app, "H_A")?,
            h_system: op(&self.h_system, &sys, "H_S")?,
            q_apparatus: op(&self.q_apparatus, &app, "Q_A")?,
            q_system: op(&self.q_system, &sys, "Q_S")?,
            apparatus_initial: state(&self.apparatus_initial, &app)?,
            system_initial: state(&self.system_initial, &sys)?,
            pointer: op(&self.pointer, &app, "pointer")?,
            pointer_response: self.pointer_response,
            predicted_shift: self.predicted_shift,
            predicted_final_system: None,
            predicted_amplitudes: Vec::new(),
            spreading: None,
            tags: self.tags.clone(),
        })
    }
}
