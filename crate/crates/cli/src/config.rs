use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use protectsim::evolve::{CouplingProfile, ProfileKind, RampShape};
use protectsim::models::{defaults, ScenarioDocument, ScenarioSpec, SpinFieldParams};
use protectsim::protect::SliceRule;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Aav,
    MomentumCoupled,
    DegenerateOsc,
    DegenerateSpinOsc,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Rectangular,
    SmoothRamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    SineSquared,
    Linear,
}

/// Scenario selection and parameter overrides.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "aav")]
    pub scenario: ScenarioName,
    /// Scenario JSON document (required for `custom`)
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "B0")]
    pub b0: Option<f64>,
    #[arg(long = "Bi")]
    pub bi: Option<f64>,
    /// Angle between the coupling and the static field directions
    #[arg(long)]
    pub theta: Option<f64>,
    /// Apparatus packet width
    #[arg(long)]
    pub width: Option<f64>,
    /// Apparatus grid length
    #[arg(long)]
    pub extent: Option<f64>,
    /// Apparatus grid points (power of two)
    #[arg(long)]
    pub points: Option<usize>,
    /// Apparatus mass (momentum-coupled)
    #[arg(long)]
    pub mass: Option<f64>,
    /// Oscillator Fock-space dimension
    #[arg(long)]
    pub fock_dim: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[arg(long, value_enum, default_value = "rectangular")]
    pub profile: ProfileArg,
    #[arg(long, default_value_t = 0.1)]
    pub ramp_fraction: f64,
    #[arg(long, value_enum, default_value = "sine-squared")]
    pub ramp_shape: ShapeArg,
    #[arg(long, default_value_t = 10.0)]
    pub slices_per_time: f64,
    #[arg(long, default_value_t = 64)]
    pub min_slices: usize,
}

/// Coupling profile without its duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    pub ramp_fraction: f64,
    pub shape: RampShape,
}

impl ProfileConfig {
    pub fn at(&self, total_time: f64) -> Result<CouplingProfile, CliError> {
        CouplingProfile::new(self.kind, total_time, self.ramp_fraction, self.shape).map_err(CliError::config)
    }
}

/// Fully resolved inputs of a protocol command; embedded verbatim in outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub scenario: ScenarioSpec,
    pub profile: ProfileConfig,
    #[serde(rename = "T")]
    pub times: Vec<f64>,
    pub slices: SliceRule,
    pub seed: u64,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_cells: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QndConfig {
    pub n0: f64,
    pub var0: f64,
    pub varm: f64,
    pub k: usize,
    pub traces: usize,
    pub seed: u64,
    pub alpha: f64,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub c: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
    pub x_perp: f64,
    pub n_p: u64,
    pub format: Format,
}

/// Load a config either bare or from the `config` field of a previous output.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(CliError::config)?;
    let inner = match value.get("config") {
        Some(c) => c.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(CliError::config)
}

pub fn parse_times(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| CliError::config(format!("bad T value `{t}`")))?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::config(format!("T must be > 0, got {v}")))
            }
        })
        .collect()
}

fn spin_override(spin: &SpinFieldParams, a: &ScenarioArgs) -> SpinFieldParams {
    if a.mu.is_none() && a.b0.is_none() && a.bi.is_none() && a.theta.is_none() {
        return spin.clone();
    }
    let theta = a.theta.unwrap_or_else(|| spin.n[0].atan2(spin.n[2]));
    SpinFieldParams::in_plane(a.mu.unwrap_or(spin.mu), a.b0.unwrap_or(spin.b0), a.bi.unwrap_or(spin.b_i), theta)
}

pub fn resolve_scenario(a: &ScenarioArgs) -> Result<ScenarioSpec, CliError> {
    let spin_flags = a.mu.is_some() || a.b0.is_some() || a.bi.is_some() || a.theta.is_some();
    let packet_flags = a.width.is_some() || a.extent.is_some() || a.points.is_some();
    let reject = |what: &str| Err(CliError::config(format!("{what} does not apply to scenario `{:?}`", a.scenario)));

    if let Some(path) = &a.spec {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let doc = ScenarioDocument::from_json(&text).map_err(CliError::config)?;
        if a.scenario != ScenarioName::Custom && doc.scenario.name() != name_of(a.scenario) {
            return Err(CliError::config(format!(
                "--scenario {} conflicts with spec file scenario {}",
                name_of(a.scenario),
                doc.scenario.name()
            )));
        }
        if spin_flags || packet_flags || a.mass.is_some() || a.fock_dim.is_some() {
            return reject("parameter flags with --spec");
        }
        return Ok(doc.scenario);
    }

    let mut spec = match a.scenario {
        ScenarioName::Aav => defaults::aav(),
        ScenarioName::MomentumCoupled => defaults::momentum_coupled(),
        ScenarioName::DegenerateOsc => defaults::degenerate_osc(),
        ScenarioName::DegenerateSpinOsc => defaults::degenerate_spin_osc(),
        ScenarioName::Custom => return Err(CliError::config("scenario `custom` needs --spec <path>")),
    };
    match &mut spec {
        ScenarioSpec::Aav { spin, packet } | ScenarioSpec::MomentumCoupled { spin, packet, .. } => {
            *spin = spin_override(spin, a);
            if let Some(w) = a.width {
                packet.width = w;
            }
            if let Some(e) = a.extent {
                packet.extent = e;
            }
            if let Some(p) = a.points {
                packet.points = p;
            }
            if a.fock_dim.is_some() {
                return reject("--fock-dim");
            }
        }
        ScenarioSpec::DegenerateOsc { apparatus, system, .. } => {
            if spin_flags || packet_flags || a.mass.is_some() {
                return reject("spin, packet or mass flags");
            }
            if let Some(d) = a.fock_dim {
                apparatus.fock_dim = d;
                system.fock_dim = d;
            }
        }
        ScenarioSpec::DegenerateSpinOsc { oscillator, .. } => {
            if spin_flags || packet_flags || a.mass.is_some() {
                return reject("spin, packet or mass flags");
            }
            if let Some(d) = a.fock_dim {
                oscillator.fock_dim = d;
            }
        }
        ScenarioSpec::Custom(_) => unreachable!(),
    }
    match (&mut spec, a.mass) {
        (ScenarioSpec::MomentumCoupled { mass, .. }, Some(m)) => *mass = m,
        (ScenarioSpec::Aav { .. }, Some(_)) => return reject("--mass"),
        _ => {}
    }
    Ok(spec)
}

fn name_of(s: ScenarioName) -> &'static str {
    match s {
        ScenarioName::Aav => "aav",
        ScenarioName::MomentumCoupled => "momentum-coupled",
        ScenarioName::DegenerateOsc => "degenerate-osc",
        ScenarioName::DegenerateSpinOsc => "degenerate-spin-osc",
        ScenarioName::Custom => "custom",
    }
}

pub fn resolve_profile(p: &ProfileArgs) -> Result<(ProfileConfig, SliceRule), CliError> {
    let kind = match p.profile {
        ProfileArg::Rectangular => ProfileKind::Rectangular,
        ProfileArg::SmoothRamp => ProfileKind::SmoothRamp,
    };
    let shape = match p.ramp_shape {
        ShapeArg::SineSquared => RampShape::SineSquared,
        ShapeArg::Linear => RampShape::Linear,
    };
    let ramp_fraction = if kind == ProfileKind::Rectangular { 0.0 } else { p.ramp_fraction };
    let cfg = ProfileConfig { kind, ramp_fraction, shape };
    cfg.at(1.0)?;
    if !(p.slices_per_time >= 0.0) || !p.slices_per_time.is_finite() {
        return Err(CliError::config("--slices-per-time must be ≥ 0"));
    }
    if p.min_slices == 0 {
        return Err(CliError::config("--min-slices must be ≥ 1"));
    }
    Ok((cfg, SliceRule { per_unit_time: p.slices_per_time, min_slices: p.min_slices }))
}
