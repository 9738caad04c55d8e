//! Coupling schedules and time-sliced propagation of `H_0 + g(t) Q_A Q_S`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Scenario, SYSTEM};
use crate::qcore::{partial_trace, BlockSpectrum, BlockStructure, DensityMatrix, QuantumState};
use crate::scalar::Real;
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Rectangular,
    SmoothRamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    #[default]
    SineSquared,
    Linear,
}

impl RampShape {
    /// Rise from 0 to 1 on `u ∈ [0, 1]`; both shapes integrate to ½.
    fn rise(self, u: f64) -> f64 {
        match self {
            RampShape::SineSquared => (0.5 * PI * u).sin().powi(2),
            RampShape::Linear => u,
        }
    }
}

/// Coupling strength `g(t)` on `[0, T]` with `∫ g dt = 1`.
///
/// Ramped profiles rise over `ΔT = ramp_fraction·T` at each end; the
/// plateau is raised to `1/(T − ΔT)` so the integral stays exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    pub kind: ProfileKind,
    pub total_time: f64,
    #[serde(default)]
    pub ramp_fraction: f64,
    #[serde(default)]
    pub shape: RampShape,
}

impl CouplingProfile {
    pub fn rectangular(total_time: f64) -> Result<Self> {
        Self::new(ProfileKind::Rectangular, total_time, 0.0, RampShape::SineSquared)
    }

    pub fn smooth_ramp(total_time: f64, ramp_fraction: f64, shape: RampShape) -> Result<Self> {
        Self::new(ProfileKind::SmoothRamp, total_time, ramp_fraction, shape)
    }

    pub fn new(kind: ProfileKind, total_time: f64, ramp_fraction: f64, shape: RampShape) -> Result<Self> {
        let p = Self { kind, total_time, ramp_fraction, shape };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return Err(Error::InvalidParameter(format!("total time {} must be > 0", self.total_time)));
        }
        if !(0.0..0.5).contains(&self.ramp_fraction) {
            return Err(Error::InvalidParameter(format!(
                "ramp fraction {} must lie in [0, 0.5)",
                self.ramp_fraction
            )));
        }
        Ok(())
    }

    /// Same shape, different duration.
    pub fn with_total_time(&self, total_time: f64) -> Result<Self> {
        Self::new(self.kind, total_time, self.ramp_fraction, self.shape)
    }

    fn ramp_time(&self) -> f64 {
        match self.kind {
            ProfileKind::Rectangular => 0.0,
            ProfileKind::SmoothRamp => self.ramp_fraction * self.total_time,
        }
    }

    pub fn plateau(&self) -> f64 {
        1.0 / (self.total_time - self.ramp_time())
    }

    /// Unchecked evaluation for `t ∈ [0, T]`.
    fn eval(&self, t: f64) -> f64 {
        let h = self.plateau();
        let r = self.ramp_time();
        if r == 0.0 {
            return h;
        }
        if t < r {
            h * self.shape.rise(t / r)
        } else if t > self.total_time - r {
            h * self.shape.rise((self.total_time - t) / r)
        } else {
            h
        }
    }

    pub fn g_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(Error::TimeOutOfRange { t, total: self.total_time });
        }
        Ok(self.eval(t))
    }

    /// Composite Simpson estimate of `∫₀ᵀ g dt` over `intervals` (rounded up to even).
    pub fn integral(&self, intervals: usize) -> f64 {
        let n = (intervals.max(2) + 1) & !1;
        let h = self.total_time / n as f64;
        let mut acc = self.eval(0.0) + self.eval(self.total_time);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.eval(i as f64 * h);
        }
        acc * h / 3.0
    }
}

/// Slice count and snapshot cadence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionSettings {
    pub slices: usize,
    /// Snapshot every `record_stride` slices; `0` keeps endpoints only.
    #[serde(default)]
    pub record_stride: usize,
}

impl EvolutionSettings {
    pub fn new(slices: usize) -> Self {
        Self { slices, record_stride: 0 }
    }
}

/// Snapshots of a propagation.
#[derive(Debug, Clone)]
pub struct Trajectory<R: Real> {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState<R>>,
    pub profile: CouplingProfile,
    pub settings: EvolutionSettings,
    pub warnings: Vec<String>,
}

impl<R: Real> Trajectory<R> {
    pub fn final_state(&self) -> &QuantumState<R> {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// CSV with columns `time, pointer, system_fidelity, norm`.
    pub fn write_csv<W: Write>(&self, s: &Scenario<R>, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "pointer", "system_fidelity", "norm"])?;
        let pointer = s.pointer.embed(&s.space)?;
        for (t, psi) in self.times.iter().zip(&self.states) {
            let rho: DensityMatrix<R> = partial_trace(psi, SYSTEM)?;
            w.write_record([
                t.to_string(),
                pointer.expectation(psi)?.to_string(),
                rho.population(&s.system_initial)?.to_string(),
                psi.norm().as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reusable propagator for one scenario; caches the spectrum of
/// `H_0 + g Q_A Q_S` for every coupling value it meets.
pub struct Propagator<'a, R: Real> {
    scenario: &'a Scenario<R>,
    structure: BlockStructure,
    cache: HashMap<u64, BlockSpectrum<R>>,
    tolerances: ToleranceConfig,
}

impl<'a, R: Real> Propagator<'a, R> {
    pub fn new(scenario: &'a Scenario<R>) -> Self {
        let structure = BlockStructure::detect(&[scenario.h0(), scenario.coupling()]);
        Self { scenario, structure, cache: HashMap::new(), tolerances: ToleranceConfig::default() }
    }

    pub fn with_tolerances(mut self, tolerances: ToleranceConfig) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    fn spectrum(&mut self, g: f64) -> Result<&BlockSpectrum<R>> {
        let key = g.to_bits();
        if !self.cache.contains_key(&key) {
            let spec = BlockSpectrum::new(&self.scenario.hamiltonian(g), &self.structure)?;
            self.cache.insert(key, spec);
        }
        Ok(&self.cache[&key])
    }

    fn slice_couplings(profile: &CouplingProfile, slices: usize) -> Vec<f64> {
        let dt = profile.total_time / slices as f64;
        (0..slices).map(|m| profile.eval((m as f64 + 0.5) * dt)).collect()
    }

    /// `Π_m exp(-i H(t_m) ΔT)` with `g` sampled at slice midpoints.
    pub fn propagate_from(
        &mut self,
        initial: &QuantumState<R>,
        profile: &CouplingProfile,
        settings: &EvolutionSettings,
    ) -> Result<Trajectory<R>> {
        self.run(initial, profile, settings, false)
    }

    /// Exact inverse of [`Self::propagate_from`]: slices in reverse order with `-ΔT`.
    pub fn unpropagate_from(
        &mut self,
        state: &QuantumState<R>,
        profile: &CouplingProfile,
        settings: &EvolutionSettings,
    ) -> Result<Trajectory<R>> {
        self.run(state, profile, settings, true)
    }

    fn run(
        &mut self,
        initial: &QuantumState<R>,
        profile: &CouplingProfile,
        settings: &EvolutionSettings,
        reverse: bool,
    ) -> Result<Trajectory<R>> {
        profile.validate()?;
        if settings.slices == 0 {
            return Err(Error::InvalidParameter("need at least one slice".into()));
        }
        if initial.space() != &self.scenario.space {
            return Err(Error::DimensionMismatch {
                expected: self.scenario.space.total_dim(),
                found: initial.space().total_dim(),
            });
        }
        let n = settings.slices;
        let dt = profile.total_time / n as f64;
        let mut couplings = Self::slice_couplings(profile, n);
        if reverse {
            couplings.reverse();
        }
        let mut warnings = Vec::new();
        let hnorm = self.scenario.hamiltonian(couplings.iter().copied().fold(0.0, f64::max)).norm().as_f64();
        let recommended = (profile.total_time * hnorm * 10.0).ceil();
        if (n as f64) < recommended && profile.kind == ProfileKind::SmoothRamp {
            warnings.push(format!("{n} slices is below the recommended {recommended}"));
        }

        let step = if reverse { -dt } else { dt };
        let sign = if reverse { -1.0 } else { 1.0 };
        let mut amps: DVector<Complex<R>> = initial.amplitudes().clone();
        let mut times = vec![if reverse { profile.total_time } else { 0.0 }];
        let mut states = vec![initial.clone()];
        let stride = settings.record_stride;
        let mut m = 0;
        while m < n {
            // merge a run of equal couplings, stopping at the next snapshot
            let g = couplings[m];
            let limit = if stride > 0 { ((m / stride) + 1) * stride } else { n };
            let mut end = m + 1;
            while end < limit.min(n) && couplings[end].to_bits() == g.to_bits() {
                end += 1;
            }
            let span = (end - m) as f64 * step;
            self.spectrum(g)?.evolve_in_place(R::lit(span), &mut amps);
            m = end;
            if (stride > 0 && m % stride == 0) || m == n {
                let norm = amps.norm().as_f64();
                if (norm - 1.0).abs() > self.tolerances.propagation_drift.max(1e3 * R::precision()) {
                    return Err(Error::NormDrift((norm - 1.0).abs()));
                }
                let t0 = if reverse { profile.total_time } else { 0.0 };
                times.push(t0 + sign * m as f64 * dt);
                states.push(QuantumState::new(initial.space().clone(), amps.clone())?);
            }
        }
        Ok(Trajectory { times, states, profile: *profile, settings: *settings, warnings })
    }
}

pub fn propagate<R: Real>(
    s: &Scenario<R>,
    profile: &CouplingProfile,
    settings: &EvolutionSettings,
) -> Result<Trajectory<R>> {
    Propagator::new(s).propagate_from(&s.initial, profile, settings)
}

/// `‖ψ_N(T) − ψ_2N(T)‖`.
pub fn convergence_check<R: Real>(s: &Scenario<R>, profile: &CouplingProfile, slices: usize) -> Result<f64> {
    if slices < 2 {
        return Err(Error::InvalidParameter("convergence check needs N ≥ 2".into()));
    }
    let mut prop = Propagator::new(s);
    let coarse = prop.propagate_from(&s.initial, profile, &EvolutionSettings::new(slices))?;
    let fine = prop.propagate_from(&s.initial, profile, &EvolutionSettings::new(2 * slices))?;
    Ok((coarse.final_state().amplitudes() - fine.final_state().amplitudes()).norm().as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_aav_spin, build_degenerate_spin_oscillator, OscillatorParams, PacketParams, SpinFieldParams};
    use crate::qcore::{matrix_exponential_apply, HermitianOperator};

    fn small_aav(b_i: f64) -> Scenario<f64> {
        let packet = PacketParams { width: 2.0, center: 0.0, momentum: 0.0, extent: 32.0, points: 32 };
        build_aav_spin(&SpinFieldParams::in_plane(1.0, 1.0, b_i, 1.0), &packet).unwrap()
    }

    #[test]
    fn rectangular_is_flat() {
        let p = CouplingProfile::rectangular(10.0).unwrap();
        assert_eq!(p.g_at(5.0).unwrap(), 0.1);
        assert!(matches!(p.g_at(10.5), Err(Error::TimeOutOfRange { .. })));
        assert!(p.g_at(-1e-9).is_err());
    }

    #[test]
    fn sine_ramp_endpoints_and_slope() {
        let p = CouplingProfile::smooth_ramp(10.0, 0.1, RampShape::SineSquared).unwrap();
        assert_eq!(p.g_at(0.0).unwrap(), 0.0);
        assert!(p.g_at(10.0).unwrap().abs() < 1e-30);
        // one-sided difference quotients vanish at the ends and match at the ramp joints
        let h = 1e-6;
        assert!((p.g_at(h).unwrap() - p.g_at(0.0).unwrap()) / h < 1e-5);
        let joint = 1.0;
        let left = (p.g_at(joint).unwrap() - p.g_at(joint - h).unwrap()) / h;
        let right = (p.g_at(joint + h).unwrap() - p.g_at(joint).unwrap()) / h;
        assert!((left - right).abs() < 1e-4);
        assert!((p.plateau() - 1.0 / 9.0).abs() < 1e-15);
        // bounded by the plateau-renormalized 1/T
        for i in 0..=1000 {
            assert!(p.g_at(i as f64 * 0.01).unwrap() <= 1.0 / ((1.0 - 0.2) * 10.0));
        }
    }

    #[test]
    fn profiles_integrate_to_one() {
        for p in [
            CouplingProfile::rectangular(7.0).unwrap(),
            CouplingProfile::smooth_ramp(10.0, 0.1, RampShape::SineSquared).unwrap(),
            CouplingProfile::smooth_ramp(3.0, 0.25, RampShape::SineSquared).unwrap(),
            CouplingProfile::smooth_ramp(50.0, 0.4, RampShape::Linear).unwrap(),
        ] {
            assert!((p.integral(10_000) - 1.0).abs() < 1e-10, "{p:?}: {}", p.integral(10_000));
        }
    }

    #[test]
    fn ramp_fraction_bounds() {
        assert!(CouplingProfile::smooth_ramp(1.0, 0.5, RampShape::Linear).is_err());
        assert!(CouplingProfile::smooth_ramp(1.0, -0.1, RampShape::Linear).is_err());
        assert!(CouplingProfile::rectangular(0.0).is_err());
    }

    #[test]
    fn rectangular_slicing_is_exact() {
        let s = small_aav(0.3);
        let p = CouplingProfile::rectangular(20.0).unwrap();
        let one = propagate(&s, &p, &EvolutionSettings::new(1)).unwrap();
        let many = propagate(&s, &p, &EvolutionSettings { slices: 128, record_stride: 1 }).unwrap();
        assert_eq!(many.states.len(), 129);
        let d = (one.final_state().amplitudes() - many.final_state().amplitudes()).norm();
        assert!(d < 1e-12, "{d}");
        assert!(convergence_check(&s, &p, 7).unwrap() < 1e-12);
    }

    #[test]
    fn zero_coupling_is_free_evolution() {
        let p = OscillatorParams { mass: 1.0, frequency: 1.0, fock_dim: 5 };
        let mut s = build_degenerate_spin_oscillator::<f64>(&p, 0.5, [1.0, 0.0, 0.0]).unwrap();
        s.q_system = HermitianOperator::zero(s.system_space().clone(), "0");
        let s = crate::models::CustomScenario::build::<f64>(&s.to_custom()).unwrap();
        let prof = CouplingProfile::smooth_ramp(3.0, 0.2, RampShape::SineSquared).unwrap();
        let out = propagate(&s, &prof, &EvolutionSettings::new(17)).unwrap();
        let h0 = HermitianOperator::new(s.space.clone(), s.h0().clone(), "H0").unwrap();
        let exact = matrix_exponential_apply(&h0, 3.0, &s.initial).unwrap();
        assert!((out.final_state().amplitudes() - exact.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let s = small_aav(0.5);
        let p = CouplingProfile::smooth_ramp(15.0, 0.2, RampShape::SineSquared).unwrap();
        let set = EvolutionSettings::new(300);
        let mut prop = Propagator::new(&s);
        let fwd = prop.propagate_from(&s.initial, &p, &set).unwrap();
        let back = prop.unpropagate_from(fwd.final_state(), &p, &set).unwrap();
        assert!((back.final_state().amplitudes() - s.initial.amplitudes()).norm() < 1e-9);
        assert!((back.times.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ramped_convergence_is_first_order_or_better() {
        let s = small_aav(0.5);
        let p = CouplingProfile::smooth_ramp(10.0, 0.3, RampShape::SineSquared).unwrap();
        let d1 = convergence_check(&s, &p, 40).unwrap();
        let d2 = convergence_check(&s, &p, 80).unwrap();
        assert!(d2 * 2.0 <= d1, "{d1} -> {d2}");
        let coarse = convergence_check(&s, &p, 3).unwrap();
        assert!(coarse > 10.0 * d2, "{coarse}");
    }

    #[test]
    fn snapshots_stay_normalized() {
        let s = small_aav(0.5);
        let p = CouplingProfile::smooth_ramp(10.0, 0.3, RampShape::SineSquared).unwrap();
        let tr = propagate(&s, &p, &EvolutionSettings { slices: 64, record_stride: 8 }).unwrap();
        assert_eq!(tr.times.len(), 9);
        for psi in &tr.states {
            assert!((psi.norm() - 1.0).abs() < 1e-10);
        }
        let mut buf = Vec::new();
        tr.write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,pointer,system_fidelity,norm"));
        assert_eq!(text.lines().count(), 10);
    }
}
