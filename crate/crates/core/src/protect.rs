//! The protective-measurement protocol: single runs, T scans, spreading and
//! repeated readout series.

use std::io::Write;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{CouplingProfile, EvolutionSettings, Propagator};
use crate::models::{fourier_kernel, Scenario, APPARATUS, SYSTEM};
use crate::qcore::{partial_trace, BasisKind, DensityMatrix, Eigensystem, HermitianOperator, QuantumState};
use crate::scalar::Real;
use crate::stats::PowerLawFit;
use crate::tolerance::ToleranceConfig;

/// Outcome of one coupled run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectiveRunResult {
    pub scenario: String,
    pub pointer_before: f64,
    pub pointer_after: f64,
    pub pointer_shift: f64,
    pub system_fidelity: f64,
    pub orthogonal_probability: f64,
    /// Standard deviation of the pointer observable.
    pub apparatus_width_before: f64,
    pub apparatus_width_after: f64,
    pub predicted_shift: Option<f64>,
    pub system_min_eigenvalue: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(rename = "N")]
    pub slices: usize,
    pub profile: CouplingProfile,
    pub warnings: Vec<String>,
}

/// How many slices to use for a given `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceRule {
    pub per_unit_time: f64,
    pub min_slices: usize,
}

impl Default for SliceRule {
    fn default() -> Self {
        Self { per_unit_time: 10.0, min_slices: 64 }
    }
}

impl SliceRule {
    pub fn slices(&self, total_time: f64) -> usize {
        ((self.per_unit_time * total_time).ceil() as usize).max(self.min_slices).max(1)
    }
}

/// Mean and standard deviation of `op` in `rho`.
fn moments<R: Real>(rho: &DensityMatrix<R>, op: &HermitianOperator<R>) -> Result<(f64, f64)> {
    let mean = rho.expectation(op)?;
    let sq = HermitianOperator::with_tolerance(op.space().clone(), op.matrix() * op.matrix(), "sq", 1e-8)?;
    let second = rho.expectation(&sq)?;
    Ok((mean, (second - mean * mean).max(0.0).sqrt()))
}

/// Largest boundary amplitude of a single grid factor state, checked in both
/// the position and momentum representations.
fn grid_edge_amplitude<R: Real>(rho: &DensityMatrix<R>) -> Option<f64> {
    let factor = &rho.space().factors()[0];
    let grid = factor.grid_spec()?;
    let f = fourier_kernel::<R>(&grid);
    let m = rho.matrix();
    let other: DMatrix<Complex<R>> = match factor.basis_kind() {
        BasisKind::GridPosition => &f * m * f.adjoint(),
        _ => f.adjoint() * m * &f,
    };
    let n = grid.points;
    let edge = [m[(0, 0)], m[(n - 1, n - 1)], other[(0, 0)], other[(n - 1, n - 1)]]
        .iter()
        .map(|z| z.re.as_f64().max(0.0).sqrt())
        .fold(0.0, f64::max);
    Some(edge)
}

fn check_grid_leakage<R: Real>(rho: &DensityMatrix<R>, tol: f64) -> Result<()> {
    match grid_edge_amplitude(rho) {
        Some(edge) if edge > tol => Err(Error::PacketLeakage(edge)),
        _ => Ok(()),
    }
}

/// Population of the top Fock level, if the factor is a Fock space.
fn check_fock<R: Real>(rho: &DensityMatrix<R>, tol: f64) -> Result<()> {
    if rho.space().factors()[0].basis_kind() == BasisKind::Fock {
        let d = rho.matrix().nrows();
        let top = rho.matrix()[(d - 1, d - 1)].re.as_f64();
        if top > tol {
            return Err(Error::FockTruncation(top));
        }
    }
    Ok(())
}

fn check_precondition<R: Real>(s: &Scenario<R>) -> Result<()> {
    // eigenstate condition is enforced when the scenario is assembled;
    // only a direct field edit can break it afterwards
    if s.is_degenerate() || s.has_tag(crate::models::TAG_NON_EIGENSTATE) {
        return Ok(());
    }
    let r = crate::models::eigen_residual(&s.h_system, &s.system_initial)?;
    if r > ToleranceConfig::default().eigenstate {
        return Err(Error::NotEigenstate(r));
    }
    Ok(())
}

fn summarize<R: Real>(
    s: &Scenario<R>,
    initial: &QuantumState<R>,
    psi: &QuantumState<R>,
    profile: &CouplingProfile,
    settings: &EvolutionSettings,
    warnings: Vec<String>,
    tol: &ToleranceConfig,
) -> Result<ProtectiveRunResult> {
    let rho_a0 = partial_trace(initial, APPARATUS)?;
    let rho_a = partial_trace(psi, APPARATUS)?;
    let rho_s = partial_trace(psi, SYSTEM)?;
    let floor = 1e3 * R::precision();
    check_grid_leakage(&rho_a, tol.packet_leakage.max(floor))?;
    check_fock(&rho_a, tol.fock_truncation.max(floor))?;
    check_fock(&rho_s, tol.fock_truncation.max(floor))?;
    let (before, width_before) = moments(&rho_a0, &s.pointer)?;
    let (after, width_after) = moments(&rho_a, &s.pointer)?;
    let fidelity = rho_s.population(&s.system_initial)?;
    Ok(ProtectiveRunResult {
        scenario: s.name().to_string(),
        pointer_before: before,
        pointer_after: after,
        pointer_shift: after - before,
        system_fidelity: fidelity,
        orthogonal_probability: 1.0 - fidelity,
        apparatus_width_before: width_before,
        apparatus_width_after: width_after,
        predicted_shift: s.predicted_shift,
        system_min_eigenvalue: rho_s.min_eigenvalue(),
        total_time: profile.total_time,
        slices: settings.slices,
        profile: *profile,
        warnings,
    })
}

pub fn run_protective<R: Real>(
    s: &Scenario<R>,
    profile: &CouplingProfile,
    settings: &EvolutionSettings,
) -> Result<ProtectiveRunResult> {
    check_precondition(s)?;
    let tol = ToleranceConfig::default();
    let traj = Propagator::new(s).propagate_from(&s.initial, profile, settings)?;
    summarize(s, &s.initial, traj.final_state(), profile, settings, traj.warnings.clone(), &tol)
}

/// Runs over a list of durations and the log-log fits over them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    #[serde(rename = "T")]
    pub ts: Vec<f64>,
    pub runs: Vec<ProtectiveRunResult>,
    /// `orthogonal_probability ≈ A·T^b`; absent when some probability is not positive.
    pub fit: Option<PowerLawFit>,
    /// `|pointer_shift − predicted_shift| ≈ A·T^b`, when a prediction exists.
    pub shift_error_fit: Option<PowerLawFit>,
}

pub fn validate_scan_times(ts: &[f64]) -> Result<()> {
    if ts.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: ts.len() });
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) || !(ts[0] > 0.0) {
        return Err(Error::InvalidParameter("T values must be positive and strictly increasing".into()));
    }
    if ts[ts.len() - 1] < 10.0 * ts[0] * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter("T values must span at least one decade".into()));
    }
    Ok(())
}

/// Independent runs for each `T` (in parallel), keyed by input order.
pub fn scan_t<R: Real>(s: &Scenario<R>, ts: &[f64], profile: &CouplingProfile, rule: SliceRule) -> Result<ScanResult> {
    validate_scan_times(ts)?;
    let runs = ts
        .par_iter()
        .map(|&t| {
            let p = profile.with_total_time(t)?;
            run_protective(s, &p, &EvolutionSettings::new(rule.slices(t)))
        })
        .collect::<Result<Vec<_>>>()?;
    let p_orth: Vec<f64> = runs.iter().map(|r| r.orthogonal_probability).collect();
    let fit = PowerLawFit::fit(ts, &p_orth).ok();
    let shift_error_fit = s.predicted_shift.and_then(|pred| {
        let errs: Vec<f64> = runs.iter().map(|r| (r.pointer_shift - pred).abs()).collect();
        PowerLawFit::fit(ts, &errs).ok()
    });
    Ok(ScanResult { ts: ts.to_vec(), runs, fit, shift_error_fit })
}

impl ScanResult {
    /// Table with one row per `T`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T", "N", "pointer_shift", "system_fidelity", "orthogonal_probability", "width_before", "width_after"])?;
        for r in &self.runs {
            w.write_record([
                r.total_time.to_string(),
                r.slices.to_string(),
                r.pointer_shift.to_string(),
                r.system_fidelity.to_string(),
                r.orthogonal_probability.to_string(),
                r.apparatus_width_before.to_string(),
                r.apparatus_width_after.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadingReport {
    #[serde(rename = "T")]
    pub total_time: f64,
    pub measured_variance: f64,
    pub predicted_variance: f64,
}

impl SpreadingReport {
    pub fn relative_error(&self) -> f64 {
        (self.measured_variance - self.predicted_variance).abs() / self.predicted_variance
    }
}

/// Pointer (position) variance after time `T` against the free-spreading formula.
pub fn spreading_report<R: Real>(
    s: &Scenario<R>,
    profile: &CouplingProfile,
    settings: &EvolutionSettings,
) -> Result<SpreadingReport> {
    let model = s.spreading.ok_or_else(|| {
        Error::InvalidParameter(format!("scenario `{}` has no spreading model", s.name()))
    })?;
    let run = run_protective(s, profile, settings)?;
    Ok(SpreadingReport {
        total_time: profile.total_time,
        measured_variance: run.apparatus_width_after.powi(2),
        predicted_variance: model.predicted_variance(profile.total_time),
    })
}

/// Variance of the initial packet, i.e. the `T = 0` end of the spreading curve.
pub fn initial_spreading<R: Real>(s: &Scenario<R>) -> Result<SpreadingReport> {
    let model = s.spreading.ok_or_else(|| {
        Error::InvalidParameter(format!("scenario `{}` has no spreading model", s.name()))
    })?;
    let rho = DensityMatrix::pure(&s.apparatus_initial);
    let (_, width) = moments(&rho, &s.pointer)?;
    Ok(SpreadingReport { total_time: 0.0, measured_variance: width * width, predicted_variance: model.predicted_variance(0.0) })
}

/// Sampled readings from repeated couple / read / collapse cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub seed: u64,
    pub bin_cells: usize,
    /// Pointer period on grid apparatus factors; differences are wrapped into
    /// `[-period/2, period/2)`.
    pub period: Option<f64>,
    /// `readings[0]` is taken before any coupling.
    pub readings: Vec<f64>,
    pub differences: Vec<f64>,
    pub running_mean: Vec<f64>,
    /// `⟨ν|ρ_S|ν⟩` after each round.
    pub system_fidelity: Vec<f64>,
}

impl MeasurementSeries {
    pub fn mean_difference(&self) -> f64 {
        *self.running_mean.last().unwrap_or(&0.0)
    }

    pub fn standard_error(&self) -> f64 {
        let n = self.differences.len();
        if n < 2 {
            return f64::INFINITY;
        }
        (crate::stats::sample_variance(&self.differences) / n as f64).sqrt()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "reading", "difference", "running_mean", "system_fidelity"])?;
        w.write_record(["0".to_string(), self.readings[0].to_string(), String::new(), String::new(), "1".to_string()])?;
        for i in 0..self.differences.len() {
            w.write_record([
                (i + 1).to_string(),
                self.readings[i + 1].to_string(),
                self.differences[i].to_string(),
                self.running_mean[i].to_string(),
                self.system_fidelity[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const DEFAULT_BIN_CELLS: usize = 4;

/// Projective pointer readout in bins of `bin_cells` consecutive pointer
/// eigenvalues.
struct PointerReadout<R: Real> {
    vectors: DMatrix<Complex<R>>,
    bins: Vec<std::ops::Range<usize>>,
    values: Vec<f64>,
    period: Option<f64>,
    dim_a: usize,
    dim_s: usize,
}

impl<R: Real> PointerReadout<R> {
    fn new(s: &Scenario<R>, bin_cells: usize) -> Result<Self> {
        let eig = Eigensystem::of_matrix(s.pointer.matrix())?;
        let dim_a = eig.len();
        let bins: Vec<_> = (0..dim_a).step_by(bin_cells).map(|b| b..(b + bin_cells).min(dim_a)).collect();
        let values = bins
            .iter()
            .map(|r| r.clone().map(|i| eig.values[i].as_f64()).sum::<f64>() / r.len() as f64)
            .collect();
        // a conjugate variable on a periodic grid has an evenly spaced spectrum
        // defined only modulo n·spacing
        let period = s.apparatus_space().factors()[0].grid_spec().filter(|_| dim_a > 1).map(|_| {
            let lo = eig.values[0].as_f64();
            let hi = eig.values[dim_a - 1].as_f64();
            (hi - lo) * dim_a as f64 / (dim_a - 1) as f64
        });
        Ok(Self { vectors: eig.vectors, bins, values, period, dim_a, dim_s: s.system_space().total_dim() })
    }

    fn difference(&self, from: f64, to: f64) -> f64 {
        let d = to - from;
        match self.period {
            Some(p) => d - p * (d / p + 0.5).floor(),
            None => d,
        }
    }

    /// Born-rule sample, then collapse onto the chosen bin.
    fn measure(&self, psi: &QuantumState<R>, rng: &mut ChaCha8Rng) -> Result<(f64, QuantumState<R>)> {
        let amps = psi.amplitudes();
        let grid = DMatrix::from_fn(self.dim_a, self.dim_s, |a, s| amps[a * self.dim_s + s]);
        let coeffs = self.vectors.adjoint() * grid;
        let probs: Vec<f64> = self
            .bins
            .iter()
            .map(|r| r.clone().map(|v| coeffs.row(v).iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>()).sum())
            .collect();
        let total: f64 = probs.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if u < *p {
                chosen = i;
                break;
            }
            u -= p;
        }
        let mut kept = coeffs;
        for v in 0..self.dim_a {
            if !self.bins[chosen].contains(&v) {
                kept.row_mut(v).fill(Complex::new(R::zero(), R::zero()));
            }
        }
        let back = &self.vectors * kept;
        let flat = nalgebra::DVector::from_fn(self.dim_a * self.dim_s, |i, _| back[(i / self.dim_s, i % self.dim_s)]);
        Ok((self.values[chosen], QuantumState::new(psi.space().clone(), flat)?))
    }
}

/// Read, couple for one profile, read again, and so on for `shots` rounds.
pub fn repeated_measurement_series<R: Real>(
    s: &Scenario<R>,
    shots: usize,
    profile: &CouplingProfile,
    settings: &EvolutionSettings,
    seed: u64,
    bin_cells: usize,
) -> Result<MeasurementSeries> {
    if shots == 0 || bin_cells == 0 {
        return Err(Error::InvalidParameter("need shots ≥ 1 and bin width ≥ 1".into()));
    }
    check_precondition(s)?;
    let readout = PointerReadout::new(s, bin_cells)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prop = Propagator::new(s);
    let (first, mut psi) = readout.measure(&s.initial, &mut rng)?;
    let mut readings = vec![first];
    let mut differences = Vec::with_capacity(shots);
    let mut running_mean = Vec::with_capacity(shots);
    let mut fidelity = Vec::with_capacity(shots);
    for round in 0..shots {
        let traj = prop.propagate_from(&psi, profile, settings)?;
        let (reading, collapsed) = readout.measure(traj.final_state(), &mut rng)?;
        differences.push(readout.difference(readings[round], reading));
        readings.push(reading);
        running_mean.push(differences.iter().sum::<f64>() / differences.len() as f64);
        fidelity.push(partial_trace(&collapsed, SYSTEM)?.population(&s.system_initial)?);
        psi = collapsed;
    }
    Ok(MeasurementSeries { seed, bin_cells, period: readout.period, readings, differences, running_mean, system_fidelity: fidelity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_aav_spin, defaults, PacketParams, SpinFieldParams};

    fn small_aav(b_i: f64) -> Scenario<f64> {
        let packet = PacketParams { width: 4.0, center: 0.0, momentum: 0.0, extent: 64.0, points: 64 };
        build_aav_spin(&SpinFieldParams::in_plane(1.0, 1.0, b_i, 1.0), &packet).unwrap()
    }

    #[test]
    fn zero_coupling_is_inert() {
        let s = small_aav(0.0);
        let p = CouplingProfile::rectangular(50.0).unwrap();
        let r = run_protective(&s, &p, &EvolutionSettings::new(10)).unwrap();
        assert!(r.pointer_shift.abs() < 1e-10);
        assert!((r.system_fidelity - 1.0).abs() < 1e-10);
        assert!((r.orthogonal_probability + r.system_fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aav_shift_tracks_prediction() {
        let s = small_aav(0.2);
        let p = CouplingProfile::smooth_ramp(100.0, 0.2, crate::evolve::RampShape::SineSquared).unwrap();
        let r = run_protective(&s, &p, &EvolutionSettings::new(2000)).unwrap();
        let pred = s.predicted_shift.unwrap();
        assert!((r.pointer_shift - pred).abs() < 2e-3, "{} vs {pred}", r.pointer_shift);
        assert!(r.orthogonal_probability < 1e-3);
        assert!(r.system_min_eigenvalue > -1e-10);
    }

    #[test]
    fn scan_needs_four_points_over_a_decade() {
        let s = small_aav(0.2);
        let p = CouplingProfile::rectangular(1.0).unwrap();
        assert!(matches!(scan_t(&s, &[10.0], &p, SliceRule::default()), Err(Error::InsufficientData { .. })));
        assert!(scan_t(&s, &[10.0, 20.0, 30.0, 40.0], &p, SliceRule::default()).is_err());
        assert!(scan_t(&s, &[10.0, 30.0, 20.0, 100.0], &p, SliceRule::default()).is_err());
    }

    #[test]
    fn scan_keeps_input_order() {
        let s = small_aav(0.2);
        let p = CouplingProfile::rectangular(1.0).unwrap();
        let ts = [10.0, 20.0, 50.0, 100.0];
        let out = scan_t(&s, &ts, &p, SliceRule { per_unit_time: 1.0, min_slices: 1 }).unwrap();
        let got: Vec<f64> = out.runs.iter().map(|r| r.total_time).collect();
        assert_eq!(got, ts);
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn spreading_at_zero_time_is_half_width_squared() {
        let s = defaults::momentum_coupled().build::<f64>().unwrap();
        let r = initial_spreading(&s).unwrap();
        assert!((r.predicted_variance - 0.5).abs() < 1e-15);
        assert!(r.relative_error() < 0.01, "{r:?}");
    }

    #[test]
    fn zero_coupling_series_never_moves() {
        let s = small_aav(0.0);
        let p = CouplingProfile::rectangular(20.0).unwrap();
        let series = repeated_measurement_series(&s, 20, &p, &EvolutionSettings::new(1), 5, 4).unwrap();
        assert!(series.differences.iter().all(|d| d.abs() < 1e-12));
        assert_eq!(series.readings.len(), 21);
    }

    #[test]
    fn series_is_seed_deterministic() {
        let s = small_aav(0.2);
        let p = CouplingProfile::rectangular(20.0).unwrap();
        let a = repeated_measurement_series(&s, 5, &p, &EvolutionSettings::new(1), 9, 4).unwrap();
        let b = repeated_measurement_series(&s, 5, &p, &EvolutionSettings::new(1), 9, 4).unwrap();
        assert_eq!(a, b);
    }
}
