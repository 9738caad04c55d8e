//! Repeated weak (nondemolition) readout statistics and the protective vs
//! conventional ensemble trade-off.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protect::ProtectiveRunResult;
use crate::stats::{self, KsResult};

/// Gaussian belief about the signal after `k` readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QndPosterior {
    pub mean: f64,
    pub variance: f64,
    pub k: usize,
}

fn check_variance(v: f64, what: &str) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} variance must be > 0, got {v}")))
    }
}

impl QndPosterior {
    /// Prior with `k = 0`; an infinite variance is a flat prior.
    pub fn prior(mean: f64, variance: f64) -> Result<Self> {
        check_variance(variance, "prior")?;
        Ok(Self { mean, variance, k: 0 })
    }

    /// Conjugate update with one reading of noise variance `reading_variance`
    /// (infinite means an uninformative reading).
    pub fn update(&self, reading: f64, reading_variance: f64) -> Result<Self> {
        check_variance(reading_variance, "reading")?;
        let precision = 1.0 / self.variance + 1.0 / reading_variance;
        let variance = 1.0 / precision;
        let mut weighted = 0.0;
        if self.variance.is_finite() {
            weighted += self.mean / self.variance;
        }
        if reading_variance.is_finite() {
            weighted += reading / reading_variance;
        }
        Ok(Self { mean: variance * weighted, variance, k: self.k + 1 })
    }

    /// Posterior after all `readings` at once.
    pub fn closed_form(prior_mean: f64, prior_variance: f64, reading_variance: f64, readings: &[f64]) -> Result<Self> {
        check_variance(prior_variance, "prior")?;
        check_variance(reading_variance, "reading")?;
        let k = readings.len();
        let variance = 1.0 / (1.0 / prior_variance + k as f64 / reading_variance);
        let mut weighted = 0.0;
        if prior_variance.is_finite() {
            weighted += prior_mean / prior_variance;
        }
        if reading_variance.is_finite() {
            weighted += readings.iter().sum::<f64>() / reading_variance;
        }
        Ok(Self { mean: variance * weighted, variance, k })
    }
}

/// Parameters shared by every trace of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QndParams {
    pub n0: f64,
    pub var0: f64,
    pub var_m: f64,
    pub k: usize,
}

impl QndParams {
    pub fn validate(&self) -> Result<()> {
        check_variance(self.var0, "initial")?;
        check_variance(self.var_m, "reading")?;
        if !self.var0.is_finite() || !self.var_m.is_finite() || !self.n0.is_finite() {
            return Err(Error::InvalidParameter("simulation parameters must be finite".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("need k ≥ 1 readings".into()));
        }
        Ok(())
    }

    /// `Δ_k² = (1/Δ₀² + k/Δ_m²)⁻¹`.
    pub fn final_variance(&self) -> f64 {
        1.0 / (1.0 / self.var0 + self.k as f64 / self.var_m)
    }

    /// Variance of the sample mean across traces, `Δ₀² + Δ_m²/k`.
    pub fn mean_variance(&self) -> f64 {
        self.var0 + self.var_m / self.k as f64
    }

    /// Variance of the final posterior centre across traces, `(k/Δ_m²)Δ₀²Δ_k²`.
    pub fn center_variance(&self) -> f64 {
        self.k as f64 / self.var_m * self.var0 * self.final_variance()
    }
}

/// One simulated readout sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QndTrace {
    pub params: QndParams,
    pub seed: u64,
    /// Value drawn from the initial distribution.
    pub latent: f64,
    pub readings: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance of the readings (0 when `k = 1`).
    pub spread: f64,
    /// `S = (k−1)·spread/Δ_m²`.
    pub s_statistic: f64,
    /// Posterior after each reading.
    pub posteriors: Vec<QndPosterior>,
}

fn reading_stats(readings: &[f64], var_m: f64) -> (f64, f64, f64) {
    let k = readings.len();
    let mean = stats::mean(readings);
    if k < 2 {
        return (mean, 0.0, 0.0);
    }
    let spread = stats::sample_variance(readings);
    (mean, spread, (k as f64 - 1.0) * spread / var_m)
}

impl QndTrace {
    /// Recompute the derived fields from the stored readings.
    pub fn verify(&self) -> Result<()> {
        let (mean, spread, s) = reading_stats(&self.readings, self.params.var_m);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        if !(close(mean, self.mean) && close(spread, self.spread) && close(s, self.s_statistic)) {
            return Err(Error::Numeric("stored trace statistics do not match its readings".into()));
        }
        let last = self.posteriors.last().ok_or_else(|| Error::Numeric("trace has no posteriors".into()))?;
        let direct = QndPosterior::closed_form(self.params.n0, self.params.var0, self.params.var_m, &self.readings)?;
        if !(close(last.variance, direct.variance) && close(last.mean, direct.mean)) {
            return Err(Error::Numeric("sequential posterior disagrees with closed form".into()));
        }
        Ok(())
    }

    pub fn final_posterior(&self) -> QndPosterior {
        *self.posteriors.last().expect("k ≥ 1")
    }

    /// One row per reading: `step, reading, posterior_mean, posterior_variance`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "reading", "posterior_mean", "posterior_variance"])?;
        for (i, (r, p)) in self.readings.iter().zip(&self.posteriors).enumerate() {
            w.write_record([(i + 1).to_string(), r.to_string(), p.mean.to_string(), p.variance.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draw the signal once from `N(n₀, Δ₀²)`, then `k` readings each with
/// independent noise of variance `Δ_m²`.
pub fn simulate_qnd_sequence(params: QndParams, seed: u64) -> Result<QndTrace> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = Normal::new(params.n0, params.var0.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let noise = Normal::new(0.0, params.var_m.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let latent = prior.sample(&mut rng);
    let readings: Vec<f64> = (0..params.k).map(|_| latent + noise.sample(&mut rng)).collect();
    let mut post = QndPosterior::prior(params.n0, params.var0)?;
    let mut posteriors = Vec::with_capacity(params.k);
    for r in &readings {
        post = post.update(*r, params.var_m)?;
        posteriors.push(post);
    }
    let (mean, spread, s_statistic) = reading_stats(&readings, params.var_m);
    Ok(QndTrace { params, seed, latent, readings, mean, spread, s_statistic, posteriors })
}

/// `count` traces with seeds `base_seed, base_seed + 1, …`, in parallel.
pub fn simulate_traces(params: QndParams, count: usize, base_seed: u64) -> Result<Vec<QndTrace>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_qnd_sequence(params, base_seed.wrapping_add(i)))
        .collect()
}

/// Ensemble statistics of many traces with common parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QndSummary {
    pub params: QndParams,
    pub traces: usize,
    pub alpha: f64,
    pub mean_of_mean: f64,
    pub mean_of_mean_stderr: f64,
    pub variance_of_mean: f64,
    pub expected_variance_of_mean: f64,
    pub mean_of_spread: f64,
    pub s_ks: Option<KsResult>,
    pub center_variance: f64,
    pub expected_center_variance: f64,
    pub final_variance: f64,
    /// Mean of `n̄` within three standard errors of `n₀`.
    pub mean_centered: bool,
    /// KS test of `S` against `χ²(k−1)` not rejected at `alpha`.
    pub s_matches_chi_squared: Option<bool>,
}

pub const MIN_TRACES: usize = 100;

pub fn estimator_stats(traces: &[QndTrace], alpha: f64) -> Result<QndSummary> {
    if traces.len() < MIN_TRACES {
        return Err(Error::InsufficientData { needed: MIN_TRACES, got: traces.len() });
    }
    let params = traces[0].params;
    if let Some(t) = traces.iter().find(|t| t.params != params) {
        return Err(Error::Heterogeneous(format!("{:?} vs {:?}", t.params, params)));
    }
    let means: Vec<f64> = traces.iter().map(|t| t.mean).collect();
    let spreads: Vec<f64> = traces.iter().map(|t| t.spread).collect();
    let centers: Vec<f64> = traces.iter().map(|t| t.final_posterior().mean).collect();
    let n = traces.len() as f64;
    let mean_of_mean = stats::mean(&means);
    let variance_of_mean = stats::sample_variance(&means);
    let stderr = (variance_of_mean / n).sqrt();
    let s_ks = if params.k >= 2 {
        let s: Vec<f64> = traces.iter().map(|t| t.s_statistic).collect();
        Some(stats::ks_test_chi_squared(&s, params.k as f64 - 1.0)?)
    } else {
        None
    };
    Ok(QndSummary {
        params,
        traces: traces.len(),
        alpha,
        mean_of_mean,
        mean_of_mean_stderr: stderr,
        variance_of_mean,
        expected_variance_of_mean: params.mean_variance(),
        mean_of_spread: stats::mean(&spreads),
        s_matches_chi_squared: s_ks.map(|ks| ks.p_value > alpha),
        s_ks,
        center_variance: stats::sample_variance(&centers),
        expected_center_variance: params.center_variance(),
        final_variance: params.final_variance(),
        mean_centered: (mean_of_mean - params.n0).abs() <= 3.0 * stderr,
    })
}

/// Protective vs conventional ensemble sizes for equal accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleComparison {
    pub c: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
    pub x_perp: f64,
    pub n_p: u64,
    pub epsilon_p: f64,
    pub n_c: f64,
}

pub fn ensemble_comparison(c: f64, total_time: f64, x_perp: f64, n_p: u64) -> Result<EnsembleComparison> {
    if !(total_time > 0.0) || !total_time.is_finite() {
        return Err(Error::InvalidParameter(format!("T must be > 0, got {total_time}")));
    }
    if n_p == 0 {
        return Err(Error::InvalidParameter("N_p must be ≥ 1".into()));
    }
    if !(c != 0.0 && c.is_finite() && x_perp.is_finite()) {
        return Err(Error::InvalidParameter("c must be finite and nonzero, ⟨X⟩⊥ finite".into()));
    }
    let spread = x_perp * x_perp + 1.0 / n_p as f64;
    let epsilon_p = c * c / (total_time * total_time) * spread.sqrt();
    let n_c = total_time.powi(4) / (c.powi(4) * spread);
    if (epsilon_p * epsilon_p * n_c - 1.0).abs() > 1e-12 {
        return Err(Error::Numeric(format!("ε_p²·N_c = {} differs from 1", epsilon_p * epsilon_p * n_c)));
    }
    Ok(EnsembleComparison { c, total_time, x_perp, n_p, epsilon_p, n_c })
}

/// Read out a protective run's final pointer with repeated weak measurements:
/// the pointer mean and variance seed the signal distribution.
pub fn readout_bridge(run: &ProtectiveRunResult, var_m: f64, k: usize, seed: u64) -> Result<QndTrace> {
    let params = QndParams {
        n0: run.pointer_after,
        var0: run.apparatus_width_after.powi(2),
        var_m,
        k,
    };
    simulate_qnd_sequence(params, seed)
}
