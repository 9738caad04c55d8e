//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_PI_3, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use protectsim::evolve::{CouplingProfile, EvolutionSettings, Propagator, RampShape};
use protectsim::models::{defaults, ScenarioSpec, SpinFieldParams};
use protectsim::protect::{run_protective, scan_t, spreading_report, SliceRule};
use protectsim::qcore::{
    hermiticity_defect, matrix_exponential_apply, partial_trace, BasisKind, CompositeSpace, Eigensystem,
    HermitianOperator, HilbertFactor, QuantumState,
};
use protectsim::qnd::{ensemble_comparison, estimator_stats, simulate_traces, QndParams};
use protectsim::stats::PowerLawFit;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(elapsed: Duration, budget: Duration, detail: String) -> Outcome {
    check(elapsed < budget, format!("{detail}; {:.2}s (budget {}s)", elapsed.as_secs_f64(), budget.as_secs()))
}

/// Exact AAV evolution with constant coupling `1/T`: at every grid point the
/// spin sees the static field `b(x) = μ(B₀ñ + (x/T)B_i n)` and precesses.
fn aav_oracle(spin: &SpinFieldParams, width: f64, extent: f64, points: usize, total_time: f64) -> (DVector<Complex<f64>>, f64) {
    let dx = extent / points as f64;
    let xs: Vec<f64> = (0..points).map(|j| -extent / 2.0 + j as f64 * dx).collect();
    let env: Vec<f64> = xs.iter().map(|x| (-x * x / (2.0 * width * width)).exp()).collect();
    let norm = env.iter().map(|e| e * e).sum::<f64>().sqrt();
    let mut psi = DVector::zeros(2 * points);
    for (j, x) in xs.iter().enumerate() {
        let b: Vec<f64> = (0..3)
            .map(|c| spin.mu * (spin.b0 * spin.n_tilde[c] + x / total_time * spin.b_i * spin.n[c]))
            .collect();
        let mag = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        let (c, s) = ((mag * total_time).cos(), (mag * total_time).sin());
        let u = [b[0] / mag, b[1] / mag, b[2] / mag];
        // exp(i |b| T b̂·σ) applied to |↑⟩
        let up = Complex::new(c, s * u[2]);
        let down = Complex::new(0.0, s) * Complex::new(u[0], u[1]);
        psi[2 * j] = up * env[j] / norm;
        psi[2 * j + 1] = down * env[j] / norm;
    }
    let mut mean_p = 0.0;
    for m in 0..points {
        let k = (m as f64 - points as f64 / 2.0) * 2.0 * PI / extent;
        for spin_index in 0..2 {
            let amp: Complex<f64> = (0..points)
                .map(|j| Complex::from_polar(1.0, -k * xs[j]) * psi[2 * j + spin_index])
                .sum::<Complex<f64>>()
                / (points as f64).sqrt();
            mean_p += k * amp.norm_sqr();
        }
    }
    (psi, mean_p)
}

fn criterion_1() -> Outcome {
    let spin = SpinFieldParams::in_plane(1.0, 1.0, 0.1, FRAC_PI_3);
    let packet = defaults::aav_packet();
    let s = ScenarioSpec::Aav { spin: spin.clone(), packet }.build::<f64>().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let profile = CouplingProfile::rectangular(200.0).unwrap();
    let settings = EvolutionSettings::new(4096);
    let run = run_protective(&s, &profile, &settings).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let traj = Propagator::new(&s).propagate_from(&s.initial, &profile, &settings).map_err(|e| e.to_string())?;
    let (exact, exact_p) = aav_oracle(&spin, packet.width, packet.extent, packet.points, 200.0);
    let state_err = (traj.final_state().amplitudes() - &exact).camax();
    let shift_err = (run.pointer_shift - 0.05).abs();
    let ok = shift_err <= 1e-3 && state_err < 1e-10 && (run.pointer_shift - exact_p).abs() < 1e-10;
    let detail = format!(
        "pointer_shift = {:.6} (|Δ| = {shift_err:.2e} ≤ 1e-3); oracle shift {exact_p:.6}, max amplitude error {state_err:.1e}",
        run.pointer_shift
    );
    if !ok {
        return Err(detail);
    }
    within_budget(elapsed, Duration::from_secs(30), detail)
}

const PROTECTION_TS: [f64; 5] = [25.0, 50.0, 100.0, 200.0, 400.0];

fn criterion_2() -> Outcome {
    let s = defaults::aav().build::<f64>().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let scan = scan_t(&s, &PROTECTION_TS, &CouplingProfile::rectangular(1.0).unwrap(), SliceRule::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let fit = scan.fit.ok_or("orthogonal probability not positive at every T")?;
    let detail = format!("exponent {:.3} ± {:.3} (target −2.0 ± 0.2)", fit.exponent, fit.exponent_stderr);
    if (fit.exponent + 2.0).abs() > 0.2 {
        return Err(detail);
    }
    within_budget(elapsed, Duration::from_secs(180), detail)
}

fn criterion_3() -> Outcome {
    let spec = defaults::degenerate_osc();
    let ScenarioSpec::DegenerateOsc { apparatus, system, .. } = &spec else { unreachable!() };
    // coupling strength in the degenerate one-quantum subspace
    let lambda = 1.0 / (2.0 * apparatus.frequency * (apparatus.mass * system.mass).sqrt());
    let expected = lambda.sin().powi(2);
    let s = spec.build::<f64>().map_err(|e| e.to_string())?;
    let ts = [20.0, 40.0, 80.0, 200.0];
    let scan = scan_t(&s, &ts, &CouplingProfile::rectangular(1.0).unwrap(), SliceRule::default())
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for r in scan.runs.iter().filter(|r| r.total_time <= 80.0) {
        worst = worst.max((r.orthogonal_probability - expected).abs());
        values.push(format!("{:.5}", r.orthogonal_probability));
    }
    let fit = scan.fit.ok_or("orthogonal probability vanished")?;
    check(
        worst <= 1e-3 && fit.exponent.abs() <= 0.05,
        format!(
            "p⊥ at T=20,40,80: [{}] vs sin²({lambda}) = {expected:.5} (max |Δ| {worst:.1e} ≤ 1e-3); exponent {:.4} (|b| ≤ 0.05)",
            values.join(", "),
            fit.exponent
        ),
    )
}

fn ramp_infidelity(s: &protectsim::ScenarioF64, t: f64) -> Result<f64, String> {
    let mut prop = Propagator::new(s);
    let rect = prop
        .propagate_from(&s.initial, &CouplingProfile::rectangular(t).unwrap(), &EvolutionSettings::new(1))
        .map_err(|e| e.to_string())?;
    let ramp_profile = CouplingProfile::smooth_ramp(t, 0.1, RampShape::SineSquared).unwrap();
    let ramp = prop
        .propagate_from(&s.initial, &ramp_profile, &EvolutionSettings::new((20.0 * t).ceil() as usize))
        .map_err(|e| e.to_string())?;
    Ok(1.0 - rect.final_state().fidelity(ramp.final_state()).map_err(|e| e.to_string())?)
}

fn criterion_4() -> Outcome {
    let s = defaults::aav().build::<f64>().map_err(|e| e.to_string())?;
    let at_200 = ramp_infidelity(&s, 200.0)?;
    let bound = 10.0 / 200.0f64.powi(2);
    // eleven log-spaced durations over the decade [40, 400]
    let ts: Vec<f64> = (0..=10).map(|i| 40.0 * 10f64.powf(i as f64 / 10.0)).collect();
    let ys = ts.iter().map(|&t| ramp_infidelity(&s, t)).collect::<Result<Vec<_>, _>>()?;
    let fit = PowerLawFit::fit(&ts, &ys).map_err(|e| e.to_string())?;
    check(
        at_200 < bound && (fit.exponent + 2.0).abs() <= 0.3,
        format!(
            "1 − F(T=200) = {at_200:.2e} < 10/T² = {bound:.2e}; slope over T∈[40,400] {:.3} ± {:.3} (target −2 ± 0.3)",
            fit.exponent, fit.exponent_stderr
        ),
    )
}

fn criterion_5() -> Outcome {
    let profile = CouplingProfile::rectangular(2.0).unwrap();
    let settings = EvolutionSettings::new(64);
    let ScenarioSpec::MomentumCoupled { spin, packet, mass } = defaults::momentum_coupled() else { unreachable!() };
    let mut variances = Vec::new();
    for theta in [0.0, FRAC_PI_3, PI / 2.0, 2.0 * PI / 3.0, PI] {
        let spin = SpinFieldParams::in_plane(spin.mu, spin.b0, spin.b_i, theta);
        let s = ScenarioSpec::MomentumCoupled { spin, packet, mass }.build::<f64>().map_err(|e| e.to_string())?;
        variances.push(spreading_report(&s, &profile, &settings).map_err(|e| e.to_string())?);
    }
    let reference = variances[1];
    let widths: Vec<f64> = variances.iter().map(|r| r.measured_variance.sqrt()).collect();
    let spread = widths.iter().cloned().fold(f64::MIN, f64::max) - widths.iter().cloned().fold(f64::MAX, f64::min);
    check(
        reference.relative_error() < 0.02 && spread < 1e-6,
        format!(
            "variance {:.6} vs predicted {:.6} (rel {:.1e} < 2%); width spread over spin directions {spread:.1e} < 1e-6",
            reference.measured_variance,
            reference.predicted_variance,
            reference.relative_error()
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let params = QndParams { n0: 5.0, var0: 4.0, var_m: 1.0, k: 10 };
    let traces = simulate_traces(params, 10_000, 20_240).map_err(|e| e.to_string())?;
    let closed = 1.0 / (1.0 / params.var0 + params.k as f64 / params.var_m);
    let recursion_err = traces
        .iter()
        .map(|t| (t.final_posterior().variance - closed).abs())
        .fold(0.0, f64::max);
    let summary = estimator_stats(&traces, 0.01).map_err(|e| e.to_string())?;
    let var_rel = (summary.variance_of_mean / (params.var0 + params.var_m / params.k as f64) - 1.0).abs();
    let ks = summary.s_ks.ok_or("no KS result")?;
    let mut spread_rel: f64 = 0.0;
    for (i, var0) in [1.0, 4.0, 16.0].into_iter().enumerate() {
        let p = QndParams { var0, ..params };
        let ts = simulate_traces(p, 10_000, 7_000 + 100_000 * i as u64).map_err(|e| e.to_string())?;
        let s = estimator_stats(&ts, 0.01).map_err(|e| e.to_string())?;
        spread_rel = spread_rel.max((s.mean_of_spread / p.var_m - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "(a) |Δ_k² − closed form| {recursion_err:.1e} ≤ 1e-12; (b) Var(n̄) rel err {:.2}% ≤ 5%; \
         (c) KS p = {:.3} > 0.01; (d) max rel err of mean Δn² {:.2}% ≤ 5%",
        100.0 * var_rel,
        ks.p_value,
        100.0 * spread_rel
    );
    if !(recursion_err <= 1e-12 && var_rel <= 0.05 && ks.p_value > 0.01 && spread_rel <= 0.05) {
        return Err(detail);
    }
    within_budget(elapsed, Duration::from_secs(60), detail)
}

fn criterion_7() -> Outcome {
    let e = ensemble_comparison(1.0, 10.0, 1.0, 100).map_err(|e| e.to_string())?;
    let eps_expected = 1e-2 * (1.01f64).sqrt();
    let nc_expected = 1e4 / 1.01;
    let eps_rel = (e.epsilon_p / 0.0100499 - 1.0).abs();
    let nc_rel = (e.n_c / 9900.99 - 1.0).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c = rng.gen_range(0.01..10.0);
        let t = rng.gen_range(0.1..1e3);
        let x = rng.gen_range(-5.0..5.0);
        let np = rng.gen_range(1..100_000u64);
        let r = ensemble_comparison(c, t, x, np).map_err(|e| e.to_string())?;
        worst = worst.max((r.epsilon_p * r.epsilon_p * r.n_c - 1.0).abs());
    }
    check(
        eps_rel < 1e-4 && nc_rel < 1e-4 && worst <= 1e-12 && (e.epsilon_p - eps_expected).abs() < 1e-15,
        format!(
            "ε_p = {:.7} (rel {eps_rel:.1e}), N_c = {:.2} (rel {nc_rel:.1e}, exact {nc_expected:.4}); max |ε_p²N_c − 1| = {worst:.1e}",
            e.epsilon_p, e.n_c
        ),
    )
}

fn random_hermitian(dim: usize, raw: &[f64]) -> DMatrix<Complex<f64>> {
    let m = DMatrix::from_fn(dim, dim, |i, j| Complex::new(raw[2 * (i * dim + j)], raw[2 * (i * dim + j) + 1]));
    (&m + m.adjoint()) * Complex::new(0.5, 0.0)
}

fn random_vector(dim: usize, raw: &[f64]) -> DVector<Complex<f64>> {
    let v = DVector::from_fn(dim, |i, _| Complex::new(raw[2 * i], raw[2 * i + 1]));
    if v.norm() < 1e-3 {
        let mut e = DVector::zeros(dim);
        e[0] = Complex::new(1.0, 0.0);
        return e;
    }
    v
}

fn two_factor_space(da: usize, ds: usize) -> CompositeSpace {
    CompositeSpace::new(vec![
        HilbertFactor::new("apparatus", da, BasisKind::Fock).unwrap(),
        HilbertFactor::new("system", ds, BasisKind::Spin).unwrap(),
    ])
    .unwrap()
}

fn dims_and_data() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>, f64)> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(da, ds)| {
        let n = da * ds;
        (
            Just(da),
            Just(ds),
            proptest::collection::vec(-5.0f64..5.0, 2 * n * n),
            proptest::collection::vec(-1.0f64..1.0, 2 * n),
            -10.0f64..10.0,
        )
    })
}

const PROPERTY_CASES: u32 = 1000;

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<String, String> {
    let mut runner = TestRunner::new(Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map(|_| format!("{name} {PROPERTY_CASES}/{PROPERTY_CASES}")).map_err(|e| format!("{name}: {e}"))
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    lines.push(run_property("unitarity", dims_and_data(), |(da, ds, h, v, t)| {
        let space = two_factor_space(da, ds);
        let op = HermitianOperator::new(space.clone(), random_hermitian(da * ds, &h), "H").unwrap();
        let psi = QuantumState::new(space, random_vector(da * ds, &v)).unwrap();
        let out = matrix_exponential_apply(&op, t, &psi).unwrap();
        prop_assert!((out.norm() - 1.0).abs() <= 1e-12, "norm {}", out.norm());
        Ok(())
    })?);
    lines.push(run_property("hermiticity closure", dims_and_data(), |(da, ds, h, v, t)| {
        let space = two_factor_space(da, ds);
        let a_space = space.subspace("apparatus").unwrap();
        let s_space = space.subspace("system").unwrap();
        let a = HermitianOperator::new(a_space, random_hermitian(da, &h), "A").unwrap();
        let s = HermitianOperator::new(s_space, random_hermitian(ds, &h[h.len() - 2 * ds * ds..]), "S").unwrap();
        let full = HermitianOperator::new(space.clone(), random_hermitian(da * ds, &h), "F").unwrap();
        let combo = a
            .embed(&space)
            .unwrap()
            .add(&s.embed(&space).unwrap())
            .unwrap()
            .scale(t)
            .add(&full.scale(v[0]))
            .unwrap();
        let scale = combo.matrix().camax().max(1.0);
        prop_assert!(hermiticity_defect(combo.matrix()) <= 1e-12 * scale);
        Ok(())
    })?);
    lines.push(run_property("spectral reconstruction", dims_and_data(), |(da, ds, h, _, _)| {
        let m = random_hermitian(da * ds, &h);
        let eig = Eigensystem::of_matrix(&m).unwrap();
        let err = (eig.reconstruct() - &m).camax();
        prop_assert!(err <= 1e-9 * m.norm().max(1e-300), "err {err}");
        Ok(())
    })?);
    lines.push(run_property("partial-trace purity", dims_and_data(), |(da, ds, _, v, _)| {
        let a = QuantumState::new(
            CompositeSpace::single(HilbertFactor::new("apparatus", da, BasisKind::Fock).unwrap()),
            random_vector(da, &v),
        )
        .unwrap();
        let s = QuantumState::new(
            CompositeSpace::single(HilbertFactor::new("system", ds, BasisKind::Spin).unwrap()),
            random_vector(ds, &v[v.len() - 2 * ds..]),
        )
        .unwrap();
        let product = a.tensor(&s).unwrap();
        for keep in ["apparatus", "system"] {
            let p = partial_trace(&product, keep).unwrap().purity();
            prop_assert!((p - 1.0).abs() <= 1e-10, "{keep} purity {p}");
        }
        Ok(())
    })?);
    Ok(lines.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("pointer-shift correctness", criterion_1),
        ("protection scaling", criterion_2),
        ("degeneracy counterexample", criterion_3),
        ("ramp invariance", criterion_4),
        ("spreading formula", criterion_5),
        ("QND statistics", criterion_6),
        ("ensemble formulas", criterion_7),
        ("core-algebra properties", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {} ({name}): PASS [{secs:.1}s] {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.1}s] {d}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
