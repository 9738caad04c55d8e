use std::io::Write;
use std::path::Path;

use protectsim::evolve::EvolutionSettings;
use protectsim::models::ScenarioSpec;
use protectsim::protect::{
    initial_spreading, repeated_measurement_series, run_protective, scan_t, spreading_report, validate_scan_times,
    ProtectiveRunResult, SpreadingReport,
};
use protectsim::qnd::{ensemble_comparison, estimator_stats, simulate_traces, QndParams};
use protectsim::ScenarioF64;
use serde::Serialize;

use crate::config::{
    load_config, parse_times, resolve_profile, resolve_scenario, EnsembleConfig, Format, ProtocolConfig, QndConfig,
};
use crate::{CliError, EnsembleArgs, ProtocolArgs, QndArgs, SeriesArgs};

const SCHEMA: &str = "v1";

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    schema: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a C,
    result: &'a R,
}

fn json_document<C: Serialize, R: Serialize>(command: &str, seed: u64, config: &C, result: &R) -> Result<Vec<u8>, CliError> {
    let doc = Document { schema: SCHEMA, command, seed, config, result };
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(CliError::config)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// CSV preceded by `#` comment lines carrying the schema, config and extras.
fn csv_document<C: Serialize>(
    command: &str,
    config: &C,
    extras: &[(&str, String)],
    table: impl FnOnce(&mut Vec<u8>) -> protectsim::Result<()>,
) -> Result<Vec<u8>, CliError> {
    let mut bytes = Vec::new();
    writeln!(bytes, "# schema: {SCHEMA}").map_err(CliError::config)?;
    writeln!(bytes, "# command: {command}").map_err(CliError::config)?;
    let cfg = serde_json::to_string(config).map_err(CliError::config)?;
    writeln!(bytes, "# config: {cfg}").map_err(CliError::config)?;
    for (k, v) in extras {
        writeln!(bytes, "# {k}: {v}").map_err(CliError::config)?;
    }
    table(&mut bytes)?;
    Ok(bytes)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::config(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(bytes).map_err(CliError::config),
    }
}

fn resolve_protocol(
    a: &ProtocolArgs,
    default_times: Option<&str>,
    series: Option<(usize, usize)>,
) -> Result<ProtocolConfig, CliError> {
    if let Some(path) = &a.output.config {
        return load_config(path);
    }
    let scenario = resolve_scenario(&a.scenario)?;
    let (profile, slices) = resolve_profile(&a.profile)?;
    let times = match (&a.times, default_times) {
        (Some(list), _) => parse_times(list)?,
        (None, Some(d)) => parse_times(d)?,
        (None, None) => return Err(CliError::config("--T is required")),
    };
    Ok(ProtocolConfig {
        scenario,
        profile,
        times,
        slices,
        seed: a.output.seed,
        format: a.output.format,
        shots: series.map(|s| s.0),
        bin_cells: series.map(|s| s.1),
    })
}

fn single_time(cfg: &ProtocolConfig) -> Result<f64, CliError> {
    match cfg.times.as_slice() {
        [t] => Ok(*t),
        _ => Err(CliError::config("this command takes a single T value")),
    }
}

fn build(spec: &ScenarioSpec) -> Result<ScenarioF64, CliError> {
    Ok(spec.build::<f64>()?)
}

fn run_row(r: &ProtectiveRunResult) -> Vec<String> {
    vec![
        r.scenario.clone(),
        r.total_time.to_string(),
        r.slices.to_string(),
        r.pointer_before.to_string(),
        r.pointer_after.to_string(),
        r.pointer_shift.to_string(),
        r.system_fidelity.to_string(),
        r.orthogonal_probability.to_string(),
        r.apparatus_width_before.to_string(),
        r.apparatus_width_after.to_string(),
        r.predicted_shift.map(|p| p.to_string()).unwrap_or_default(),
    ]
}

const RUN_HEADER: [&str; 11] = [
    "scenario",
    "T",
    "N",
    "pointer_before",
    "pointer_after",
    "pointer_shift",
    "system_fidelity",
    "orthogonal_probability",
    "width_before",
    "width_after",
    "predicted_shift",
];

pub fn run(a: &ProtocolArgs) -> Result<(), CliError> {
    let cfg = resolve_protocol(a, Some("200"), None)?;
    let t = single_time(&cfg)?;
    let profile = cfg.profile.at(t)?;
    let s = build(&cfg.scenario)?;
    let result = run_protective(&s, &profile, &EvolutionSettings::new(cfg.slices.slices(t)))?;
    let bytes = match cfg.format {
        Format::Json => json_document("run", cfg.seed, &cfg, &result)?,
        Format::Csv => csv_document("run", &cfg, &[], |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(RUN_HEADER)?;
            w.write_record(run_row(&result))?;
            w.flush()?;
            Ok(())
        })?,
    };
    emit(a.output.out.as_deref(), &bytes)
}

pub fn scan(a: &ProtocolArgs) -> Result<(), CliError> {
    let cfg = resolve_protocol(a, None, None)?;
    if cfg.times.len() < 4 {
        return Err(CliError::config(format!("need ≥ 4 T values, got {}", cfg.times.len())));
    }
    validate_scan_times(&cfg.times).map_err(CliError::config)?;
    let template = cfg.profile.at(1.0)?;
    let s = build(&cfg.scenario)?;
    let result = scan_t(&s, &cfg.times, &template, cfg.slices)?;
    let bytes = match cfg.format {
        Format::Json => json_document("scan", cfg.seed, &cfg, &result)?,
        Format::Csv => {
            let fit = serde_json::to_string(&result.fit).map_err(CliError::config)?;
            let shift_fit = serde_json::to_string(&result.shift_error_fit).map_err(CliError::config)?;
            csv_document("scan", &cfg, &[("fit", fit), ("shift_error_fit", shift_fit)], |out| result.write_csv(out))?
        }
    };
    emit(a.output.out.as_deref(), &bytes)
}

pub fn spread(a: &ProtocolArgs) -> Result<(), CliError> {
    let cfg = resolve_protocol(a, Some("2"), None)?;
    let s = build(&cfg.scenario)?;
    let mut reports: Vec<SpreadingReport> = vec![initial_spreading(&s)?];
    for &t in &cfg.times {
        let profile = cfg.profile.at(t)?;
        reports.push(spreading_report(&s, &profile, &EvolutionSettings::new(cfg.slices.slices(t)))?);
    }
    let bytes = match cfg.format {
        Format::Json => json_document("spread", cfg.seed, &cfg, &reports)?,
        Format::Csv => csv_document("spread", &cfg, &[], |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["T", "measured_variance", "predicted_variance", "relative_error"])?;
            for r in &reports {
                w.write_record([
                    r.total_time.to_string(),
                    r.measured_variance.to_string(),
                    r.predicted_variance.to_string(),
                    r.relative_error().to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?,
    };
    emit(a.output.out.as_deref(), &bytes)
}

pub fn series(a: &SeriesArgs) -> Result<(), CliError> {
    let cfg = resolve_protocol(&a.protocol, Some("200"), Some((a.shots, a.bin_cells)))?;
    let t = single_time(&cfg)?;
    let (shots, bins) = match (cfg.shots, cfg.bin_cells) {
        (Some(s), Some(b)) => (s, b),
        _ => return Err(CliError::config("series config needs `shots` and `bin_cells`")),
    };
    if shots == 0 || bins == 0 {
        return Err(CliError::config("--shots and --bin-cells must be ≥ 1"));
    }
    let profile = cfg.profile.at(t)?;
    let s = build(&cfg.scenario)?;
    let result =
        repeated_measurement_series(&s, shots, &profile, &EvolutionSettings::new(cfg.slices.slices(t)), cfg.seed, bins)?;
    let bytes = match cfg.format {
        Format::Json => json_document("series", cfg.seed, &cfg, &result)?,
        Format::Csv => csv_document("series", &cfg, &[("seed", cfg.seed.to_string())], |out| result.write_csv(out))?,
    };
    emit(a.protocol.output.out.as_deref(), &bytes)
}

fn resolve_qnd(a: &QndArgs) -> Result<QndConfig, CliError> {
    if let Some(path) = &a.output.config {
        return load_config(path);
    }
    Ok(QndConfig {
        n0: a.n0,
        var0: a.var0,
        varm: a.varm,
        k: a.k,
        traces: a.traces,
        seed: a.output.seed,
        alpha: a.alpha,
        format: a.output.format,
    })
}

pub fn qnd(a: &QndArgs) -> Result<(), CliError> {
    let cfg = resolve_qnd(a)?;
    let params = QndParams { n0: cfg.n0, var0: cfg.var0, var_m: cfg.varm, k: cfg.k };
    params.validate().map_err(CliError::config)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(CliError::config("--alpha must lie in (0, 1)"));
    }
    let traces = simulate_traces(params, cfg.traces, cfg.seed)?;
    let summary = estimator_stats(&traces, cfg.alpha).map_err(|e| match e {
        protectsim::Error::InsufficientData { .. } => CliError::config(e),
        e => e.into(),
    })?;
    let bytes = match cfg.format {
        Format::Json => json_document("qnd", cfg.seed, &cfg, &summary)?,
        Format::Csv => {
            let sum = serde_json::to_string(&summary).map_err(CliError::config)?;
            csv_document("qnd", &cfg, &[("summary", sum)], |out| {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(["trace", "seed", "mean", "spread", "s_statistic", "posterior_mean", "posterior_variance"])?;
                for (i, t) in traces.iter().enumerate() {
                    let p = t.final_posterior();
                    w.write_record([
                        i.to_string(),
                        t.seed.to_string(),
                        t.mean.to_string(),
                        t.spread.to_string(),
                        t.s_statistic.to_string(),
                        p.mean.to_string(),
                        p.variance.to_string(),
                    ])?;
                }
                w.flush()?;
                Ok(())
            })?
        }
    };
    emit(a.output.out.as_deref(), &bytes)
}

pub fn ensemble(a: &EnsembleArgs) -> Result<(), CliError> {
    let cfg = match &a.output.config {
        Some(path) => load_config::<EnsembleConfig>(path)?,
        None => EnsembleConfig {
            c: a.c.unwrap_or_default(),
            total_time: a.total_time.unwrap_or_default(),
            x_perp: a.x_perp.unwrap_or_default(),
            n_p: a.n_p.unwrap_or_default(),
            format: a.output.format,
        },
    };
    let result = ensemble_comparison(cfg.c, cfg.total_time, cfg.x_perp, cfg.n_p).map_err(|e| match e {
        protectsim::Error::InvalidParameter(_) => CliError::config(e),
        e => e.into(),
    })?;
    let bytes = match cfg.format {
        Format::Json => json_document("qnd-ensemble", 0, &cfg, &result)?,
        Format::Csv => csv_document("qnd-ensemble", &cfg, &[], |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["c", "T", "x_perp", "n_p", "epsilon_p", "n_c"])?;
            w.write_record([
                result.c.to_string(),
                result.total_time.to_string(),
                result.x_perp.to_string(),
                result.n_p.to_string(),
                result.epsilon_p.to_string(),
                result.n_c.to_string(),
            ])?;
            w.flush()?;
            Ok(())
        })?,
    };
    emit(a.output.out.as_deref(), &bytes)
}

