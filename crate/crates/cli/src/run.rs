//! Mode dispatch. Every sweep point is an independent job on a rayon pool
//! of `workers` threads; results are gathered in sweep order and written
//! under names derived from the sweep index, so output bytes do not depend
//! on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use rayon::prelude::*;

use kicked_kerr::analysis::decay::{auto_window, fit_decay, DecayFit};
use kicked_kerr::analysis::lyapunov::{
    classify_dynamics, classify_dynamics_trend, estimate_lyapunov, length_doubling_estimates,
    DynamicsClass, LyapunovEstimate,
};
use kicked_kerr::analysis::spectrum::{power_spectrum, spectral_entropy_with, spectral_peaks};
use kicked_kerr::analysis::sweep::{common_window, entropy_vs_epsilon, SpectralWindow};
use kicked_kerr::classical::{
    bifurcation_scan, classify_samples, window_boundaries, BifurcationConfig,
};
use kicked_kerr::io::{self as kio, fmt_f64};
use kicked_kerr::{
    run_trajectory_with, SystemParams, TimeSeries, TrajectoryOptions, TrajectoryRecord,
};

use crate::config::{Format, Mode, RunConfig, SeriesKind, SweepParam};
use crate::error::{usage, CliError};
use crate::manifest::{self, FileEntry, RunEntry, RunManifest, RunStatus, SystemEcho};
use crate::table::Table;

type Meta = Vec<(String, String)>;

struct Output {
    stem: String,
    csv: Vec<u8>,
}

struct PointOutcome {
    entry: RunEntry,
    outputs: Vec<Output>,
    /// One summary row for modes that tabulate per-point results.
    summary: Option<String>,
}

fn echo(config: &RunConfig, p: &SystemParams) -> SystemEcho {
    SystemEcho {
        chi: p.chi,
        period: p.period,
        epsilon: p.epsilon,
        delta_eps: p.delta_epsilon,
        dim: p.dim,
        buffer: p.buffer,
        kicks: p.kicks,
        stride: config.stride,
    }
}

fn stem(config: &RunConfig, index: usize) -> String {
    match &config.sweep {
        None => config.mode.as_str().to_string(),
        Some(s) => format!("{}_{}_{index:04}", config.mode.as_str(), s.param.as_str()),
    }
}

fn sweep_param(config: &RunConfig) -> SweepParam {
    config
        .sweep
        .as_ref()
        .map_or(SweepParam::Epsilon, |s| s.param)
}

fn sweep_meta(config: &RunConfig, value: Option<f64>) -> Meta {
    match (&config.sweep, value) {
        (Some(s), Some(v)) => vec![(
            "sweep".into(),
            format!("{}={}", s.param.as_str(), fmt_f64(v)),
        )],
        _ => Vec::new(),
    }
}

fn trajectory(config: &RunConfig, p: &SystemParams) -> kicked_kerr::Result<TrajectoryRecord> {
    let options = TrajectoryOptions {
        stride: config.stride,
        leak_tolerance: config.leak_tolerance,
    };
    run_trajectory_with(p, &options)
}

fn pick(record: &TrajectoryRecord, kind: SeriesKind) -> &TimeSeries {
    match kind {
        SeriesKind::Fidelity => &record.fidelity,
        SeriesKind::FidelityN => &record.f_n,
        SeriesKind::MeanPhotons => &record.mean_photons_u,
    }
}

fn truncation_status(record: &TrajectoryRecord) -> (RunStatus, Option<String>) {
    match record.first_unsafe_kick {
        None => (RunStatus::Ok, None),
        Some(k) => (
            RunStatus::TruncationUnsafe,
            Some(format!(
                "Fock-space tail population exceeded {} at kick {k} (max {:.3e}); increase --dim",
                record.options.leak_tolerance, record.leak_max
            )),
        ),
    }
}

fn csv_with(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn run_point(
    config: &RunConfig,
    index: usize,
    value: Option<f64>,
    p: &SystemParams,
) -> PointOutcome {
    let started = Instant::now();
    let key = stem(config, index);
    let mut entry = RunEntry {
        key: key.clone(),
        sweep_value: value,
        system: echo(config, p),
        status: RunStatus::Ok,
        message: None,
        file: None,
        elapsed_ms: 0,
    };
    let result = point_job(config, value, p, &key);
    entry.elapsed_ms = started.elapsed().as_millis();
    match result {
        Ok((status, message, outputs, summary)) => {
            entry.status = status;
            entry.message = message;
            PointOutcome {
                entry,
                outputs,
                summary,
            }
        }
        Err(e) => {
            entry.status = RunStatus::Failed;
            entry.message = Some(e.to_string());
            PointOutcome {
                entry,
                outputs: Vec::new(),
                summary: None,
            }
        }
    }
}

type JobResult = (RunStatus, Option<String>, Vec<Output>, Option<String>);

fn point_job(
    config: &RunConfig,
    value: Option<f64>,
    p: &SystemParams,
    key: &str,
) -> kicked_kerr::Result<JobResult> {
    let a = &config.analysis;
    let record = trajectory(config, p)?;
    let (status, message) = truncation_status(&record);
    let extra = sweep_meta(config, value);
    let x = value.unwrap_or_else(|| sweep_param(config).get(p));
    let (csv, summary) = match config.mode {
        Mode::Trajectory => (
            csv_with(|w| kio::write_trajectory(w, &record, &extra)),
            None,
        ),
        Mode::Lyapunov => {
            let series = pick(&record, a.series);
            let skip = a.skip.unwrap_or(p.kicks / 10);
            let tail = series.tail(series.index_at(skip));
            let (est, class) = lyapunov_with_trend(&tail, config)?;
            let mut meta = extra.clone();
            meta.push(("series".into(), a.series.as_str().into()));
            meta.push(("skip".into(), skip.to_string()));
            meta.push(("class".into(), class.as_str().into()));
            let csv = csv_with(|w| kio::write_lyapunov(w, &est, &a.lyapunov, &meta));
            let row = format!(
                "{},{},{},{},{},{}",
                fmt_f64(x),
                fmt_f64(est.lambda_max),
                fmt_f64(est.r_squared),
                est.references_used,
                est.delay,
                class.as_str()
            );
            (csv, Some(row))
        }
        Mode::DecayFit => {
            let series = pick(&record, a.series);
            let fit = decay_fit(series, config)?;
            let csv = csv_with(|w| kio::write_decay(w, series, &fit, &extra));
            let row = format!(
                "{},{},{},{},{},{}",
                fmt_f64(x),
                fmt_f64(fit.rate()),
                fmt_f64(fit.r_squared),
                series.kick_at(fit.window.start),
                series.kick_at(fit.window.end - 1),
                fit.regime.as_str()
            );
            (csv, Some(row))
        }
        Mode::Spectrum => {
            let series = pick(&record, a.series);
            let window = SpectralWindow {
                t_min: Some(a.t_min.unwrap_or(0)),
                t_max: a.t_max,
                entropy: a.entropy,
            };
            let (t_min, t_max) = common_window(&[series], &window)?;
            let part = series.window(
                series.index_at(t_min),
                series.index_at(t_max + 1).min(series.len()),
            )?;
            let spec = power_spectrum(&part)?;
            let entropy = spectral_entropy_with(&spec, &a.entropy)?;
            let mut meta = extra.clone();
            meta.push(("series".into(), a.series.as_str().into()));
            meta.push(("entropy".into(), fmt_f64(entropy.entropy)));
            meta.push(("log_base".into(), a.entropy.log_base.to_string()));
            meta.push(("include_dc".into(), a.entropy.include_dc.to_string()));
            for peak in spectral_peaks(&spec, a.peak_min_relative, a.peak_min_separation) {
                meta.push((
                    "peak".into(),
                    format!(
                        "{},{},{}",
                        peak.bin,
                        fmt_f64(peak.omega),
                        fmt_f64(peak.relative_power)
                    ),
                ));
            }
            (csv_with(|w| kio::write_spectrum(w, &spec, &meta)), None)
        }
        Mode::Bifurcation | Mode::EntropySweep => unreachable!("handled as whole-sweep modes"),
    };
    Ok((
        status,
        message,
        vec![Output {
            stem: key.to_string(),
            csv,
        }],
        summary,
    ))
}

fn lyapunov_with_trend(
    series: &TimeSeries,
    config: &RunConfig,
) -> kicked_kerr::Result<(LyapunovEstimate, DynamicsClass)> {
    let a = &config.analysis;
    match length_doubling_estimates(series, &a.lyapunov) {
        Ok(mut ests) => {
            let class = classify_dynamics_trend(&ests, a.class_tol);
            Ok((ests.pop().expect("two estimates"), class))
        }
        // the half-length series may be too short on its own
        Err(_) => {
            let est = estimate_lyapunov(series, &a.lyapunov)?;
            let class = classify_dynamics(&est, a.class_tol);
            Ok((est, class))
        }
    }
}

fn decay_fit(series: &TimeSeries, config: &RunConfig) -> kicked_kerr::Result<DecayFit> {
    let a = &config.analysis;
    let window = match (a.window_start, a.window_end) {
        (None, None) => auto_window(series)?,
        (start, end) => {
            let auto = auto_window(series).ok();
            let lo = start.map_or_else(
                || auto.as_ref().map_or(0, |w| w.start),
                |k| series.index_at(k),
            );
            let hi = end.map_or_else(
                || auto.as_ref().map_or(series.len(), |w| w.end),
                |k| series.index_at(k + 1).min(series.len()),
            );
            lo..hi.max(lo)
        }
    };
    fit_decay(series, a.regime, window)
}

fn encode(config: &RunConfig, csv: &[u8]) -> Vec<u8> {
    match config.format {
        Format::Csv => csv.to_vec(),
        Format::Json => Table::parse_csv(std::str::from_utf8(csv).expect("utf-8 csv"))
            .to_json()
            .into_bytes(),
    }
}

fn write_output(config: &RunConfig, stem: &str, csv: &[u8]) -> Result<String, CliError> {
    let rel = format!("{stem}.{}", config.format.extension());
    manifest::write_atomic(&config.out.join(&rel), &encode(config, csv))?;
    Ok(rel)
}

fn summary_header(config: &RunConfig) -> Option<String> {
    let p = sweep_param(config).as_str();
    match config.mode {
        Mode::Lyapunov => Some(format!(
            "{p},lambda_max,r_squared,references_used,delay,class"
        )),
        Mode::DecayFit => Some(format!("{p},rate,r_squared,window_start,window_end,regime")),
        _ => None,
    }
}

fn run_points(config: &RunConfig) -> Result<(Vec<RunEntry>, Vec<String>), CliError> {
    let points = config.points();
    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .enumerate()
        .map(|(i, (v, p))| run_point(config, i, *v, p))
        .collect();
    let mut entries = Vec::with_capacity(outcomes.len());
    let mut files = Vec::new();
    let mut summary = String::new();
    for mut o in outcomes {
        for out in &o.outputs {
            let rel = write_output(config, &out.stem, &out.csv)?;
            o.entry.file = Some(rel.clone());
            files.push(rel);
        }
        if let Some(row) = &o.summary {
            summary.push_str(row);
            summary.push('\n');
        }
        entries.push(o.entry);
    }
    if let Some(header) = summary_header(config) {
        let mut csv = String::new();
        for (k, v) in config
            .canonical()
            .iter()
            .filter(|(k, _)| k.starts_with("analysis."))
        {
            let _ = writeln!(csv, "# {k}={v}");
        }
        let _ = writeln!(csv, "{header}");
        csv.push_str(&summary);
        files.push(write_output(
            config,
            &format!("{}_summary", config.mode.as_str()),
            csv.as_bytes(),
        )?);
    }
    Ok((entries, files))
}

fn run_entropy_sweep(config: &RunConfig) -> Result<(Vec<RunEntry>, Vec<String>), CliError> {
    match &config.sweep {
        Some(s) if s.param == SweepParam::Epsilon => {}
        _ => {
            return Err(usage(
                "entropy_sweep needs --sweep epsilon <start> <stop> <steps>",
            ))
        }
    }
    let a = &config.analysis;
    let points = config.points();
    let results: Vec<(RunEntry, Option<(f64, TimeSeries)>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, (v, p))| {
            let started = Instant::now();
            let mut entry = RunEntry {
                key: stem(config, i),
                sweep_value: *v,
                system: echo(config, p),
                status: RunStatus::Ok,
                message: None,
                file: None,
                elapsed_ms: 0,
            };
            let series = match trajectory(config, p) {
                Ok(rec) => {
                    let (status, message) = truncation_status(&rec);
                    entry.status = status;
                    entry.message = message;
                    Some((p.epsilon, pick(&rec, a.series).clone()))
                }
                Err(e) => {
                    entry.status = RunStatus::Failed;
                    entry.message = Some(e.to_string());
                    None
                }
            };
            entry.elapsed_ms = started.elapsed().as_millis();
            (entry, series)
        })
        .collect();
    let (mut entries, series): (Vec<RunEntry>, Vec<Option<(f64, TimeSeries)>>) =
        results.into_iter().unzip();
    let runs: Vec<(f64, TimeSeries)> = series.into_iter().flatten().collect();
    let window = SpectralWindow {
        t_min: a.t_min,
        t_max: a.t_max,
        entropy: a.entropy,
    };
    let pts = entropy_vs_epsilon(&runs, &window)?;
    let meta: Meta = vec![
        ("series".into(), a.series.as_str().into()),
        ("log_base".into(), a.entropy.log_base.to_string()),
        ("include_dc".into(), a.entropy.include_dc.to_string()),
        ("delta_eps".into(), fmt_f64(config.system.delta_epsilon)),
        ("kicks".into(), config.system.kicks.to_string()),
        ("dim".into(), config.system.dim.to_string()),
    ];
    let csv = csv_with(|w| kio::write_entropy_sweep(w, &pts, &meta));
    let rel = write_output(config, "entropy_sweep", &csv)?;
    for e in entries.iter_mut().filter(|e| e.status != RunStatus::Failed) {
        e.file = Some(rel.clone());
    }
    Ok((entries, vec![rel]))
}

fn run_bifurcation(config: &RunConfig) -> Result<(Vec<RunEntry>, Vec<String>), CliError> {
    let (start, stop, steps) = match &config.sweep {
        None => (0.0, 0.8, 801),
        Some(s) if s.param == SweepParam::Epsilon => (s.start, s.stop, s.steps),
        Some(_) => return Err(usage("bifurcation sweeps epsilon only")),
    };
    let a = &config.analysis;
    let started = Instant::now();
    let bc = BifurcationConfig {
        chi: config.system.chi,
        period: config.system.period,
        transient: a.transient,
        samples: a.samples,
    };
    let scan = bifurcation_scan(&bc, start, stop, steps)?;
    let classes: Vec<_> = scan
        .points
        .iter()
        .map(|p| (p.epsilon, classify_samples(p, &a.windows)))
        .collect();
    let bounds = window_boundaries(&scan, &a.windows);
    let meta: Meta = vec![
        ("max_period".into(), a.windows.max_period.to_string()),
        ("escape_energy".into(), fmt_f64(a.windows.escape_energy)),
        ("distinct_tol".into(), fmt_f64(a.windows.distinct_tol)),
    ];
    let scatter = write_output(
        config,
        "bifurcation",
        &csv_with(|w| kio::write_bifurcation(w, &scan, &[])),
    )?;
    let windows = write_output(
        config,
        "windows",
        &csv_with(|w| kio::write_windows(w, &classes, &bounds, &meta)),
    )?;
    let entry = RunEntry {
        key: "bifurcation".into(),
        sweep_value: None,
        system: echo(config, &config.system),
        status: RunStatus::Ok,
        message: Some(format!("{} boundaries", bounds.len())),
        file: Some(scatter.clone()),
        elapsed_ms: started.elapsed().as_millis(),
    };
    Ok((vec![entry], vec![scatter, windows]))
}

/// Runs the configured job and writes its outputs and manifest. An
/// identical earlier run with intact outputs is returned as is, marked
/// `reused`.
pub fn execute(config: &RunConfig) -> Result<RunManifest, CliError> {
    let hash = manifest::config_hash(config);
    fs::create_dir_all(&config.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", config.out.display())))?;
    if let Some(mut m) = manifest::find_complete(&config.out, &hash) {
        m.reused = true;
        return Ok(m);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let (runs, files) = pool.install(|| match config.mode {
        Mode::Bifurcation => run_bifurcation(config),
        Mode::EntropySweep => run_entropy_sweep(config),
        _ => run_points(config),
    })?;
    let files: Vec<FileEntry> = files
        .iter()
        .map(|f| manifest::file_entry(&config.out, f))
        .collect::<Result<_, _>>()?;
    let m = RunManifest {
        version: kicked_kerr::VERSION.to_string(),
        config_hash: hash,
        mode: config.mode.as_str().to_string(),
        config: config.canonical(),
        workers: config.workers,
        files,
        runs,
        wall_ms: started.elapsed().as_millis(),
        reused: false,
    };
    manifest::save(&config.out, &m)?;
    Ok(m)
}

/// Process exit code for a finished run.
pub fn exit_code(m: &RunManifest) -> i32 {
    if m.all_ok() {
        0
    } else {
        3
    }
}
