//! CSV serialization. Every file starts with `# key=value` metadata lines,
//! then a header row; floats carry 17 significant digits so that values
//! round-trip exactly.

use std::io::{self, Write};

use crate::analysis::decay::DecayFit;
use crate::analysis::lyapunov::{LyapunovConfig, LyapunovEstimate};
use crate::analysis::spectrum::PowerSpectrum;
use crate::analysis::sweep::EntropyPoint;
use crate::classical::{BifurcationScan, WindowClass};
use crate::evolution::TrajectoryRecord;
use crate::series::TimeSeries;

/// Round-trip float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_metadata<W: Write>(w: &mut W, meta: &[(String, String)]) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

fn params_meta(record: &TrajectoryRecord) -> Vec<(String, String)> {
    let p = &record.params;
    vec![
        ("chi".into(), fmt_f64(p.chi)),
        ("period".into(), fmt_f64(p.period)),
        ("epsilon".into(), fmt_f64(p.epsilon)),
        ("delta_eps".into(), fmt_f64(p.delta_epsilon)),
        ("dim".into(), p.dim.to_string()),
        ("buffer".into(), p.buffer.to_string()),
        ("kicks".into(), p.kicks.to_string()),
        ("kerr".into(), p.kerr.as_str().into()),
        ("kick_basis".into(), p.kick_basis.as_str().into()),
        ("stride".into(), record.options.stride.to_string()),
        ("leak_tol".into(), fmt_f64(record.options.leak_tolerance)),
        ("leak_max".into(), fmt_f64(record.leak_max)),
        (
            "first_unsafe_kick".into(),
            record
                .first_unsafe_kick
                .map_or("none".into(), |k| k.to_string()),
        ),
    ]
}

/// Columns `k,F,F_N,mean_n`.
pub fn write_trajectory<W: Write>(
    w: &mut W,
    record: &TrajectoryRecord,
    extra: &[(String, String)],
) -> io::Result<()> {
    write_metadata(w, &params_meta(record))?;
    write_metadata(w, extra)?;
    writeln!(w, "k,F,F_N,mean_n")?;
    let (f, fnn, n) = (
        record.fidelity.values(),
        record.f_n.values(),
        record.mean_photons_u.values(),
    );
    for i in 0..f.len() {
        writeln!(
            w,
            "{},{},{},{}",
            record.fidelity.kick_at(i),
            fmt_f64(f[i]),
            fmt_f64(fnn[i]),
            fmt_f64(n[i])
        )?;
    }
    Ok(())
}

/// Columns `epsilon,energy`, one row per attractor sample.
pub fn write_bifurcation<W: Write>(
    w: &mut W,
    scan: &BifurcationScan,
    extra: &[(String, String)],
) -> io::Result<()> {
    let c = &scan.config;
    let meta = vec![
        ("chi".into(), fmt_f64(c.chi)),
        ("period".into(), fmt_f64(c.period)),
        ("transient".into(), c.transient.to_string()),
        ("samples".into(), c.samples.to_string()),
    ];
    write_metadata(w, &meta)?;
    write_metadata(w, extra)?;
    writeln!(w, "epsilon,energy")?;
    for p in &scan.points {
        for e in &p.energies {
            writeln!(w, "{},{}", fmt_f64(p.epsilon), fmt_f64(*e))?;
        }
    }
    Ok(())
}

/// Columns `epsilon,class` plus `# boundary=` lines.
pub fn write_windows<W: Write>(
    w: &mut W,
    classes: &[(f64, WindowClass)],
    boundaries: &[(f64, WindowClass, WindowClass)],
    extra: &[(String, String)],
) -> io::Result<()> {
    write_metadata(w, extra)?;
    for (eps, from, to) in boundaries {
        writeln!(
            w,
            "# boundary={},{},{}",
            fmt_f64(*eps),
            from.as_str(),
            to.as_str()
        )?;
    }
    writeln!(w, "epsilon,class")?;
    for (eps, c) in classes {
        writeln!(w, "{},{}", fmt_f64(*eps), c.as_str())?;
    }
    Ok(())
}

/// Columns `j,omega,power,normalized`.
pub fn write_spectrum<W: Write>(
    w: &mut W,
    spec: &PowerSpectrum,
    extra: &[(String, String)],
) -> io::Result<()> {
    let meta = vec![
        ("t_min".into(), spec.t_min.to_string()),
        ("t_max".into(), spec.t_max.to_string()),
    ];
    write_metadata(w, &meta)?;
    write_metadata(w, extra)?;
    writeln!(w, "j,omega,power,normalized")?;
    for j in 0..spec.len() {
        writeln!(
            w,
            "{},{},{},{}",
            j,
            fmt_f64(spec.frequencies[j]),
            fmt_f64(spec.power[j]),
            fmt_f64(spec.normalized[j])
        )?;
    }
    Ok(())
}

/// Fit summary in the header, then `k,x,lnF,fit,in_window` where `x` is
/// `k^2` or `k` depending on the regime.
pub fn write_decay<W: Write>(
    w: &mut W,
    series: &TimeSeries,
    fit: &DecayFit,
    extra: &[(String, String)],
) -> io::Result<()> {
    let meta = vec![
        ("regime".into(), fit.regime.as_str().into()),
        ("slope".into(), fmt_f64(fit.slope)),
        ("intercept".into(), fmt_f64(fit.intercept)),
        ("rate".into(), fmt_f64(fit.rate())),
        ("r_squared".into(), fmt_f64(fit.r_squared)),
        (
            "window_start".into(),
            series.kick_at(fit.window.start).to_string(),
        ),
        (
            "window_end".into(),
            series.kick_at(fit.window.end.saturating_sub(1)).to_string(),
        ),
    ];
    write_metadata(w, &meta)?;
    write_metadata(w, extra)?;
    writeln!(w, "k,x,lnF,fit,in_window")?;
    for (i, &f) in series.values().iter().enumerate() {
        if f <= 0.0 {
            continue;
        }
        let k = series.kick_at(i);
        let x = fit.regime.abscissa(k as f64);
        writeln!(
            w,
            "{},{},{},{},{}",
            k,
            fmt_f64(x),
            fmt_f64(f.ln()),
            fmt_f64(fit.slope * x + fit.intercept),
            u8::from(fit.window.contains(&i))
        )?;
    }
    Ok(())
}

/// Estimate and settings in the header, then `s,log_divergence`.
pub fn write_lyapunov<W: Write>(
    w: &mut W,
    est: &LyapunovEstimate,
    config: &LyapunovConfig,
    extra: &[(String, String)],
) -> io::Result<()> {
    let meta = vec![
        ("lambda_max".into(), fmt_f64(est.lambda_max)),
        ("r_squared".into(), fmt_f64(est.r_squared)),
        ("embedding_dim".into(), est.embedding_dim.to_string()),
        ("delay".into(), est.delay.to_string()),
        ("delay_auto".into(), config.delay.is_none().to_string()),
        ("theiler".into(), est.theiler.to_string()),
        ("radius".into(), fmt_f64(est.radius)),
        ("fit_start".into(), est.fit_range.start().to_string()),
        ("fit_end".into(), est.fit_range.end().to_string()),
        ("references_used".into(), est.references_used.to_string()),
        ("low_confidence".into(), est.low_confidence.to_string()),
        ("series_len".into(), est.series_len.to_string()),
    ];
    write_metadata(w, &meta)?;
    write_metadata(w, extra)?;
    writeln!(w, "s,log_divergence")?;
    for (s, v) in est.divergence_curve.iter().enumerate() {
        writeln!(w, "{},{}", s, fmt_f64(*v))?;
    }
    Ok(())
}

/// Columns `epsilon,entropy,bins_used`.
pub fn write_entropy_sweep<W: Write>(
    w: &mut W,
    points: &[EntropyPoint],
    extra: &[(String, String)],
) -> io::Result<()> {
    if let Some(p) = points.first() {
        let meta = vec![
            ("t_min".into(), p.t_min.to_string()),
            ("t_max".into(), p.t_max.to_string()),
        ];
        write_metadata(w, &meta)?;
    }
    write_metadata(w, extra)?;
    writeln!(w, "epsilon,entropy,bins_used")?;
    for p in points {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(p.epsilon),
            fmt_f64(p.entropy),
            p.bins_used
        )?;
    }
    Ok(())
}

/// Data rows of a CSV written by this module: comment lines skipped,
/// header dropped, fields split on commas.
pub fn read_csv_rows(text: &str) -> Vec<Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect()
}
