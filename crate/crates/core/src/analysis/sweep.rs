//! Spectral entropy of fidelity series across kick strengths.

use rayon::prelude::*;

use super::spectrum::{decay_skip, power_spectrum, spectral_entropy_with, EntropyOptions};
use crate::error::{invalid, Error, Result};
use crate::evolution::{run_trajectory_with, TrajectoryOptions, TrajectoryRecord};
use crate::params::SystemParams;
use crate::series::TimeSeries;

/// Kick window for the transform. Unset bounds are chosen so that every
/// series in a sweep is transformed over the same kicks: the start is the
/// latest initial-decay skip among them and the end the shortest series end.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralWindow {
    pub t_min: Option<usize>,
    /// Inclusive.
    pub t_max: Option<usize>,
    pub entropy: EntropyOptions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPoint {
    pub epsilon: f64,
    pub entropy: f64,
    pub bins_used: usize,
    pub t_min: usize,
    pub t_max: usize,
}

/// Resolves the common `[t_min, t_max]` kick window for a set of series.
pub fn common_window(series: &[&TimeSeries], window: &SpectralWindow) -> Result<(usize, usize)> {
    if series.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            available: 0,
        });
    }
    let t_min = match window.t_min {
        Some(t) => t,
        None => series
            .iter()
            .map(|s| s.kick_at(decay_skip(s.values())))
            .max()
            .unwrap_or(0),
    };
    let last = series
        .iter()
        .map(|s| s.kick_at(s.len().saturating_sub(1)))
        .min()
        .unwrap_or(0);
    let t_max = window.t_max.map_or(last, |t| t.min(last));
    if t_max <= t_min {
        return Err(invalid(
            "window",
            format!("empty kick window [{t_min}, {t_max}]"),
        ));
    }
    Ok((t_min, t_max))
}

/// The entropy of one series over kicks `[t_min, t_max]`.
pub fn windowed_entropy(
    series: &TimeSeries,
    t_min: usize,
    t_max: usize,
    options: &EntropyOptions,
) -> Result<(f64, usize)> {
    let start = series.index_at(t_min);
    let end = series.index_at(t_max + 1).min(series.len());
    let spec = power_spectrum(&series.window(start, end.max(start))?)?;
    let e = spectral_entropy_with(&spec, options)?;
    Ok((e.entropy, e.bins_used))
}

/// One entropy value per `(epsilon, series)` pair, all over the same window.
pub fn entropy_vs_epsilon(
    runs: &[(f64, TimeSeries)],
    window: &SpectralWindow,
) -> Result<Vec<EntropyPoint>> {
    let refs: Vec<&TimeSeries> = runs.iter().map(|(_, s)| s).collect();
    let (t_min, t_max) = common_window(&refs, window)?;
    runs.iter()
        .map(|(epsilon, s)| {
            let (entropy, bins_used) = windowed_entropy(s, t_min, t_max, &window.entropy)?;
            Ok(EntropyPoint {
                epsilon: *epsilon,
                entropy,
                bins_used,
                t_min,
                t_max,
            })
        })
        .collect()
}

/// Runs `base` at every kick strength in `epsilons`, in parallel on the
/// current rayon pool. Results come back in input order.
pub fn fidelity_sweep(
    base: &SystemParams,
    epsilons: &[f64],
    options: &TrajectoryOptions,
) -> Result<Vec<TrajectoryRecord>> {
    epsilons
        .par_iter()
        .map(|&e| run_trajectory_with(&base.clone().with_epsilon(e), options))
        .collect()
}
