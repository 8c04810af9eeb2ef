//! Maximal Lyapunov exponent of a scalar series from the divergence of
//! neighbouring delay vectors (Kantz's method).
//!
//! For each reference vector, neighbours within a max-norm radius are
//! collected (skipping those closer in time than the Theiler window), and
//! `S(s) = < ln( mean_j |v_{i+s} - v_{j+s}| ) >_i` is tabulated. The
//! exponent is the least-squares slope of `S` over the fit range.

use std::collections::HashMap;
use std::fmt;
use std::ops::RangeInclusive;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::linear_fit;
use crate::error::{invalid, Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovConfig {
    pub embedding_dim: usize,
    /// Delay in samples; `None` picks the first zero crossing of the
    /// autocorrelation.
    pub delay: Option<usize>,
    /// Minimum temporal separation (samples) between a reference and its
    /// neighbours.
    pub theiler: usize,
    /// Absolute neighbour radius; overrides `radius_fraction`.
    pub radius: Option<f64>,
    /// Radius as a fraction of the series standard deviation.
    pub radius_fraction: f64,
    pub fit_range: RangeInclusive<usize>,
    /// References are spread evenly over the series, at most this many.
    pub max_references: usize,
    /// Fewer references with neighbours than this marks the estimate
    /// low-confidence.
    pub min_references: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            embedding_dim: 4,
            delay: None,
            theiler: 50,
            radius: None,
            radius_fraction: 0.1,
            fit_range: 1..=30,
            max_references: 2000,
            min_references: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    /// Per kick.
    pub lambda_max: f64,
    pub embedding_dim: usize,
    pub delay: usize,
    pub theiler: usize,
    pub radius: f64,
    pub fit_range: RangeInclusive<usize>,
    /// `S(s)` for `s = 0 ..= fit_range.end()`.
    pub divergence_curve: Vec<f64>,
    pub r_squared: f64,
    pub references_used: usize,
    pub low_confidence: bool,
    pub series_len: usize,
}

/// First lag at which the autocorrelation of `values` drops to zero or
/// below, searching up to `max_lag`; falls back to `max_lag`.
pub fn autocorrelation_zero(values: &[f64], max_lag: usize) -> usize {
    let n = values.len();
    if n < 2 {
        return 1;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = values
        .iter()
        .map(|v| Complex64::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    buf.iter_mut()
        .for_each(|c| *c = Complex64::new(c.norm_sqr(), 0.0));
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if !(c0 > 0.0) {
        return 1;
    }
    let max_lag = max_lag.clamp(1, n - 1);
    (1..=max_lag)
        .find(|&lag| buf[lag].re <= 0.0)
        .unwrap_or(max_lag)
}

struct Embedding<'a> {
    x: &'a [f64],
    dim: usize,
    delay: usize,
    len: usize,
}

impl Embedding<'_> {
    #[inline]
    fn coord(&self, i: usize, c: usize) -> f64 {
        self.x[i + c * self.delay]
    }

    #[inline]
    fn distance(&self, i: usize, j: usize) -> f64 {
        (0..self.dim).fold(0.0, |acc, c| {
            acc.max((self.coord(i, c) - self.coord(j, c)).abs())
        })
    }
}

/// Box grid over the first and last delay coordinates.
struct NeighbourGrid {
    cell: f64,
    boxes: HashMap<(i64, i64), Vec<usize>>,
}

impl NeighbourGrid {
    fn new(emb: &Embedding<'_>, count: usize, cell: f64) -> Self {
        let mut boxes: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let last = emb.dim - 1;
        for i in 0..count {
            let key = (
                (emb.coord(i, 0) / cell).floor() as i64,
                (emb.coord(i, last) / cell).floor() as i64,
            );
            boxes.entry(key).or_default().push(i);
        }
        NeighbourGrid { cell, boxes }
    }

    fn for_each_candidate(&self, emb: &Embedding<'_>, i: usize, mut f: impl FnMut(usize)) {
        let last = emb.dim - 1;
        let (a, b) = (
            (emb.coord(i, 0) / self.cell).floor() as i64,
            (emb.coord(i, last) / self.cell).floor() as i64,
        );
        for da in -1..=1 {
            for db in -1..=1 {
                if let Some(list) = self
                    .boxes
                    .get(&(a.saturating_add(da), b.saturating_add(db)))
                {
                    list.iter().for_each(|&j| f(j));
                }
            }
        }
    }
}

pub fn estimate_lyapunov(series: &TimeSeries, config: &LyapunovConfig) -> Result<LyapunovEstimate> {
    let m = config.embedding_dim;
    if m < 2 {
        return Err(invalid("embedding_dim", "must be >= 2"));
    }
    let (fit_start, fit_end) = (*config.fit_range.start(), *config.fit_range.end());
    if fit_end <= fit_start {
        return Err(invalid("fit_range", "needs at least two steps"));
    }
    if config.max_references == 0 {
        return Err(invalid("max_references", "must be >= 1"));
    }
    let x = series.values();
    let delay = match config.delay {
        Some(0) => return Err(invalid("delay", "must be >= 1")),
        Some(d) => d,
        None => autocorrelation_zero(x, x.len() / 10),
    };
    let needed = (m - 1) * delay + fit_end + config.theiler + 2;
    series.require_len(needed)?;

    let radius = match config.radius {
        Some(r) => r,
        None => config.radius_fraction * series.std_dev(),
    };
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(
            "radius",
            format!("{radius} is not a positive radius"),
        ));
    }

    let emb = Embedding {
        x,
        dim: m,
        delay,
        len: x.len() - (m - 1) * delay,
    };
    // vectors that can still be followed for fit_end steps
    let usable = emb.len - fit_end;
    let grid = NeighbourGrid::new(&emb, usable, radius);

    let refs = config.max_references.min(usable);
    let mut curve = vec![0.0; fit_end + 1];
    let mut used = 0usize;
    let mut neighbours = Vec::new();
    let mut dist = vec![0.0; fit_end + 1];
    for r in 0..refs {
        let i = if refs == 1 {
            0
        } else {
            r * (usable - 1) / (refs - 1)
        };
        neighbours.clear();
        grid.for_each_candidate(&emb, i, |j| {
            if j.abs_diff(i) > config.theiler && emb.distance(i, j) <= radius {
                neighbours.push(j);
            }
        });
        if neighbours.is_empty() {
            continue;
        }
        dist.iter_mut().for_each(|d| *d = 0.0);
        for &j in &neighbours {
            for (s, d) in dist.iter_mut().enumerate() {
                *d += emb.distance(i + s, j + s);
            }
        }
        // exact recurrences carry no divergence information
        if dist.iter().any(|&d| d <= 0.0) {
            continue;
        }
        let count = neighbours.len() as f64;
        for (c, d) in curve.iter_mut().zip(&dist) {
            *c += (d / count).ln();
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::RadiusTooSmall { radius });
    }
    curve.iter_mut().for_each(|c| *c /= used as f64);

    let steps: Vec<f64> = (fit_start..=fit_end).map(|s| s as f64).collect();
    let (slope, _, r_squared) = linear_fit(&steps, &curve[fit_start..=fit_end]);
    Ok(LyapunovEstimate {
        lambda_max: slope / series.stride() as f64,
        embedding_dim: m,
        delay,
        theiler: config.theiler,
        radius,
        fit_range: config.fit_range.clone(),
        divergence_curve: curve,
        r_squared,
        references_used: used,
        low_confidence: used < config.min_references,
        series_len: series.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsClass {
    Regular,
    QuasiPeriodic,
    Chaotic,
    Indeterminate,
}

impl DynamicsClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DynamicsClass::Regular => "regular",
            DynamicsClass::QuasiPeriodic => "quasi_periodic",
            DynamicsClass::Chaotic => "chaotic",
            DynamicsClass::Indeterminate => "indeterminate",
        }
    }
}

impl fmt::Display for DynamicsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign-based reading of a single estimate: chaotic above `tol`, regular
/// at or below zero, quasi-periodic in between.
pub fn classify_dynamics(estimate: &LyapunovEstimate, tol: f64) -> DynamicsClass {
    if estimate.low_confidence {
        DynamicsClass::Indeterminate
    } else if estimate.lambda_max > tol {
        DynamicsClass::Chaotic
    } else if estimate.lambda_max <= 0.0 {
        DynamicsClass::Regular
    } else {
        DynamicsClass::QuasiPeriodic
    }
}

/// Classification from estimates on growing prefixes of one series
/// (ordered by length). A small positive exponent counts as quasi-periodic
/// only if it shrinks towards zero as the series gets longer.
pub fn classify_dynamics_trend(estimates: &[LyapunovEstimate], tol: f64) -> DynamicsClass {
    let Some(last) = estimates.last() else {
        return DynamicsClass::Indeterminate;
    };
    match classify_dynamics(last, tol) {
        DynamicsClass::QuasiPeriodic if estimates.len() > 1 => {
            if last.lambda_max < estimates[0].lambda_max {
                DynamicsClass::QuasiPeriodic
            } else {
                DynamicsClass::Regular
            }
        }
        other => other,
    }
}

/// Estimates on the first half and on the whole series.
pub fn length_doubling_estimates(
    series: &TimeSeries,
    config: &LyapunovConfig,
) -> Result<Vec<LyapunovEstimate>> {
    let half = series.window(0, series.len() / 2)?;
    Ok(vec![
        estimate_lyapunov(&half, config)?,
        estimate_lyapunov(series, config)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(n: usize) -> TimeSeries {
        let mut x = 0.3;
        let mut out = Vec::with_capacity(n);
        for i in 0..n + 100 {
            x = 4.0 * x * (1.0 - x);
            if i >= 100 {
                out.push(x);
            }
        }
        TimeSeries::from_values(out).unwrap()
    }

    #[test]
    fn logistic_map_gives_ln_two() {
        let cfg = LyapunovConfig {
            embedding_dim: 2,
            delay: Some(1),
            theiler: 0,
            radius_fraction: 0.01,
            fit_range: 0..=3,
            ..Default::default()
        };
        let est = estimate_lyapunov(&logistic(5000), &cfg).unwrap();
        assert!(
            (est.lambda_max / 2f64.ln() - 1.0).abs() < 0.1,
            "{}",
            est.lambda_max
        );
        assert_eq!(classify_dynamics(&est, 0.001), DynamicsClass::Chaotic);
    }

    #[test]
    fn sinusoid_does_not_diverge() {
        let s = TimeSeries::from_values((0..20_000).map(|t| (0.05 * t as f64).sin()).collect())
            .unwrap();
        let est = estimate_lyapunov(&s, &LyapunovConfig::default()).unwrap();
        assert!(est.lambda_max <= 0.001, "{}", est.lambda_max);
        // quarter period of 2 pi / 0.05
        assert!((31..=32).contains(&est.delay));
    }

    #[test]
    fn autocorrelation_zero_of_cosine() {
        let v: Vec<f64> = (0..4000)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 100.0).cos())
            .collect();
        assert_eq!(autocorrelation_zero(&v, 400), 25);
    }

    #[test]
    fn too_short_series() {
        let s = TimeSeries::from_values(vec![0.1; 50]).unwrap();
        assert!(matches!(
            estimate_lyapunov(
                &s,
                &LyapunovConfig {
                    delay: Some(5),
                    ..Default::default()
                }
            ),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn tiny_radius_finds_no_neighbours() {
        let cfg = LyapunovConfig {
            embedding_dim: 2,
            delay: Some(1),
            theiler: 0,
            radius: Some(1e-300),
            fit_range: 0..=3,
            ..Default::default()
        };
        assert!(matches!(
            estimate_lyapunov(&logistic(500), &cfg),
            Err(Error::RadiusTooSmall { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let s = logistic(500);
        let bad_dim = LyapunovConfig {
            embedding_dim: 1,
            ..Default::default()
        };
        assert!(estimate_lyapunov(&s, &bad_dim).is_err());
        let bad_fit = LyapunovConfig {
            fit_range: 3..=3,
            ..Default::default()
        };
        assert!(estimate_lyapunov(&s, &bad_fit).is_err());
    }

    fn fake(lambda: f64, low: bool) -> LyapunovEstimate {
        LyapunovEstimate {
            lambda_max: lambda,
            embedding_dim: 4,
            delay: 1,
            theiler: 0,
            radius: 0.1,
            fit_range: 1..=30,
            divergence_curve: vec![],
            r_squared: 1.0,
            references_used: 100,
            low_confidence: low,
            series_len: 1000,
        }
    }

    #[test]
    fn classification_rules() {
        assert_eq!(
            classify_dynamics(&fake(0.01, false), 0.001),
            DynamicsClass::Chaotic
        );
        assert_eq!(
            classify_dynamics(&fake(-0.002, false), 0.001),
            DynamicsClass::Regular
        );
        assert_eq!(
            classify_dynamics(&fake(0.0005, false), 0.001),
            DynamicsClass::QuasiPeriodic
        );
        assert_eq!(
            classify_dynamics(&fake(0.5, true), 0.001),
            DynamicsClass::Indeterminate
        );
        let shrinking = [fake(0.0009, false), fake(0.0004, false)];
        assert_eq!(
            classify_dynamics_trend(&shrinking, 0.001),
            DynamicsClass::QuasiPeriodic
        );
        let growing = [fake(0.0002, false), fake(0.0004, false)];
        assert_eq!(
            classify_dynamics_trend(&growing, 0.001),
            DynamicsClass::Regular
        );
        assert_eq!(
            classify_dynamics_trend(&[], 0.001),
            DynamicsClass::Indeterminate
        );
    }
}
