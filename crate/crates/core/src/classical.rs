//! The classical counterpart of the kicked oscillator: the field amplitude
//! `alpha` follows `alpha' = exp(-i chi T |alpha - i eps|^2) (alpha - i eps)`.
//! Bifurcation scans record the attractor energy `|alpha|^2` against `eps`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// `|alpha|` above which a trajectory is treated as numerically divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub alpha: Complex64,
    pub k: usize,
}

impl ClassicalState {
    pub fn origin() -> Self {
        ClassicalState {
            alpha: Complex64::new(0.0, 0.0),
            k: 0,
        }
    }

    pub fn energy(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

/// One kick followed by free evolution. The exponent is purely imaginary,
/// so `|alpha'| = |alpha - i eps|`.
pub fn classical_step(alpha: Complex64, chi: f64, period: f64, epsilon: f64) -> Result<Complex64> {
    let shifted = alpha - Complex64::new(0.0, epsilon);
    let next = Complex64::from_polar(1.0, -chi * period * shifted.norm_sqr()) * shifted;
    if !(next.re.is_finite() && next.im.is_finite()) || next.norm() > DIVERGENCE_THRESHOLD {
        return Err(Error::NonFinite(format!(
            "classical trajectory diverged at alpha={shifted}"
        )));
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationConfig {
    pub chi: f64,
    pub period: f64,
    /// Iterations discarded before recording.
    pub transient: usize,
    /// Recorded `|alpha|^2` values per `eps`.
    pub samples: usize,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        BifurcationConfig {
            chi: 1.0,
            period: std::f64::consts::PI,
            transient: 2000,
            samples: 500,
        }
    }
}

/// Attractor samples for one value of the kick strength.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorSamples {
    pub epsilon: f64,
    /// Empty when the trajectory diverged.
    pub energies: Vec<f64>,
    pub diverged_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationScan {
    pub config: BifurcationConfig,
    pub points: Vec<AttractorSamples>,
}

impl BifurcationScan {
    pub fn epsilons(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.epsilon)
    }

    /// The scan point closest to `epsilon`; errors outside the scanned range.
    pub fn nearest(&self, epsilon: f64) -> Result<&AttractorSamples> {
        let (lo, hi) = match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => (a.epsilon, b.epsilon),
            _ => {
                return Err(Error::InsufficientData {
                    needed: 1,
                    available: 0,
                })
            }
        };
        let slack = if self.points.len() > 1 {
            (hi - lo) / (self.points.len() - 1) as f64 * 0.5
        } else {
            0.0
        };
        if epsilon < lo - slack - 1e-12 || epsilon > hi + slack + 1e-12 {
            return Err(invalid(
                "epsilon",
                format!("{epsilon} outside scanned range [{lo}, {hi}]"),
            ));
        }
        Ok(self
            .points
            .iter()
            .min_by(|a, b| {
                (a.epsilon - epsilon)
                    .abs()
                    .total_cmp(&(b.epsilon - epsilon).abs())
            })
            .expect("non-empty"))
    }
}

/// `steps` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..steps)
            .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Iterates from `alpha = 0` and collects post-transient attractor samples.
pub fn attractor_samples(config: &BifurcationConfig, epsilon: f64) -> AttractorSamples {
    let mut alpha = Complex64::new(0.0, 0.0);
    let mut energies = Vec::with_capacity(config.samples);
    for k in 0..config.transient + config.samples {
        match classical_step(alpha, config.chi, config.period, epsilon) {
            Ok(next) => alpha = next,
            Err(_) => {
                return AttractorSamples {
                    epsilon,
                    energies: Vec::new(),
                    diverged_at: Some(k + 1),
                };
            }
        }
        if k >= config.transient {
            energies.push(alpha.norm_sqr());
        }
    }
    AttractorSamples {
        epsilon,
        energies,
        diverged_at: None,
    }
}

/// Bifurcation diagram over `eps_steps` values in `[eps_start, eps_stop]`,
/// computed in parallel over `eps`.
pub fn bifurcation_scan(
    config: &BifurcationConfig,
    eps_start: f64,
    eps_stop: f64,
    eps_steps: usize,
) -> Result<BifurcationScan> {
    if eps_steps == 0 {
        return Err(invalid("eps_steps", "must be >= 1"));
    }
    if config.samples == 0 {
        return Err(invalid("samples", "must be >= 1"));
    }
    if !(eps_start.is_finite() && eps_stop.is_finite()) || eps_stop < eps_start {
        return Err(invalid(
            "eps_range",
            format!("[{eps_start}, {eps_stop}] is not a finite increasing range"),
        ));
    }
    if !(config.chi.is_finite() && config.period.is_finite()) {
        return Err(Error::NonFinite("chi and period must be finite".into()));
    }
    let points = linspace(eps_start, eps_stop, eps_steps)
        .into_par_iter()
        .map(|eps| attractor_samples(config, eps))
        .collect();
    Ok(BifurcationScan {
        config: config.clone(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowClass {
    Regular,
    Chaotic,
    Indeterminate,
}

impl WindowClass {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowClass::Regular => "regular",
            WindowClass::Chaotic => "chaotic",
            WindowClass::Indeterminate => "indeterminate",
        }
    }
}

/// Thresholds used to read a bifurcation diagram automatically.
///
/// A point is regular when its samples form a periodic orbit (at most
/// `max_period` clusters `distinct_tol` apart) or stay on a bounded
/// invariant curve (every sample below `escape_energy`). Orbits in the
/// chaotic sea of this map wander far beyond the regular islands around
/// the origin, whose energies stay below one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCriteria {
    pub distinct_tol: f64,
    pub max_period: usize,
    pub escape_energy: f64,
}

impl Default for WindowCriteria {
    fn default() -> Self {
        WindowCriteria {
            distinct_tol: 1e-6,
            max_period: 16,
            escape_energy: 5.0,
        }
    }
}

/// Number of clusters in `values` separated by gaps larger than `tol`.
pub fn distinct_values(values: &[f64], tol: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    1 + sorted.windows(2).filter(|w| w[1] - w[0] > tol).count()
}

pub fn classify_samples(samples: &AttractorSamples, criteria: &WindowCriteria) -> WindowClass {
    if samples.diverged_at.is_some() {
        return WindowClass::Chaotic;
    }
    if samples.energies.len() < 2 * criteria.max_period.max(1) {
        return WindowClass::Indeterminate;
    }
    if distinct_values(&samples.energies, criteria.distinct_tol) <= criteria.max_period {
        return WindowClass::Regular;
    }
    if samples
        .energies
        .iter()
        .all(|&e| e <= criteria.escape_energy)
    {
        WindowClass::Regular
    } else {
        WindowClass::Chaotic
    }
}

/// Classifies the scan point nearest to `epsilon`.
pub fn classify_window(
    scan: &BifurcationScan,
    epsilon: f64,
    criteria: &WindowCriteria,
) -> Result<WindowClass> {
    Ok(classify_samples(scan.nearest(epsilon)?, criteria))
}

/// Midpoints between consecutive scan points whose classes differ
/// (indeterminate points are skipped).
pub fn window_boundaries(
    scan: &BifurcationScan,
    criteria: &WindowCriteria,
) -> Vec<(f64, WindowClass, WindowClass)> {
    let classes: Vec<(f64, WindowClass)> = scan
        .points
        .iter()
        .map(|p| (p.epsilon, classify_samples(p, criteria)))
        .filter(|(_, c)| *c != WindowClass::Indeterminate)
        .collect();
    classes
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| (0.5 * (w[0].0 + w[1].0), w[0].1, w[1].1))
        .collect()
}
