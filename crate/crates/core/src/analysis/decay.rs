use std::fmt;
use std::ops::Range;

use super::linear_fit;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Shortest window a decay fit accepts.
pub const MIN_FIT_POINTS: usize = 4;
/// Shortest window the automatic selection accepts.
pub const MIN_AUTO_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayRegime {
    /// `ln F` linear in `t^2`.
    Gaussian,
    /// `ln F` linear in `t`.
    Exponential,
}

impl DecayRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayRegime::Gaussian => "gaussian",
            DecayRegime::Exponential => "exponential",
        }
    }

    /// `t^2` for the Gaussian law, `t` for the exponential one.
    pub fn abscissa(self, t: f64) -> f64 {
        match self {
            DecayRegime::Gaussian => t * t,
            DecayRegime::Exponential => t,
        }
    }
}

impl fmt::Display for DecayRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub regime: DecayRegime,
    /// Slope of `ln F` against `t^2` or `t`; negative for a decay.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Sample indices used.
    pub window: Range<usize>,
}

impl DecayFit {
    /// Decay rate, `-slope`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Least-squares fit of `ln F` against `t^2` (Gaussian) or `t`
/// (exponential) over `window`, with `t` the kick index.
pub fn fit_decay(
    series: &TimeSeries,
    regime: DecayRegime,
    window: Range<usize>,
) -> Result<DecayFit> {
    if window.end > series.len() || window.start > window.end {
        return Err(Error::InvalidParameter {
            name: "window",
            reason: format!("{window:?} outside series of length {}", series.len()),
        });
    }
    if window.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            available: window.len(),
        });
    }
    let mut x = Vec::with_capacity(window.len());
    let mut y = Vec::with_capacity(window.len());
    for i in window.clone() {
        let v = series.values()[i];
        if v <= 0.0 {
            return Err(Error::Domain(format!(
                "non-positive value {v} at index {i} in fit window"
            )));
        }
        x.push(regime.abscissa(series.kick_at(i) as f64));
        y.push(v.ln());
    }
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    Ok(DecayFit {
        regime,
        slope,
        intercept,
        r_squared,
        window,
    })
}

/// Initial-decay window: within the monotonically non-increasing prefix
/// of the series, the samples with `0.1 <= F <= 0.9`.
pub fn auto_window(series: &TimeSeries) -> Result<Range<usize>> {
    let v = series.values();
    let prefix_end = (1..v.len()).find(|&k| v[k] > v[k - 1]).unwrap_or(v.len());
    let start = (0..prefix_end).find(|&k| v[k] <= 0.9);
    let window = match start {
        Some(s) => {
            let end = (s..prefix_end).find(|&k| v[k] < 0.1).unwrap_or(prefix_end);
            s..end
        }
        None => 0..0,
    };
    if window.len() < MIN_AUTO_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_AUTO_POINTS,
            available: window.len(),
        });
    }
    Ok(window)
}

/// [`fit_decay`] over the [`auto_window`].
pub fn fit_decay_auto(series: &TimeSeries, regime: DecayRegime) -> Result<DecayFit> {
    fit_decay(series, regime, auto_window(series)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, n: usize) -> TimeSeries {
        TimeSeries::from_values((0..n).map(|k| f(k as f64)).collect()).unwrap()
    }

    #[test]
    fn recovers_gaussian_rate() {
        let s = series(|t| (-1e-5 * t * t).exp(), 1000);
        let fit = fit_decay_auto(&s, DecayRegime::Gaussian).unwrap();
        assert!((fit.slope + 1e-5).abs() < 1e-8, "{}", fit.slope);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn recovers_exponential_rate() {
        let s = series(|t| (-0.01 * t).exp(), 400);
        let fit = fit_decay_auto(&s, DecayRegime::Exponential).unwrap();
        assert!((fit.slope + 0.01).abs() < 1e-7);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn noisy_models_within_two_percent() {
        // deterministic multiplicative noise of relative size 1e-3; it breaks
        // monotonicity, so the windows (0.9 >= F >= 0.1) are given explicitly
        let noise = |k: f64| 1.0 + 1e-3 * ((k * 12.9898).sin() * 43758.5453).fract();
        let g = series(|t| (-2e-4 * t * t).exp() * noise(t), 300);
        let fit = fit_decay(&g, DecayRegime::Gaussian, 23..108).unwrap();
        assert!((fit.rate() / 2e-4 - 1.0).abs() < 0.02);
        let e = series(|t| (-0.03 * t).exp() * noise(t), 300);
        let fit = fit_decay(&e, DecayRegime::Exponential, 4..77).unwrap();
        assert!((fit.rate() / 0.03 - 1.0).abs() < 0.02);
    }

    #[test]
    fn uses_kick_index_with_stride() {
        let values: Vec<f64> = (0..200).map(|i| (-0.002 * (5 * i) as f64).exp()).collect();
        let s = TimeSeries::new(values, 0, 5).unwrap();
        let fit = fit_decay(&s, DecayRegime::Exponential, 0..100).unwrap();
        assert!((fit.slope + 0.002).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_values() {
        let s = TimeSeries::from_values(vec![1.0, 0.5, 0.0, 0.2, 0.1]).unwrap();
        assert!(matches!(
            fit_decay(&s, DecayRegime::Gaussian, 0..5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_short_windows() {
        let s = series(|t| (-0.1 * t).exp(), 20);
        assert!(matches!(
            fit_decay(&s, DecayRegime::Exponential, 2..5),
            Err(Error::InsufficientData {
                needed: 4,
                available: 3
            })
        ));
        let flat = series(|_| 1.0, 50);
        assert!(matches!(
            auto_window(&flat),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn auto_window_bounds() {
        let s = series(|t| (-0.05 * t).exp(), 100);
        let w = auto_window(&s).unwrap();
        assert!(s.values()[w.start] <= 0.9 && s.values()[w.start - 1] > 0.9);
        assert!(s.values()[w.end - 1] >= 0.1 && s.values()[w.end] < 0.1);
    }

    #[test]
    fn auto_window_stops_at_first_rise() {
        let mut v: Vec<f64> = (0..60).map(|k| (-0.04 * k as f64).exp()).collect();
        v[30] = 0.9;
        let s = TimeSeries::from_values(v).unwrap();
        let w = auto_window(&s).unwrap();
        assert_eq!(w.end, 30);
    }
}
