use std::fmt;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::series::TimeSeries;

/// Normalized power at or below this is treated as an empty bin.
pub const EMPTY_BIN: f64 = 1e-24;

/// Power spectrum of a series at the DFT frequencies `w_j = 2 pi j / (N stride)`
/// (angular frequency per kick).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Kick range `[t_min, t_max]` the transform was taken over.
    pub t_min: usize,
    pub t_max: usize,
}

impl PowerSpectrum {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }
}

/// `P(w) = |sum_t F(t) e^{-i w t}|^2` over the samples of `series`.
///
/// The sum runs over the actual kick indices, so shifting `t0` only rotates
/// the phase of each coefficient and leaves `P` unchanged.
pub fn power_spectrum(series: &TimeSeries) -> Result<PowerSpectrum> {
    series.require_len(2)?;
    let n = series.len();
    let mut buf: Vec<Complex64> = series
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Normalization(
            "series carries no spectral power".into(),
        ));
    }
    let normalized = power.iter().map(|p| p / total).collect();
    let stride = series.stride() as f64;
    let frequencies = (0..n)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / (n as f64 * stride))
        .collect();
    Ok(PowerSpectrum {
        frequencies,
        power,
        normalized,
        t_min: series.t0(),
        t_max: series.kick_at(n - 1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Base(f64),
}

impl LogBase {
    fn scale(self) -> f64 {
        match self {
            LogBase::Natural => 1.0,
            LogBase::Base(b) => 1.0 / b.ln(),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::Natural => write!(f, "e"),
            LogBase::Base(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyOptions {
    pub log_base: LogBase,
    /// Whether the zero-frequency bin takes part in the sum.
    pub include_dc: bool,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions {
            log_base: LogBase::Natural,
            include_dc: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyResult {
    pub entropy: f64,
    pub bins_used: usize,
}

/// Shannon entropy `-sum P_N ln P_N` of the normalized spectrum.
pub fn spectral_entropy(spectrum: &PowerSpectrum) -> EntropyResult {
    spectral_entropy_with(spectrum, &EntropyOptions::default()).expect("default options are valid")
}

pub fn spectral_entropy_with(
    spectrum: &PowerSpectrum,
    options: &EntropyOptions,
) -> Result<EntropyResult> {
    if let LogBase::Base(b) = options.log_base {
        if !(b > 0.0 && b != 1.0 && b.is_finite()) {
            return Err(invalid(
                "log_base",
                format!("{b} is not a valid logarithm base"),
            ));
        }
    }
    let skip = usize::from(!options.include_dc);
    let bins = &spectrum.normalized[skip.min(spectrum.normalized.len())..];
    let total: f64 = bins.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Normalization(
            "no power outside the excluded bins".into(),
        ));
    }
    let mut entropy = 0.0;
    let mut used = 0;
    for &p in bins {
        let p = p / total;
        if p > EMPTY_BIN {
            entropy -= p * p.ln();
            used += 1;
        }
    }
    Ok(EntropyResult {
        entropy: entropy * options.log_base.scale(),
        bins_used: used,
    })
}

/// Index of the first local minimum of `values` after index 0, capped at
/// 10% of the length. Used to skip the initial fidelity decay.
pub fn decay_skip(values: &[f64]) -> usize {
    let cap = values.len() / 10;
    (1..cap)
        .find(|&k| k + 1 < values.len() && values[k] < values[k - 1] && values[k] <= values[k + 1])
        .unwrap_or(cap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub bin: usize,
    pub omega: f64,
    /// Power relative to the strongest peak.
    pub relative_power: f64,
}

/// Dominant peaks of the one-sided spectrum, DC excluded.
///
/// Local maxima are merged when closer than `min_separation` bins (the
/// stronger one is kept) and only peaks with at least `min_relative` of the
/// strongest peak's power are returned, strongest first.
pub fn spectral_peaks(
    spectrum: &PowerSpectrum,
    min_relative: f64,
    min_separation: usize,
) -> Vec<SpectralPeak> {
    let half = spectrum.len() / 2 + 1;
    let p = &spectrum.power[..half.min(spectrum.len())];
    let mut maxima: Vec<usize> = (1..p.len())
        .filter(|&j| p[j] >= p[j - 1] && (j + 1 >= p.len() || p[j] >= p[j + 1]))
        .collect();
    maxima.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for j in maxima {
        if kept.iter().all(|&k| k.abs_diff(j) >= min_separation) {
            kept.push(j);
        }
    }
    let Some(&top) = kept.first() else {
        return Vec::new();
    };
    let top_power = p[top];
    kept.into_iter()
        .filter(|&j| p[j] >= min_relative * top_power)
        .map(|j| SpectralPeak {
            bin: j,
            omega: spectrum.frequencies[j],
            relative_power: p[j] / top_power,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    // direct O(N^2) evaluation of the transform, independent of the FFT
    fn naive_power(values: &[f64], t0: usize) -> Vec<f64> {
        let n = values.len();
        (0..n)
            .map(|j| {
                let w = 2.0 * PI * j as f64 / n as f64;
                let c: Complex64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| Complex64::from_polar(v, -w * (t0 + i) as f64))
                    .sum();
                c.norm_sqr()
            })
            .collect()
    }

    #[test]
    fn constant_series_is_pure_dc() {
        let s = TimeSeries::from_values(vec![0.7; 64]).unwrap();
        let p = power_spectrum(&s).unwrap();
        assert!((p.normalized[0] - 1.0).abs() < 1e-12);
        assert!(p.normalized[1..].iter().all(|&v| v < EMPTY_BIN));
        let e = spectral_entropy(&p);
        assert_eq!(e.entropy, 0.0);
        assert_eq!(e.bins_used, 1);
    }

    #[test]
    fn cosine_at_bin_frequency() {
        let n = 128;
        let j = 9;
        let v: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * j as f64 * t as f64 / n as f64).cos())
            .collect();
        let p = power_spectrum(&TimeSeries::from_values(v).unwrap()).unwrap();
        for (k, &pn) in p.normalized.iter().enumerate() {
            if k == j || k == n - j {
                assert!((pn - 0.5).abs() < 1e-12);
            } else {
                assert!(pn < 1e-20, "bin {k}: {pn}");
            }
        }
        let e = spectral_entropy(&p);
        assert!((e.entropy - 2f64.ln()).abs() < 1e-12);
        assert_eq!(e.bins_used, 2);
    }

    #[test]
    fn matches_direct_sum() {
        let v: Vec<f64> = (0..50).map(|t| ((t * 7919) % 101) as f64 / 101.0).collect();
        let s = TimeSeries::new(v.clone(), 13, 1).unwrap();
        let p = power_spectrum(&s).unwrap();
        for (a, b) in p.power.iter().zip(naive_power(&v, 13)) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn all_zero_series_is_an_error() {
        let s = TimeSeries::from_values(vec![0.0; 8]).unwrap();
        assert!(matches!(power_spectrum(&s), Err(Error::Normalization(_))));
        let short = TimeSeries::from_values(vec![1.0]).unwrap();
        assert!(matches!(
            power_spectrum(&short),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn uniform_spectrum_has_maximal_entropy() {
        // a unit impulse has a flat spectrum
        let mut v = vec![0.0; 40];
        v[0] = 1.0;
        let p = power_spectrum(&TimeSeries::from_values(v).unwrap()).unwrap();
        let e = spectral_entropy(&p);
        assert_eq!(e.bins_used, 40);
        assert!((e.entropy - 40f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_bin_spectrum_has_zero_entropy() {
        let spec = PowerSpectrum {
            frequencies: vec![0.0, 1.0, 2.0],
            power: vec![0.0, 3.0, 0.0],
            normalized: vec![0.0, 1.0, 0.0],
            t_min: 0,
            t_max: 2,
        };
        assert_eq!(spectral_entropy(&spec).entropy, 0.0);
    }

    #[test]
    fn log_base_and_dc_options() {
        let spec = PowerSpectrum {
            frequencies: vec![0.0, 1.0, 2.0],
            power: vec![2.0, 1.0, 1.0],
            normalized: vec![0.5, 0.25, 0.25],
            t_min: 0,
            t_max: 2,
        };
        let bits = spectral_entropy_with(
            &spec,
            &EntropyOptions {
                log_base: LogBase::Base(2.0),
                include_dc: true,
            },
        )
        .unwrap();
        assert!((bits.entropy - 1.5).abs() < 1e-12);
        let no_dc = spectral_entropy_with(
            &spec,
            &EntropyOptions {
                include_dc: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((no_dc.entropy - 2f64.ln()).abs() < 1e-12);
        assert!(spectral_entropy_with(
            &spec,
            &EntropyOptions {
                log_base: LogBase::Base(1.0),
                include_dc: true
            }
        )
        .is_err());
    }

    #[test]
    fn decay_skip_finds_first_minimum() {
        let v: Vec<f64> = (0..100).map(|k| ((k as f64) * 0.5).cos().abs()).collect();
        assert_eq!(decay_skip(&v), 3);
        let monotone: Vec<f64> = (0..100).map(|k| -(k as f64)).collect();
        assert_eq!(decay_skip(&monotone), 10);
    }

    #[test]
    fn peaks_of_two_tones() {
        let n = 512;
        let v: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                (2.0 * PI * 10.0 * t / n as f64).cos()
                    + 0.5 * (2.0 * PI * 60.0 * t / n as f64).cos()
            })
            .collect();
        let p = power_spectrum(&TimeSeries::from_values(v).unwrap()).unwrap();
        let peaks = spectral_peaks(&p, 0.1, 3);
        assert_eq!(
            peaks.iter().map(|q| q.bin).collect::<Vec<_>>(),
            vec![10, 60]
        );
        assert!((peaks[1].relative_power - 0.25).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn parseval(values in proptest::collection::vec(-3.0..3.0f64, 2..200)) {
            prop_assume!(values.iter().any(|v| v.abs() > 1e-3));
            let energy: f64 = values.iter().map(|v| v * v).sum();
            let p = power_spectrum(&TimeSeries::from_values(values.clone()).unwrap()).unwrap();
            let total: f64 = p.power.iter().sum::<f64>() / values.len() as f64;
            prop_assert!((total - energy).abs() <= 1e-9 * energy);
            let norm_sum: f64 = p.normalized.iter().sum();
            prop_assert!((norm_sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn entropy_within_bounds(values in proptest::collection::vec(0.0..1.0f64, 2..200)) {
            prop_assume!(values.iter().any(|v| *v > 1e-3));
            let p = power_spectrum(&TimeSeries::from_values(values).unwrap()).unwrap();
            let e = spectral_entropy(&p);
            prop_assert!(e.entropy >= 0.0);
            prop_assert!(e.entropy <= (e.bins_used as f64).ln() + 1e-12);
        }

        #[test]
        fn shift_invariance(values in proptest::collection::vec(0.0..1.0f64, 2..120), shift in 0usize..10_000) {
            prop_assume!(values.iter().any(|v| *v > 1e-3));
            let a = power_spectrum(&TimeSeries::from_values(values.clone()).unwrap()).unwrap();
            let b = power_spectrum(&TimeSeries::new(values, shift, 1).unwrap()).unwrap();
            prop_assert!((spectral_entropy(&a).entropy - spectral_entropy(&b).entropy).abs() < 1e-10);
        }
    }
}
