//! Post-processing of scalar time series: spectra and spectral entropy,
//! decay-law fits, recurrence detection and maximal-Lyapunov estimates.

pub mod decay;
pub mod lyapunov;
pub mod recurrence;
pub mod spectrum;
pub mod sweep;

pub use decay::{auto_window, fit_decay, fit_decay_auto, DecayFit, DecayRegime};
pub use lyapunov::{
    classify_dynamics, classify_dynamics_trend, estimate_lyapunov, DynamicsClass, LyapunovConfig,
    LyapunovEstimate,
};
pub use recurrence::first_return;
pub use spectrum::{
    decay_skip, power_spectrum, spectral_entropy, spectral_entropy_with, spectral_peaks,
    EntropyOptions, EntropyResult, LogBase, PowerSpectrum, SpectralPeak,
};
pub use sweep::{entropy_vs_epsilon, EntropyPoint, SpectralWindow};

/// Ordinary least squares `y = slope x + intercept`; returns
/// `(slope, intercept, r_squared)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r2)
}
