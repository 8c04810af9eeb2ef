//! Stroboscopic propagation of the unperturbed and perturbed states and the
//! per-kick observables built from them.
//!
//! One step applies the kick and then the free Kerr evolution, so that after
//! `k` steps `psi = (U_NL U_K)^k |0>`. Observables are recorded right after
//! each full step; since both branches are sampled at the same instants,
//! the overlap-based quantities match the before-the-pulse sampling.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fock::{FockVector, KerrPhaseDiagonal, KickMatrix};
use crate::params::SystemParams;
use crate::series::TimeSeries;

/// Population threshold above which a run is flagged truncation-unsafe.
pub const DEFAULT_LEAK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EvolutionEngine {
    params: SystemParams,
    kerr: KerrPhaseDiagonal,
    kick_u: KickMatrix,
    kick_p: KickMatrix,
    psi_u: FockVector,
    psi_p: FockVector,
    scratch: Vec<Complex64>,
    k: usize,
    leak_band: usize,
    leak_max: f64,
}

impl EvolutionEngine {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let kerr = KerrPhaseDiagonal::new(params.chi, params.period, params.dim, params.kerr)?;
        let kick_u =
            KickMatrix::build(params.kick_basis, params.epsilon, params.dim, params.buffer)?;
        let kick_p = KickMatrix::build(
            params.kick_basis,
            params.perturbed_strength(),
            params.dim,
            params.buffer,
        )?;
        Self::from_parts(params.clone(), kerr, kick_u, kick_p)
    }

    /// Assembles an engine from prebuilt operators, starting in the vacuum.
    pub fn from_parts(
        params: SystemParams,
        kerr: KerrPhaseDiagonal,
        kick_u: KickMatrix,
        kick_p: KickMatrix,
    ) -> Result<Self> {
        let dim = kerr.dim();
        for m in [&kick_u, &kick_p] {
            if m.dim() != dim {
                return Err(crate::Error::DimensionMismatch {
                    expected: dim,
                    actual: m.dim(),
                });
            }
        }
        let leak_band = (params.buffer / 2).clamp(1, dim);
        Ok(EvolutionEngine {
            params,
            kerr,
            kick_u,
            kick_p,
            psi_u: FockVector::vacuum(dim)?,
            psi_p: FockVector::vacuum(dim)?,
            scratch: vec![Complex64::new(0.0, 0.0); dim],
            k: 0,
            leak_band,
            leak_max: 0.0,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn kick_index(&self) -> usize {
        self.k
    }

    pub fn psi_u(&self) -> &FockVector {
        &self.psi_u
    }

    pub fn psi_p(&self) -> &FockVector {
        &self.psi_p
    }

    /// Number of top basis states watched by the leak monitor.
    pub fn leak_band(&self) -> usize {
        self.leak_band
    }

    /// Largest population seen in the leak band of either branch.
    pub fn leak_max(&self) -> f64 {
        self.leak_max
    }

    /// Current population in the leak band (max over both branches).
    pub fn leak(&self) -> f64 {
        self.psi_u
            .tail_population(self.leak_band)
            .max(self.psi_p.tail_population(self.leak_band))
    }

    /// Advances both branches by one kick followed by free evolution.
    pub fn step(&mut self) {
        propagate(&self.kick_u, &self.kerr, &mut self.psi_u, &mut self.scratch);
        propagate(&self.kick_p, &self.kerr, &mut self.psi_p, &mut self.scratch);
        self.k += 1;
        self.leak_max = self.leak_max.max(self.leak());
    }

    /// Undoes one step on both branches with the adjoint operators.
    pub fn unstep(&mut self) {
        unpropagate(&self.kick_u, &self.kerr, &mut self.psi_u, &mut self.scratch);
        unpropagate(&self.kick_p, &self.kerr, &mut self.psi_p, &mut self.scratch);
        self.k = self.k.saturating_sub(1);
    }

    /// `|<psi_p|psi_u>|`.
    pub fn fidelity(&self) -> f64 {
        overlap(&self.psi_p, &self.psi_u).norm()
    }

    /// `|<psi_p| n |psi_u>|`.
    pub fn fidelity_n(&self) -> f64 {
        let (p, u) = (self.psi_p.amplitudes(), self.psi_u.amplitudes());
        p.iter()
            .zip(u)
            .enumerate()
            .map(|(n, (a, b))| a.conj() * b * n as f64)
            .sum::<Complex64>()
            .norm()
    }

    pub fn mean_photons(&self) -> f64 {
        mean_photon_number(&self.psi_u)
    }
}

fn overlap(a: &FockVector, b: &FockVector) -> Complex64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

fn propagate(
    kick: &KickMatrix,
    kerr: &KerrPhaseDiagonal,
    psi: &mut FockVector,
    scratch: &mut [Complex64],
) {
    kick.apply_into(psi.amplitudes(), scratch);
    let amps = psi.amplitudes_mut();
    for ((c, s), p) in amps.iter_mut().zip(scratch.iter()).zip(kerr.phases()) {
        *c = s * p;
    }
}

fn unpropagate(
    kick: &KickMatrix,
    kerr: &KerrPhaseDiagonal,
    psi: &mut FockVector,
    scratch: &mut [Complex64],
) {
    for ((s, c), p) in scratch.iter_mut().zip(psi.amplitudes()).zip(kerr.phases()) {
        *s = c * p.conj();
    }
    kick.apply_adjoint_into(scratch, psi.amplitudes_mut());
}

/// `sum_n n |psi_n|^2`.
pub fn mean_photon_number(psi: &FockVector) -> f64 {
    psi.amplitudes()
        .iter()
        .enumerate()
        .map(|(n, c)| n as f64 * c.norm_sqr())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOptions {
    /// Record every `stride`-th kick.
    pub stride: usize,
    pub leak_tolerance: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            stride: 1,
            leak_tolerance: DEFAULT_LEAK_TOLERANCE,
        }
    }
}

/// Observables of one run, sampled at kicks `0, stride, 2 stride, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub params: SystemParams,
    pub options: TrajectoryOptions,
    pub fidelity: TimeSeries,
    pub f_n: TimeSeries,
    pub mean_photons_u: TimeSeries,
    /// Largest leak-band population seen during the run.
    pub leak_max: f64,
    /// First kick at which the leak band exceeded the tolerance.
    pub first_unsafe_kick: Option<usize>,
    /// Squared norm of the unperturbed state at the end of the run.
    pub final_norm_sqr: f64,
}

impl TrajectoryRecord {
    pub fn truncation_safe(&self) -> bool {
        self.first_unsafe_kick.is_none()
    }

    pub fn kicks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.fidelity.len()).map(|i| self.fidelity.kick_at(i))
    }
}

pub fn run_trajectory(params: &SystemParams) -> Result<TrajectoryRecord> {
    run_trajectory_with(params, &TrajectoryOptions::default())
}

/// Iterates the map `params.kicks` times from the vacuum. The run always
/// completes; a tripped leak monitor is reported through
/// [`TrajectoryRecord::first_unsafe_kick`].
pub fn run_trajectory_with(
    params: &SystemParams,
    options: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    if options.stride == 0 {
        return Err(invalid("stride", "must be >= 1"));
    }
    if !(options.leak_tolerance >= 0.0) {
        return Err(invalid("leak_tolerance", "must be >= 0"));
    }
    let mut engine = EvolutionEngine::new(params)?;
    let samples = params.kicks / options.stride + 1;
    let mut fidelity = Vec::with_capacity(samples);
    let mut f_n = Vec::with_capacity(samples);
    let mut photons = Vec::with_capacity(samples);
    let mut first_unsafe = None;

    let mut record = |e: &EvolutionEngine| {
        fidelity.push(e.fidelity());
        f_n.push(e.fidelity_n());
        photons.push(e.mean_photons());
    };
    record(&engine);
    for k in 1..=params.kicks {
        engine.step();
        if first_unsafe.is_none() && engine.leak() > options.leak_tolerance {
            first_unsafe = Some(k);
        }
        if k % options.stride == 0 {
            record(&engine);
        }
    }

    Ok(TrajectoryRecord {
        params: params.clone(),
        options: options.clone(),
        fidelity: TimeSeries::new(fidelity, 0, options.stride)?,
        f_n: TimeSeries::new(f_n, 0, options.stride)?,
        mean_photons_u: TimeSeries::new(photons, 0, options.stride)?,
        leak_max: engine.leak_max(),
        first_unsafe_kick: first_unsafe,
        final_norm_sqr: engine.psi_u().norm_sqr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::KickBasis;

    fn params(eps: f64, de: f64, kicks: usize) -> SystemParams {
        SystemParams::default()
            .with_epsilon(eps)
            .with_delta_epsilon(de)
            .with_kicks(kicks)
            .with_dim(48)
    }

    #[test]
    fn zero_kicks_gives_single_sample() {
        let r = run_trajectory(&params(0.1, 0.001, 0)).unwrap();
        assert_eq!(r.fidelity.values(), &[1.0]);
        assert_eq!(r.f_n.values(), &[0.0]);
        assert_eq!(r.mean_photons_u.values(), &[0.0]);
    }

    #[test]
    fn zero_perturbation_keeps_unit_fidelity() {
        let r = run_trajectory(&params(0.3, 0.0, 500)).unwrap();
        for (f, (fnv, n)) in r
            .fidelity
            .values()
            .iter()
            .zip(r.f_n.values().iter().zip(r.mean_photons_u.values()))
        {
            assert!((f - 1.0).abs() < 1e-12);
            assert!((fnv - n).abs() < 1e-12);
        }
    }

    #[test]
    fn no_kick_leaves_vacuum() {
        let r = run_trajectory(&params(0.0, 0.0, 50)).unwrap();
        assert!(r.mean_photons_u.values().iter().all(|&n| n == 0.0));
    }

    #[test]
    fn one_kick_creates_coherent_state() {
        for basis in [KickBasis::Closed, KickBasis::Embedded] {
            let p = params(0.1, 0.001, 1).with_kick_basis(basis);
            let r = run_trajectory(&p).unwrap();
            assert!((r.mean_photons_u.values()[1] - 0.01).abs() < 1e-10);
        }
    }

    #[test]
    fn stride_decimates() {
        let p = params(0.1, 0.01, 100);
        let full = run_trajectory(&p).unwrap();
        let opts = TrajectoryOptions {
            stride: 7,
            ..Default::default()
        };
        let dec = run_trajectory_with(&p, &opts).unwrap();
        assert_eq!(dec.fidelity.len(), 100 / 7 + 1);
        for i in 0..dec.fidelity.len() {
            assert_eq!(dec.fidelity.values()[i], full.fidelity.values()[7 * i]);
        }
        assert!(run_trajectory_with(
            &p,
            &TrajectoryOptions {
                stride: 0,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn fidelity_bounded() {
        let r = run_trajectory(&params(0.6, 0.05, 400)).unwrap();
        assert!(r
            .fidelity
            .values()
            .iter()
            .all(|&f| (0.0..=1.0 + 1e-9).contains(&f)));
        assert_eq!(r.fidelity.values()[0], 1.0);
    }

    #[test]
    fn reversibility() {
        let p = params(0.5, 0.01, 0);
        let mut e = EvolutionEngine::new(&p).unwrap();
        for _ in 0..300 {
            e.step();
        }
        for _ in 0..300 {
            e.unstep();
        }
        let vac = FockVector::vacuum(p.dim).unwrap();
        assert!(vac.inner(e.psi_u()).unwrap().norm() > 1.0 - 1e-10);
        assert_eq!(e.kick_index(), 0);
    }

    #[test]
    fn leak_monitor_trips_for_small_space() {
        let p = SystemParams {
            dim: 12,
            buffer: 8,
            ..params(0.8, 0.001, 200)
        };
        let r = run_trajectory(&p).unwrap();
        assert!(!r.truncation_safe());
        assert!(r.leak_max > DEFAULT_LEAK_TOLERANCE);
        let quiet = run_trajectory(&params(0.1, 0.001, 200)).unwrap();
        assert!(quiet.truncation_safe(), "leak {}", quiet.leak_max);
    }

    #[test]
    fn deterministic() {
        let p = params(0.7, 0.01, 300);
        assert_eq!(run_trajectory(&p).unwrap(), run_trajectory(&p).unwrap());
    }
}
