use kicked_kerr::analysis::spectrum::{power_spectrum, spectral_entropy};
use kicked_kerr::classical::classical_step;
use kicked_kerr::evolution::EvolutionEngine;
use kicked_kerr::reference::kick_matrix_by_expm;
use kicked_kerr::{
    run_trajectory, FockVector, KerrConvention, KerrPhaseDiagonal, KickBasis, KickMatrix,
    SystemParams, TimeSeries,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn small(epsilon: f64, delta: f64, kicks: usize) -> SystemParams {
    SystemParams {
        epsilon,
        delta_epsilon: delta,
        kicks,
        dim: 40,
        buffer: 16,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_kick_is_unitary(g in 0.0f64..1.0, dim in 2usize..64) {
        let k = KickMatrix::closed(g, dim).unwrap();
        prop_assert!(k.unitarity_defect() < 1e-12);
    }

    #[test]
    fn laguerre_elements_match_expm(g in 0.0f64..1.0, dim in 2usize..65) {
        // the oracle needs enough headroom for its block to converge
        let k = KickMatrix::embedded(g, dim, 64).unwrap();
        let r = kick_matrix_by_expm(g, dim, 64).unwrap();
        prop_assert!(r.max_abs_diff(&k) < 1e-10);
    }

    #[test]
    fn kerr_phases_periodic_for_rational_chi_t(p in 1u32..5, q in 1u32..5, half in any::<bool>()) {
        let conv = if half { KerrConvention::HalfChi } else { KerrConvention::FullChi };
        let chi_t = PI * p as f64 / q as f64;
        let d = KerrPhaseDiagonal::new(1.0, chi_t, 160, conv).unwrap();
        // n(n-1) chi T factor / pi is periodic in n with this period
        let period = if half { 4 * q } else { 2 * q } as usize;
        let ph = d.phases();
        for n in 0..ph.len() - period {
            prop_assert!((ph[n] - ph[n + period]).norm() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn fidelity_within_unit_interval(eps in 0.0f64..0.8, delta in 0.0f64..0.1) {
        let rec = run_trajectory(&small(eps, delta, 40)).unwrap();
        for &f in rec.fidelity.values() {
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&f));
        }
    }

    #[test]
    fn zero_perturbation_gives_identical_branches(eps in 0.0f64..0.8) {
        let rec = run_trajectory(&small(eps, 0.0, 30)).unwrap();
        for (i, &f) in rec.fidelity.values().iter().enumerate() {
            prop_assert!((f - 1.0).abs() < 1e-12);
            prop_assert!((rec.f_n.values()[i] - rec.mean_photons_u.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_conserved(eps in 0.0f64..0.8, basis in prop_oneof![Just(KickBasis::Closed), Just(KickBasis::Embedded)]) {
        let p = small(eps, 0.01, 200).with_kick_basis(basis);
        let rec = run_trajectory(&p).unwrap();
        // the embedded block only conserves norm while the state stays clear of the cutoff
        if basis == KickBasis::Closed || rec.truncation_safe() {
            prop_assert!((rec.final_norm_sqr - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn classical_modulus_law(re in -5.0f64..5.0, im in -5.0f64..5.0, eps in 0.0f64..1.0) {
        let a = Complex64::new(re, im);
        let next = classical_step(a, 1.0, PI, eps).unwrap();
        prop_assert!((next.norm() - (a - Complex64::new(0.0, eps)).norm()).abs() < 1e-12);
    }

    #[test]
    fn classical_energy_conserved_without_kicks(re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut a = Complex64::new(re, im);
        let e0 = a.norm_sqr();
        for _ in 0..100 {
            a = classical_step(a, 1.0, PI, 0.0).unwrap();
        }
        prop_assert!((a.norm_sqr() - e0).abs() < 1e-10 * (1.0 + e0));
    }

    #[test]
    fn entropy_invariant_under_time_shift(values in prop::collection::vec(0.0f64..1.0, 16..128), t0 in 0usize..10_000) {
        prop_assume!(values.iter().any(|v| *v > 0.0));
        let a = TimeSeries::from_values(values.clone()).unwrap();
        let b = TimeSeries::new(values, t0, 1).unwrap();
        let ea = spectral_entropy(&power_spectrum(&a).unwrap()).entropy;
        let eb = spectral_entropy(&power_spectrum(&b).unwrap()).entropy;
        prop_assert!((ea - eb).abs() < 1e-10);
    }
}

#[test]
fn reversibility_at_default_dimension() {
    let p = SystemParams {
        epsilon: 0.8,
        ..Default::default()
    };
    let mut e = EvolutionEngine::new(&p).unwrap();
    for _ in 0..1000 {
        e.step();
    }
    for _ in 0..1000 {
        e.unstep();
    }
    let vac = FockVector::vacuum(p.dim).unwrap();
    assert!(vac.inner(e.psi_u()).unwrap().norm() > 1.0 - 1e-7);
}
