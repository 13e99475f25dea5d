use std::f64::consts::PI;

use ghz_pulse::chain::{combined_lamb_dicke, critical_anisotropy};
use ghz_pulse::hamiltonian::build_block;
use ghz_pulse::moments::{block_weight, sx_moment, twice_m_values, SpinMomentTable};
use ghz_pulse::perturbative::{perturbative_infidelity, predict};
use ghz_pulse::pulse::{echo_transform, make_lemniscate, make_rectangular};
use ghz_pulse::tdse::{auto_cutoff, evolve_block, ghz_fidelity, phonon_excitation};
use ghz_pulse::trajectory::{chi_phase, integrate_trajectory, lemniscate_closed_form, magnus_coefficients};
use ghz_pulse::C64;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn overlaps(n: u32, mags: &[f64], phases: &[f64]) -> Vec<(i32, C64)> {
    twice_m_values(n)
        .enumerate()
        .map(|(j, tm)| (tm, C64::from_polar(mags[j % mags.len()], phases[j % phases.len()])))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_and_phonon_probability_are_probabilities(
        n in 2u32..40,
        mags in prop::collection::vec(0.0f64..=1.0, 1..8),
        phases in prop::collection::vec(-PI..PI, 1..8),
    ) {
        let ov = overlaps(n, &mags, &phases);
        let f = ghz_fidelity(&ov, n);
        let p = phonon_excitation(&ov, n);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prop_assert!((0.0..=1.0).contains(&p));
        // |Σ w ov|² ≤ Σ w |ov|² = 1 − P_ph
        prop_assert!(f <= 1.0 - p + 1e-12);
    }

    #[test]
    fn spin_moment_identities(n in 1u32..80) {
        prop_assert_eq!(sx_moment(n, 2), BigRational::new(BigInt::from(n), BigInt::from(4)));
        prop_assert!(sx_moment(n, 1).is_zero() && sx_moment(n, 5).is_zero());
        let t = SpinMomentTable::new(n);
        prop_assert!(t.optimal_bracket() >= BigRational::zero());
        let total: f64 = twice_m_values(n).map(|m| block_weight(n, m)).sum();
        prop_assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn analytic_optimum_is_the_minimum(n in 2u32..30, theta4 in -0.01f64..0.01, g in 0.0f64..0.01, x in -0.1f64..0.1) {
        let gc = C64::new(0.0, g);
        let p = predict(n, theta4, gc, 0.03).unwrap();
        prop_assert!(perturbative_infidelity(n, theta4, gc, x) >= p.infidelity * (1.0 - 1e-12) - 1e-18);
    }

    #[test]
    fn rectangular_gate_phase_and_closure(k in 1u32..9, eta in 0.005f64..0.1, t_gate in 0.1f64..10.0) {
        let p = make_rectangular(k, t_gate, eta).unwrap();
        let tr = integrate_trajectory(&p, eta, 4096).unwrap();
        prop_assert!(tr.closure_error() < 1e-9);
        prop_assert!((chi_phase(&tr) - PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn rescaling_preserves_coefficients(k in 1u32..5, eta in 0.01f64..0.06, lambda in 0.25f64..4.0) {
        let p = make_rectangular(k, 1.0, eta).unwrap();
        let a = magnus_coefficients(&integrate_trajectory(&p, eta, 4096).unwrap()).unwrap();
        let b = magnus_coefficients(&integrate_trajectory(&p.rescale_time(lambda), eta, 4096).unwrap()).unwrap();
        prop_assert!((a.chi - b.chi).abs() < 1e-10);
        prop_assert!((a.theta4 - b.theta4).abs() < 1e-10 * a.theta4.abs().max(1e-12));
        prop_assert!((a.g - b.g).norm() < 1e-10 * a.g.norm().max(1e-12));
    }

    #[test]
    fn echo_cancels_g_and_keeps_chi(k in 1u32..5, eta in 0.01f64..0.06) {
        let p = make_rectangular(k, 1.0, eta).unwrap();
        let plain = magnus_coefficients(&integrate_trajectory(&p, eta, 4096).unwrap()).unwrap();
        let echo = magnus_coefficients(&integrate_trajectory(&echo_transform(&p), eta, 4096).unwrap()).unwrap();
        prop_assert!(echo.g.norm() < 1e-10);
        prop_assert!((echo.chi - plain.chi).abs() < 1e-10);
        prop_assert!((echo.theta4 - 0.5 * plain.theta4).abs() < 1e-9 * plain.theta4.abs());
    }

    #[test]
    fn lemniscate_quadrature_matches_closed_form(a in 0.55f64..0.95, amp in 0.5f64..1.5, eta in 0.01f64..0.06) {
        let p = make_lemniscate(a, amp, 1.0, eta).unwrap();
        let c = magnus_coefficients(&integrate_trajectory(&p, eta, 4096).unwrap()).unwrap();
        let (chi, theta4) = lemniscate_closed_form(a, amp, eta);
        prop_assert!((c.chi - chi).abs() < 1e-9 * chi.abs());
        prop_assert!((c.theta4 - theta4).abs() < 1e-9 * eta * eta);
    }

    #[test]
    fn chain_estimates_are_monotone(n in 3u32..200, radial in 1e6f64..1e7) {
        prop_assert!(critical_anisotropy(n + 1).unwrap() > critical_anisotropy(n).unwrap());
        let w = 2.0 * PI * radial;
        prop_assert!(combined_lamb_dicke(1e4, w, n + 1).unwrap() < combined_lamb_dicke(1e4, w, n).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn blocks_are_unitary_and_parity_symmetric(
        twice_m in 1i32..12,
        eta in 0.01f64..0.08,
        echoed in any::<bool>(),
        lemniscate in any::<bool>(),
    ) {
        let p = if lemniscate {
            make_lemniscate(0.73, 0.96, 1.0, eta).unwrap()
        } else {
            make_rectangular(2, 1.0, eta).unwrap()
        };
        let p = if echoed { echo_transform(&p) } else { p };
        let alpha_max = integrate_trajectory(&p, eta, 2048).unwrap().max_abs();
        let cutoff = auto_cutoff(alpha_max, twice_m);
        let plus = evolve_block(&build_block(twice_m, &p, eta, cutoff).unwrap(), 512).unwrap();
        let minus = evolve_block(&build_block(-twice_m, &p, eta, cutoff).unwrap(), 512).unwrap();
        prop_assert!(plus.norm_drift < 1e-10);
        prop_assert!((plus.vacuum_overlap() - minus.vacuum_overlap()).norm() < 1e-12);
    }
}
