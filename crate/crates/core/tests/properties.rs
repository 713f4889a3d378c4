use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use ramsey_core::control_filters::ControlProtocol;
use ramsey_core::estimators::{
    css_moments, css_uncertainty, dicke_djy_db, dicke_evolve, dicke_moments, dicke_prepare, oats_moments_cumulant,
    DickeBands, EnsembleSpec,
};
use ramsey_core::noise_models::{ohmic_to_spectrum, OhmicFamilySpectrum};
use ramsey_core::runner::{Budget, Evaluator, Scenario};
use ramsey_core::estimators::BackendKind;

fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coherent_closed_form_matches_dicke(n in 1usize..=12, phi in -PI..PI, chi in 0.0f64..3.0, psi in -PI..PI) {
        let s0 = dicke_prepare(&EnsembleSpec::css(n), 64).unwrap();
        let e = dicke_moments(&dicke_evolve(&s0, phi, chi, psi));
        let c = css_moments(n, phi, chi, psi);
        let floor = 1e-2 * n as f64;
        prop_assert!(close(e.jy, c.jy, 1e-10, floor), "{} vs {}", e.jy, c.jy);
        prop_assert!(close(e.jy2, c.jy2, 1e-10, floor), "{} vs {}", e.jy2, c.jy2);
        prop_assert!(close(e.djy_db, c.djy_db, 1e-10, floor));
    }

    #[test]
    fn derivative_matches_finite_difference(
        n in 2usize..=10,
        theta in 0.0f64..0.8,
        beta in 0.0f64..PI,
        b in -2.0f64..2.0,
        chi in 0.0f64..1.5,
        psi in -1.0f64..1.0,
        y0 in 0.5f64..2.0,
    ) {
        let s0 = dicke_prepare(&EnsembleSpec::oats(n, theta, beta), 64).unwrap();
        let jy = |b: f64| dicke_moments(&dicke_evolve(&s0, b * y0, chi, psi)).jy;
        let h = 1e-5;
        let fd = (jy(b + h) - jy(b - h)) / (2.0 * h);
        let analytic = dicke_djy_db(&s0, b * y0, chi, psi, y0);
        prop_assert!(close(analytic, fd, 1e-6, 1e-3 * n as f64), "{analytic} vs {fd}");
    }

    #[test]
    fn twisting_phase_factorizes(n in 1usize..=12, theta in 0.0f64..1.0, beta in 0.0f64..PI, phi in -PI..PI, chi in 0.0f64..2.0, psi in -PI..PI) {
        let s0 = dicke_prepare(&EnsembleSpec::oats(n.max(2), theta, beta), 64).unwrap();
        let full = dicke_evolve(&s0, phi, chi, psi);
        let base = dicke_evolve(&s0, phi, chi, 0.0);
        let j = 0.5 * s0.n_qubits() as f64;
        let dim = s0.n_qubits() + 1;
        for r in 0..dim {
            for c in 0..dim {
                let (mr, mc) = (r as f64 - j, c as f64 - j);
                let u = Complex64::from_polar(1.0, -psi * mr * mr) * Complex64::from_polar(1.0, psi * mc * mc);
                prop_assert!((full.rho()[(r, c)] - u * base.rho()[(r, c)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn uncertainty_is_periodic_in_psi(n in 1usize..2000, chi in 0.0f64..3.0, psi in -1.5f64..1.5, y0 in 0.01f64..10.0, nu in 1.0f64..100.0) {
        let a = css_uncertainty(n, 1.0, chi, psi, y0, nu).unwrap();
        let b = css_uncertainty(n, 1.0, chi, psi + PI, y0, nu).unwrap();
        prop_assert!((a.ln_value - b.ln_value).abs() < 1e-8 * a.ln_value.abs().max(1.0));
    }

    #[test]
    fn twisting_only_increases_uncertainty(n in 1usize..2000, chi in 0.0f64..3.0, psi in -1.5f64..1.5, y0 in 0.01f64..10.0) {
        let a = css_uncertainty(n, 1.0, chi, psi, y0, 1.0).unwrap();
        let z = css_uncertainty(n, 1.0, chi, 0.0, y0, 1.0).unwrap();
        prop_assert!(a.ln_value >= z.ln_value - 1e-12);
    }

    #[test]
    fn filter_functions_are_consistent(w in -20.0f64..20.0, t in 0.001f64..10.0, mu in 0.5f64..5.0, d in 0.05f64..1.0) {
        for p in [ControlProtocol::free_evolution(), ControlProtocol::ion_drive(mu, d).unwrap()] {
            let fp = p.f_plus(w, t).unwrap();
            let fm = p.f_minus(w, t).unwrap();
            prop_assert!(fp >= -1e-12 * t * t);
            prop_assert!((fp - 2.0 * fm.re).abs() <= 1e-9 * fp.abs().max(1e-9 * t * t));
        }
    }

    #[test]
    fn variances_are_nonnegative(n in 3usize..200, theta in 0.0f64..0.3, beta in 0.0f64..PI, phi in -PI..PI, chi in 0.0f64..2.0, psi in -0.05f64..0.05) {
        let bands = DickeBands::prepare(&EnsembleSpec::oats(n, theta, beta), 2000).unwrap();
        let m = bands.moments(phi, chi, psi);
        let slack = 1e-12 * (n * n) as f64;
        prop_assert!(m.variance() >= -slack);
        let c = css_moments(n, phi, chi, psi);
        prop_assert!(c.variance() >= -slack);
        let j = 0.5 * n as f64;
        prop_assert!(m.jy2 <= j * (j + 1.0) + slack);
        let o = oats_moments_cumulant(n, theta, beta, phi, chi, psi).unwrap();
        prop_assert!(o.jy2.is_finite() && o.jy.is_finite());
    }

    #[test]
    fn untwisted_cumulant_reduces_to_coherent_state(n in 3usize..500, phi in -PI..PI, chi in 0.0f64..3.0) {
        let o = oats_moments_cumulant(n, 0.0, 0.0, phi, chi, 0.0).unwrap();
        let c = css_moments(n, phi, chi, 0.0);
        let scale = (n * n) as f64;
        prop_assert!((o.jy - c.jy).abs() <= 1e-12 * scale);
        prop_assert!((o.jy2 - c.jy2).abs() <= 1e-12 * scale);
        prop_assert!((o.djy_db - c.djy_db).abs() <= 1e-12 * scale);
    }

    #[test]
    fn fixed_total_time_matches_fixed_shots(n in 1usize..500, t in 0.01f64..2.0, nu in 1.0f64..50.0) {
        let spectrum = ohmic_to_spectrum(OhmicFamilySpectrum::new(1.0, 3.0, 1.0).unwrap());
        let make = |budget| Scenario::new(EnsembleSpec::css(n), spectrum.clone(), ControlProtocol::free_evolution(), budget, BackendKind::CssClosedForm).unwrap();
        let shots = make(Budget::FixedShots { nu });
        let total = make(Budget::FixedTotalTime { total_time: nu * t });
        let a = Evaluator::new(&shots).unwrap().evaluate(t).unwrap().delta_b;
        let b = Evaluator::new(&total).unwrap().evaluate(t).unwrap().delta_b;
        // The total-time budget reports Δb√T.
        prop_assert!((b.ln_value - 0.5 * (nu * t).ln() - a.ln_value).abs() < 1e-12 * a.ln_value.abs().max(1.0));
    }
}
