//! Property-based invariants across the physics and numerics modules.

use proptest::prelude::*;

use dce_sim::calibration::{shot_noise_psd, thermal_occupation, ShotNoiseEnv};
use dce_sim::gaussian::{
    apply_loss, duan_quantities, entropy_of_formation, log_negativity, purity,
    symplectic_nu_minus, tmsv_covariance, CovMat4,
};
use dce_sim::rates::{ebit_rate, n_of_f, SpectralModel};
use dce_sim::squid::{josephson_inductance, reflection_phase, SquidParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_never_increases_entanglement(
        r in 0.01f64..1.5,
        eta in 0.05f64..1.0,
    ) {
        let v = tmsv_covariance(r, 0.0).unwrap();
        let lossy = apply_loss(&v, eta, eta, 0.0, 0.0).unwrap();
        let before = log_negativity(&v).unwrap();
        let after = log_negativity(&lossy).unwrap();
        prop_assert!(after <= before + 1e-12);
    }

    #[test]
    fn added_noise_never_increases_entanglement(
        r in 0.01f64..1.5,
        n_add in 0.0f64..2.0,
    ) {
        let v = tmsv_covariance(r, 0.0).unwrap();
        let noisy = apply_loss(&v, 1.0, 1.0, n_add, n_add).unwrap();
        prop_assert!(
            log_negativity(&noisy).unwrap() <= log_negativity(&v).unwrap() + 1e-12
        );
    }

    #[test]
    fn mode_swap_preserves_entanglement_measures(
        r in 0.01f64..1.5,
        eta_m in 0.3f64..1.0,
        eta_p in 0.3f64..1.0,
    ) {
        let v = apply_loss(&tmsv_covariance(r, 0.0).unwrap(), eta_m, eta_p, 0.1, 0.05).unwrap();
        let w = v.swap_modes();
        prop_assert!(
            (log_negativity(&v).unwrap() - log_negativity(&w).unwrap()).abs() < 1e-10
        );
        prop_assert!((purity(&v).unwrap() - purity(&w).unwrap()).abs() < 1e-10);
        let (dp_v, dm_v) = duan_quantities(&v);
        let (dp_w, dm_w) = duan_quantities(&w);
        prop_assert!((dp_v - dp_w).abs() < 1e-10 && (dm_v - dm_w).abs() < 1e-10);
    }

    #[test]
    fn nu_minus_detects_tmsv_entanglement(r in 0.001f64..2.0) {
        let v = tmsv_covariance(r, 0.0).unwrap();
        let nu = symplectic_nu_minus(&v).unwrap();
        prop_assert!(nu < 0.5, "nu = {nu} should certify entanglement");
        prop_assert!((nu - 0.5 * (-2.0 * r).exp()).abs() < 1e-9);
    }

    #[test]
    fn entropy_of_formation_is_monotone(a in 0.001f64..2.0, b in 0.001f64..2.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(
            entropy_of_formation(lo).unwrap() <= entropy_of_formation(hi).unwrap() + 1e-15
        );
    }

    #[test]
    fn shot_noise_psd_is_even_and_monotone_in_current(
        i in 1e-8f64..1e-4,
        scale in 1.1f64..10.0,
    ) {
        let env = ShotNoiseEnv::paper_4p1_ghz();
        let g = 1.3e9;
        let p = |x: f64| shot_noise_psd(x, g, 3.7, 200e3, &env).unwrap();
        prop_assert!((p(i) - p(-i)).abs() < 1e-12 * p(i).abs());
        prop_assert!(p(scale * i) >= p(i));
    }

    #[test]
    fn thermal_occupation_is_monotone_in_temperature(
        f in 1e9f64..1e10,
        t in 0.01f64..1.0,
        scale in 1.1f64..5.0,
    ) {
        prop_assert!(
            thermal_occupation(f, scale * t).unwrap() > thermal_occupation(f, t).unwrap()
        );
    }

    #[test]
    fn spectrum_is_parabolic_and_bounded(n_p in 1e-4f64..0.5, f_frac in 0.01f64..0.99) {
        let model = SpectralModel::new(n_p, 8.9e9).unwrap();
        let n = n_of_f(f_frac * 8.9e9, &model).unwrap();
        prop_assert!(n >= 0.0 && n <= n_p + 1e-15);
        // symmetric about f_p/2
        let mirror = n_of_f((1.0 - f_frac) * 8.9e9, &model).unwrap();
        prop_assert!((n - mirror).abs() < 1e-12 * n_p);
    }

    #[test]
    fn ebit_rate_converges_with_panel_count(n_p in 1e-3f64..0.3) {
        let model = SpectralModel::new(n_p, 8.9e9).unwrap();
        // the integrand behaves like n·log n at the band edges, so Simpson
        // converges slower than its clean fourth order there
        let coarse = ebit_rate(&model, 0.0, 8.9e9, 512).unwrap().rate_ebit_per_s;
        let fine = ebit_rate(&model, 0.0, 8.9e9, 8192).unwrap().rate_ebit_per_s;
        prop_assert!((coarse / fine - 1.0).abs() < 1e-4);
    }

    #[test]
    fn josephson_inductance_is_periodic_and_even(phi in -0.45f64..0.45) {
        let p = SquidParams::default();
        let l = josephson_inductance(phi, &p).unwrap();
        prop_assert!(l > 0.0);
        prop_assert!((l - josephson_inductance(-phi, &p).unwrap()).abs() < 1e-18);
        prop_assert!((l - josephson_inductance(phi + 1.0, &p).unwrap()).abs() < 1e-11 * l);
    }

    #[test]
    fn reflection_phase_stays_in_lower_half_plane(
        phi in -0.45f64..0.45,
        f in 1e9f64..1e10,
    ) {
        let p = SquidParams::default();
        let theta = reflection_phase(f, phi, &p).unwrap();
        prop_assert!(theta <= 0.0 && theta > -std::f64::consts::PI);
    }

    #[test]
    fn covariance_round_trips_through_rows(
        r in 0.01f64..1.0,
        eta in 0.2f64..1.0,
    ) {
        let v = apply_loss(&tmsv_covariance(r, 0.0).unwrap(), eta, 1.0, 0.3, 0.0).unwrap();
        let w = CovMat4::from_rows(v.to_rows());
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((v.get(i, j) - w.get(i, j)).abs() < 1e-15);
            }
        }
    }
}
