//! Property tests for the model invariants.

use num_complex::Complex64;
use proptest::prelude::*;

use fps_qkd::decoy::{
    binary_entropy, gain_and_qber, key_rate_from_stats, model_gain_stats,
    single_photon_decoy_bound, single_photon_exact, DecoyParams, SinglePhoton,
};
use fps_qkd::link::LinkParams;
use fps_qkd::sidechannel::{overlap, per_to_qber_floor, Waveform};
use fps_qkd::source::{generate_pulse_train, mu_for_level, SourceConfig};

fn link_strategy() -> impl Strategy<Value = LinkParams> {
    (
        0.0..200.0f64,
        0.0..0.5f64,
        0.0..10.0f64,
        0.05..1.0f64,
        1e-7..1e-3f64,
        0.0..0.1f64,
    )
        .prop_map(|(distance_km, atm, optics, eff, y0, ed)| LinkParams {
            distance_km,
            atmosphere_loss_db_per_km: atm,
            optics_loss_db: optics,
            detector_efficiency: eff,
            background_yield: y0,
            misalignment_error: ed,
        })
}

proptest! {
    #[test]
    fn entropy_is_symmetric(x in 0.0..=1.0f64) {
        let a = binary_entropy(x).unwrap();
        let b = binary_entropy(1.0 - x).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn per_floor_is_decreasing(per in 0.0..60.0f64, delta in 0.01..10.0f64) {
        prop_assert!(per_to_qber_floor(per) > per_to_qber_floor(per + delta));
    }

    #[test]
    fn level_attenuation_never_amplifies(mu in 1e-6..10.0f64, db in 0.0..80.0f64) {
        let out = mu_for_level(mu, db);
        prop_assert!(out <= mu);
        prop_assert!(out >= 0.0);
    }

    #[test]
    fn gain_monotone_in_intensity(link in link_strategy(), lo in 0.0..1.0f64, bump in 0.01..1.0f64) {
        let (q_lo, _) = gain_and_qber(&link, lo);
        let (q_hi, _) = gain_and_qber(&link, lo + bump);
        prop_assert!(q_hi > q_lo);
    }

    #[test]
    fn transmittance_in_unit_interval(link in link_strategy()) {
        let eta = link.transmittance();
        prop_assert!((0.0..=1.0).contains(&eta));
        let further = link.with_distance(link.distance_km + 1.0);
        prop_assert!(further.transmittance() < eta || eta == 0.0);
    }

    /// Decoy-bound soundness on model-generated gains: the yield bound never
    /// exceeds the exact yield, the error bound never undercuts the exact
    /// error.
    #[test]
    fn decoy_bound_is_sound_on_model_data(
        link in link_strategy(),
        mu in 0.3..0.9f64,
        nu1_frac in 0.1..0.45f64,
        nu2_frac in 0.0..0.4f64,
    ) {
        let nu1 = mu * nu1_frac;
        let nu2 = nu1 * nu2_frac;
        let d = DecoyParams { mu, nu1, nu2, ..DecoyParams::default() };
        prop_assume!(d.validate().is_ok());
        let gains = model_gain_stats(&link, &d);
        let exact = single_photon_exact(&link, &d).unwrap();
        // the estimator may legitimately refuse (reported, not clamped)
        if let Ok(bound) = single_photon_decoy_bound(&gains, &d) {
            prop_assert!(bound.y1 <= exact.y1 * (1.0 + 1e-12),
                "y1 bound {} above exact {}", bound.y1, exact.y1);
            prop_assert!(bound.e1 >= exact.e1 * (1.0 - 1e-12),
                "e1 bound {} below exact {}", bound.e1, exact.e1);
        }
    }

    /// The rate formula never increases when either error rate worsens, the
    /// secure rate never exceeds the raw sifted rate, and the single-photon
    /// gain never exceeds the signal gain.
    #[test]
    fn rate_formula_monotone_in_errors(
        link in link_strategy(),
        e1_lo in 0.001..0.2f64,
        bump in 0.001..0.2f64,
    ) {
        let d = DecoyParams::default();
        let gains = model_gain_stats(&link, &d);
        let exact = single_photon_exact(&link, &d).unwrap();
        prop_assert!(exact.q1 <= gains.q_mu * (1.0 + 1e-12));

        let base = SinglePhoton { e1: e1_lo, ..exact };
        let worse = SinglePhoton { e1: e1_lo + bump, ..exact };
        let r_base = key_rate_from_stats(&gains, &base, &d).unwrap();
        let r_worse = key_rate_from_stats(&gains, &worse, &d).unwrap();
        prop_assert!(r_worse.secure_rate_bps <= r_base.secure_rate_bps + 1e-9);
        prop_assert!(r_base.secure_rate_bps <= r_base.raw_sifted_rate_bps);

        let mut noisier = gains;
        noisier.e_mu = (gains.e_mu + bump).min(0.5);
        let r_noisier = key_rate_from_stats(&noisier, &base, &d).unwrap();
        prop_assert!(r_noisier.secure_rate_bps <= r_base.secure_rate_bps + 1e-9);
    }

    #[test]
    fn overlap_respects_cauchy_schwarz(
        offset in -3e-10..3e-10f64,
        std_a in 5e-11..3e-10f64,
        std_b in 5e-11..3e-10f64,
        chirp_scale in -2.0..2.0f64,
    ) {
        let a = Waveform::gaussian(0.0, std_a, 2e-12, 1.2e-9).normalize().unwrap();
        let chirp = chirp_scale / (std_b * std_b);
        let b = Waveform::chirped_gaussian(offset, std_b, chirp, 2e-12, 1.2e-9)
            .normalize()
            .unwrap();
        let r = overlap(&a, &b).unwrap();
        prop_assert!(r.abs_s_sq <= 1.0 + 1e-9, "|s|^2 = {}", r.abs_s_sq);
        prop_assert!((r.abs_s_sq - r.s.norm_sqr()).abs() < 1e-15);
    }

    /// A common global phase leaves the overlap untouched; a phase on one
    /// input multiplies it by exactly that phase factor.
    #[test]
    fn overlap_phase_covariance(theta in 0.0..std::f64::consts::TAU) {
        let a = Waveform::gaussian(0.0, 1e-10, 2e-12, 8e-10).normalize().unwrap();
        let b = Waveform::gaussian(3e-11, 1e-10, 2e-12, 8e-10).normalize().unwrap();
        let rotate = |w: &Waveform| {
            let factor = Complex64::new(0.0, theta).exp();
            let samples = w.samples().iter().map(|s| s * factor).collect();
            Waveform::new(w.t0(), w.dt(), samples).unwrap()
        };
        let base = overlap(&a, &b).unwrap().s;
        let both = overlap(&rotate(&a), &rotate(&b)).unwrap().s;
        prop_assert!((base - both).norm() < 1e-9);
        let one = overlap(&a, &rotate(&b)).unwrap().s;
        prop_assert!((one - base * Complex64::new(0.0, theta).exp()).norm() < 1e-9);
    }

    #[test]
    fn pulse_trains_are_seed_deterministic(seed in any::<u64>(), n in 1usize..64) {
        let cfg = SourceConfig::default();
        let choices = vec![("Medium".to_string(), "RHC".to_string()); n];
        let a = generate_pulse_train(&cfg, n, &choices, seed).unwrap();
        let b = generate_pulse_train(&cfg, n, &choices, seed).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.global_phase, y.global_phase);
            prop_assert!((0.0..std::f64::consts::TAU).contains(&x.global_phase));
        }
    }
}
