//! Acceptance suite: every release criterion with its pinned tolerance,
//! one pass/fail line per criterion.

use fps_qkd::cli::{
    cmd_analyze, cmd_simulate, cmd_source, AnalyzeOptions, SimulateOptions, SourceOptions,
};
use fps_qkd::config::RunConfig;
use fps_qkd::decoy::estimator::{DecoyBound, ExactModel};
use fps_qkd::decoy::{
    distance_sweep, model_gain_stats, secure_key_rate, single_photon_decoy_bound,
    single_photon_exact, DecoyParams,
};
use fps_qkd::link::LinkParams;
use fps_qkd::montecarlo::{estimate_key_rate, run_with_workers, IntensityClass, MCConfig};
use fps_qkd::sidechannel::{estimate_g1, overlap, Waveform};
use fps_qkd::source::{
    coherence_suppression, generate_pulse_train, mu_for_level, passes_per_period,
    photons_per_pulse, voa_for_target_mu, SourceConfig, ROUND_TRIP_LOSS_DB,
};

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($arg)+)),
        }
    };
}

fn criterion(name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("PASS {name}"),
        Err(e) => {
            println!("FAIL {name}: {e}");
            panic!("{name}: {e}");
        }
    }
}

fn defaults() -> (LinkParams, DecoyParams) {
    (LinkParams::default(), DecoyParams::default())
}

#[test]
fn criterion_1_rate_table_reproduction() {
    criterion(
        "criterion 1: 20 km rate-table reproduction (matching subset)",
        || {
            let (link, d) = defaults();
            let gains = model_gain_stats(&link, &d);
            ensure!(
                (gains.q_mu / 4.87e-2 - 1.0).abs() <= 5e-3,
                "Q_mu {} not within 0.5% of 4.87e-2",
                gains.q_mu
            );
            ensure!(
                (gains.q_nu2 / 1.68e-3 - 1.0).abs() <= 1e-2,
                "Q_nu2 {} not within 1% of 1.68e-3",
                gains.q_nu2
            );
            ensure!(
                (gains.e_mu - 1.01e-2).abs() <= 2e-4,
                "E_mu {} not within 0.02 points of 1.01%",
                gains.e_mu
            );
            let single = single_photon_exact(&link, &d).map_err(|e| e.to_string())?;
            ensure!(
                (single.e1 - 1.01e-2).abs() <= 2e-4,
                "e1 {} not within 0.02 points of 1.01%",
                single.e1
            );
            Ok(())
        },
    );
}

#[test]
fn criterion_2_documented_discrepancies() {
    criterion(
        "criterion 2: documented-discrepancy subset is flagged",
        || {
            let (link, d) = defaults();

            // independent closed-form oracle chain, written out literally
            let eta = 0.5 * 10f64.powf(-(20.0 * 0.1 + 5.0) / 10.0);
            let y0 = 1e-5;
            let q = |mu: f64| y0 + 1.0 - (-eta * mu).exp();
            let e_of = |mu: f64| (0.5 * y0 + 0.01 * (1.0 - (-eta * mu).exp())) / q(mu);
            let h2 = |x: f64| -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
            let y1 = y0 + eta - y0 * eta;
            let q1 = y1 * 0.5 * (-0.5f64).exp();
            let e1 = (0.5 * y0 + 0.01 * eta) / y1;
            let r_oracle =
                0.5 * (1e8 * 0.85) * (-q(0.5) * 1.16 * h2(e_of(0.5)) + q1 * (1.0 - h2(e1)));

            let gains = model_gain_stats(&link, &d);
            let single = single_photon_exact(&link, &d).map_err(|e| e.to_string())?;
            let (_, _, rate) =
                secure_key_rate(&link, &d, &ExactModel).map_err(|e| e.to_string())?;

            ensure!(
                (gains.q_nu1 / q(0.125) - 1.0).abs() <= 5e-3,
                "Q_nu1 off oracle"
            );
            ensure!(
                (gains.q_nu1 / 1.24e-2 - 1.0).abs() <= 5e-3,
                "Q_nu1 {} != 1.24e-2",
                gains.q_nu1
            );
            ensure!((single.q1 / q1 - 1.0).abs() <= 5e-3, "Q_1 off oracle");
            ensure!(
                (single.q1 / 3.03e-2 - 1.0).abs() <= 5e-3,
                "Q_1 {} != 3.03e-2",
                single.q1
            );
            ensure!(
                (rate.secure_rate_bps / r_oracle - 1.0).abs() <= 5e-3,
                "R {} off oracle {r_oracle}",
                rate.secure_rate_bps
            );
            ensure!(
                (rate.secure_rate_bps / 986e3 - 1.0).abs() <= 5e-3,
                "R {} != 986 Kb/s",
                rate.secure_rate_bps
            );
            // order-of-magnitude claim: within [1e5, 2e6] b/s
            ensure!(
                (1e5..=2e6).contains(&rate.secure_rate_bps),
                "R {} outside [1e5, 2e6]",
                rate.secure_rate_bps
            );

            // the analyze report must flag the divergence from the published
            // 1.70e-2 / 3.47e-2 / 559.80 Kb/s values
            let cfg = RunConfig::default();
            let mut csv = Vec::new();
            let mut report = Vec::new();
            cmd_analyze(
                &cfg,
                &AnalyzeOptions {
                    sweep: None,
                    mode: "exact".into(),
                },
                &mut csv,
                &mut report,
            )
            .map_err(|e| e.to_string())?;
            let report = String::from_utf8(report).unwrap();
            for name in ["Q_nu1", "Q_1", "R_secure_bps"] {
                let line = report
                    .lines()
                    .find(|l| l.trim_start().starts_with(name))
                    .ok_or(format!("report lacks a {name} row"))?;
                ensure!(line.contains("DIVERGES"), "{name} row not flagged: {line}");
            }
            for name in ["Q_mu", "Q_nu2", "E_mu", "e_1"] {
                let line = report
                    .lines()
                    .find(|l| l.trim_start().starts_with(name))
                    .ok_or(format!("report lacks a {name} row"))?;
                ensure!(
                    line.contains("ok"),
                    "{name} row unexpectedly flagged: {line}"
                );
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_3_distance_sweep_shape() {
    criterion(
        "criterion 3: qualitative distance-sweep reproduction",
        || {
            let (link, d) = defaults();
            let distances: Vec<f64> = (0..=30).map(|k| k as f64 * 5.0).collect();
            for est in [
                &ExactModel as &dyn fps_qkd::decoy::SinglePhotonEstimator,
                &DecoyBound,
            ] {
                let rows = distance_sweep(&d, &link, &distances, est).map_err(|e| e.to_string())?;
                for pair in rows.windows(2) {
                    ensure!(
                        pair[1].gains.e_mu >= pair[0].gains.e_mu - 1e-15,
                        "QBER decreased between {} and {} km",
                        pair[0].distance_km,
                        pair[1].distance_km
                    );
                    ensure!(
                        pair[1].rate.secure_rate_bps <= pair[0].rate.secure_rate_bps + 1e-9,
                        "secure rate increased between {} and {} km",
                        pair[0].distance_km,
                        pair[1].distance_km
                    );
                }
            }
            // the secure rate reaches zero at a finite cutoff distance
            let far: Vec<f64> = (0..=100).map(|k| k as f64 * 5.0).collect();
            for est in [
                &ExactModel as &dyn fps_qkd::decoy::SinglePhotonEstimator,
                &DecoyBound,
            ] {
                let rows = distance_sweep(&d, &link, &far, est).map_err(|e| e.to_string())?;
                let cutoff = rows.iter().find(|r| r.rate.secure_rate_bps == 0.0);
                let row = cutoff.ok_or("no cutoff distance found out to 500 km")?;
                ensure!(
                    row.rate.clamped,
                    "zero rate at {} km lacks clamp flag",
                    row.distance_km
                );
            }
            // at zero distance the QBER is the misalignment error plus the small
            // background contribution
            let rows = distance_sweep(&d, &link, &[0.0], &ExactModel).map_err(|e| e.to_string())?;
            let e0 = rows[0].gains.e_mu;
            ensure!(
                e0 >= link.misalignment_error,
                "QBER {} below misalignment",
                e0
            );
            ensure!(
                e0 - link.misalignment_error < 1e-3,
                "QBER {} too far above misalignment at 0 km",
                e0
            );
            Ok(())
        },
    );
}

#[test]
fn criterion_4_monte_carlo_convergence() {
    criterion(
        "criterion 4: Monte Carlo convergence to the analytic model",
        || {
            let (link, d) = defaults();
            let workers = std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(4);
            let cfg = MCConfig {
                n_pulses: 1_000_000,
                seed: 42,
                link,
                decoy: d,
                source: SourceConfig::default(),
            };
            let r = run_with_workers(&cfg, workers).map_err(|e| e.to_string())?;
            for class in IntensityClass::ALL {
                let (q_model, _) = fps_qkd::decoy::gain_and_qber(&link, class.intensity(&d));
                let sent = r.counts(class).sent as f64;
                let sigma = (q_model * (1.0 - q_model) / sent).sqrt();
                let q_emp = r.empirical_gain(class);
                ensure!(
                    (q_emp - q_model).abs() <= 3.0 * sigma,
                    "gain {} for {}: model {q_model}, 3 sigma {}",
                    q_emp,
                    class.label(),
                    3.0 * sigma
                );
            }
            let (_, e_model) = fps_qkd::decoy::gain_and_qber(&link, d.mu);
            let sifted = r.counts(IntensityClass::Mu).sifted as f64;
            let sigma_e = (e_model * (1.0 - e_model) / sifted).sqrt();
            ensure!(
                (r.empirical_qber(IntensityClass::Mu) - e_model).abs() <= 3.0 * sigma_e,
                "E_mu {} vs model {e_model} (3 sigma {})",
                r.empirical_qber(IntensityClass::Mu),
                3.0 * sigma_e
            );

            // ten million pulses pin the empirical decoy-bound rate to 10%
            let big = MCConfig {
                n_pulses: 10_000_000,
                seed: 43,
                ..cfg
            };
            let r = run_with_workers(&big, workers).map_err(|e| e.to_string())?;
            let empirical = estimate_key_rate(&r, &d).map_err(|e| e.to_string())?;
            let (_, _, analytic) =
                secure_key_rate(&link, &d, &DecoyBound).map_err(|e| e.to_string())?;
            ensure!(
                (empirical.secure_rate_bps / analytic.secure_rate_bps - 1.0).abs() <= 0.10,
                "empirical rate {} vs analytic decoy-bound {}",
                empirical.secure_rate_bps,
                analytic.secure_rate_bps
            );
            Ok(())
        },
    );
}

#[test]
fn criterion_5_decoy_bound_soundness_grid() {
    criterion("criterion 5: decoy-bound soundness on a model grid", || {
        let link_template = LinkParams::default();
        let mut combos = 0;
        for distance in (0..=120).step_by(10) {
            for mu in [0.3, 0.4, 0.5, 0.6] {
                let link = link_template.with_distance(distance as f64);
                let d = DecoyParams {
                    mu,
                    ..DecoyParams::default()
                };
                d.validate().map_err(|e| e.to_string())?;
                let gains = model_gain_stats(&link, &d);
                let exact = single_photon_exact(&link, &d).map_err(|e| e.to_string())?;
                let bound = single_photon_decoy_bound(&gains, &d)
                    .map_err(|e| format!("estimator failed at {distance} km, mu {mu}: {e}"))?;
                ensure!(
                    bound.y1 <= exact.y1 * (1.0 + 1e-12),
                    "y1 bound {} exceeds exact {} at {distance} km, mu {mu}",
                    bound.y1,
                    exact.y1
                );
                ensure!(
                    bound.e1 >= exact.e1 * (1.0 - 1e-12),
                    "e1 bound {} below exact {} at {distance} km, mu {mu}",
                    bound.e1,
                    exact.e1
                );
                // the bounded rate can never beat the exact-model rate on
                // noiseless model data
                let (_, _, r_exact) =
                    secure_key_rate(&link, &d, &ExactModel).map_err(|e| e.to_string())?;
                let (_, _, r_bound) =
                    secure_key_rate(&link, &d, &DecoyBound).map_err(|e| e.to_string())?;
                ensure!(
                    r_bound.secure_rate_bps <= r_exact.secure_rate_bps + 1e-9,
                    "bounded rate {} beats exact {} at {distance} km, mu {mu}",
                    r_bound.secure_rate_bps,
                    r_exact.secure_rate_bps
                );
                combos += 1;
            }
        }
        ensure!(combos >= 50, "only {combos} grid combinations tested");
        Ok(())
    });
}

#[test]
fn criterion_6_side_channel_identities() {
    criterion("criterion 6: side-channel overlap identities", || {
        let tau = 1e-10;
        let dt = tau / 16.0;
        let half = 8.0 * tau;
        let gauss = |center: f64| {
            Waveform::gaussian(center, tau, dt, half)
                .normalize()
                .unwrap()
        };

        // self-overlap and the Cauchy-Schwarz ceiling
        let a = gauss(0.0);
        let self_s = overlap(&a, &a).map_err(|e| e.to_string())?.abs_s();
        ensure!((self_s - 1.0).abs() <= 1e-9, "self overlap {self_s}");
        for (offset, std_b, chirp) in [
            (0.0, tau, 0.0),
            (0.5e-10, tau, 0.0),
            (1.0e-10, 0.7 * tau, 3e19),
            (-0.8e-10, 1.3 * tau, -2e19),
            (2.5e-10, tau, 1e20),
        ] {
            let b = Waveform::chirped_gaussian(offset, std_b, chirp, dt, half)
                .normalize()
                .unwrap();
            let s = overlap(&a, &b).map_err(|e| e.to_string())?.abs_s_sq;
            ensure!(s <= 1.0 + 1e-9, "|s|^2 = {s} above 1");
        }

        // 10x-density trapezoid quadrature oracle, independent of the
        // implementation's waveform machinery
        let dense_overlap = |offset: f64, chirp: f64| -> f64 {
            let fine = dt / 10.0;
            let lo = -half.max(offset - half);
            let hi = half.max(offset + half);
            let n = ((hi - lo) / fine) as usize + 1;
            let (mut ea, mut eb) = (0.0f64, 0.0f64);
            let (mut re, mut im) = (0.0f64, 0.0f64);
            let weight = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            for k in 0..n {
                let t = lo + k as f64 * fine;
                let fa = (-t * t / (2.0 * tau * tau)).exp();
                let gb = (-(t - offset) * (t - offset) / (2.0 * tau * tau)).exp();
                let phase = chirp * (t - offset) * (t - offset);
                let w = weight(k);
                ea += w * fa * fa;
                eb += w * gb * gb;
                re += w * fa * gb * phase.cos();
                im += w * fa * gb * phase.sin();
            }
            ((re * re + im * im) / (ea * eb)).sqrt()
        };

        // offset Gaussians: |s| = exp(-offset^2 / (4 tau^2))
        for offset in [0.4e-10, 1.0e-10, 1.8e-10] {
            let b = gauss(offset);
            let s_impl = overlap(&a, &b).map_err(|e| e.to_string())?.abs_s();
            let closed = (-offset * offset / (4.0 * tau * tau)).exp();
            let s_oracle = dense_overlap(offset, 0.0);
            ensure!(
                (s_impl - closed).abs() <= 1e-6,
                "offset {offset}: {s_impl} vs {closed}"
            );
            ensure!(
                (s_impl - s_oracle).abs() <= 1e-6,
                "offset {offset}: oracle {s_oracle}"
            );
        }

        // chirped Gaussian: |s| = (1 + c^2 tau^4)^(-1/4)
        for c_scale in [0.5, 1.0, 2.0] {
            let c = c_scale / (tau * tau);
            let b = Waveform::chirped_gaussian(0.0, tau, c, dt, half)
                .normalize()
                .unwrap();
            let s_impl = overlap(&a, &b).map_err(|e| e.to_string())?.abs_s();
            let closed = (1.0 + c * c * tau.powi(4)).powf(-0.25);
            let s_oracle = dense_overlap(0.0, c);
            ensure!(
                (s_impl - closed).abs() <= 1e-6,
                "chirp {c}: {s_impl} vs {closed}"
            );
            ensure!(
                (s_impl - s_oracle).abs() <= 1e-6,
                "chirp {c}: oracle {s_oracle}"
            );
        }

        // Parseval
        let b = Waveform::chirped_gaussian(0.3e-10, tau, 1e20, dt, half)
            .normalize()
            .unwrap();
        for w in [&a, &b] {
            let et = w.energy();
            let ef = w.spectrum().energy();
            ensure!((et - ef).abs() <= 1e-9, "Parseval violated: {et} vs {ef}");
        }
        Ok(())
    });
}

#[test]
fn criterion_7_source_budget() {
    criterion("criterion 7: source photon and attenuation budget", || {
        let cfg = SourceConfig::default();
        let photons = photons_per_pulse(&cfg).map_err(|e| e.to_string())?;
        ensure!(
            (photons / 5.99e6 - 1.0).abs() <= 0.01,
            "photons/pulse {photons}"
        );
        let voa = voa_for_target_mu(&cfg, 0.5).map_err(|e| e.to_string())?;
        ensure!((voa - 70.8).abs() <= 0.05, "VOA {voa} dB != 70.8 dB");
        ensure!(
            (voa - 70.0).abs() <= 1.5,
            "VOA {voa} dB not within 1.5 dB of 70 dB"
        );
        let mu = mu_for_level(0.5, 14.76);
        ensure!((mu - 0.0167).abs() <= 2e-4, "mu_for_level {mu}");
        let coherence = coherence_suppression(&cfg);
        ensure!(
            (coherence.round_trip_time_s - 7.2e-12).abs() <= 0.05e-12,
            "RTT {} s",
            coherence.round_trip_time_s
        );

        // the budget report prints the published ~20 ps value as an
        // annotated discrepancy next to the computed 7.2 ps
        let run_cfg = RunConfig::default();
        let opts = SourceOptions {
            pulses: 1,
            seed: 0,
            protocol: "random".into(),
        };
        let mut csv = Vec::new();
        let mut report = Vec::new();
        cmd_source(&run_cfg, &opts, &mut csv, &mut report).map_err(|e| e.to_string())?;
        let report = String::from_utf8(report).unwrap();
        let line = report
            .lines()
            .find(|l| l.contains("round_trip_time_published"))
            .ok_or("report lacks the published round-trip-time row")?;
        ensure!(
            line.contains("20.000 ps"),
            "published RTT not printed: {line}"
        );
        ensure!(
            line.contains("differs from the computed 7.205 ps"),
            "no annotation: {line}"
        );
        Ok(())
    });
}

#[test]
fn criterion_8_coherence_suppression() {
    criterion("criterion 8: coherence suppression and g1", || {
        let cfg = SourceConfig::default();
        let passes = passes_per_period(20e-12, 10e-9);
        ensure!(passes == 500, "passes {passes} != 500");
        ensure!(
            passes as f64 * ROUND_TRIP_LOSS_DB >= 500.0,
            "suppression below 500 dB"
        );

        let n = 10_000;
        let choices = vec![("High".to_string(), "P45".to_string()); n];
        let train = generate_pulse_train(&cfg, n, &choices, 23).map_err(|e| e.to_string())?;
        let period = 1.0 / cfg.rep_rate;
        let g = estimate_g1(&train, &cfg, period, 100).map_err(|e| e.to_string())?;
        ensure!(g.magnitude() <= 0.03, "|g1| = {} above 0.03", g.magnitude());

        let mut control = train;
        for p in &mut control {
            p.global_phase = 1.0;
        }
        let g = estimate_g1(&control, &cfg, period, 100).map_err(|e| e.to_string())?;
        ensure!(
            g.magnitude() >= 0.99,
            "control |g1| = {} below 0.99",
            g.magnitude()
        );
        Ok(())
    });
}

#[test]
fn criterion_9_determinism() {
    criterion("criterion 9: determinism and worker invariance", || {
        // identical seeds give bit-identical outputs across all commands
        let cfg = RunConfig {
            n_pulses: 100_000,
            seed: 7,
            ..RunConfig::default()
        };
        let analyze = |workers: Option<usize>| -> Result<(Vec<u8>, Vec<u8>), String> {
            let mut csv = Vec::new();
            let mut report = Vec::new();
            cmd_analyze(
                &cfg,
                &AnalyzeOptions {
                    sweep: Some("0:100:10".into()),
                    mode: "decoy".into(),
                },
                &mut csv,
                &mut report,
            )
            .map_err(|e| e.to_string())?;
            cmd_simulate(&cfg, &SimulateOptions { workers }, &mut csv, &mut report)
                .map_err(|e| e.to_string())?;
            cmd_source(
                &cfg,
                &SourceOptions {
                    pulses: 64,
                    seed: 7,
                    protocol: "random".into(),
                },
                &mut csv,
                &mut report,
            )
            .map_err(|e| e.to_string())?;
            Ok((csv, report))
        };
        let first = analyze(Some(1))?;
        let second = analyze(Some(1))?;
        ensure!(first == second, "repeated runs differ");

        // Monte Carlo tallies are invariant under the worker count
        let mc = cfg.mc_config();
        let one = run_with_workers(&mc, 1).map_err(|e| e.to_string())?;
        for workers in [2, 3, 7] {
            let many = run_with_workers(&mc, workers).map_err(|e| e.to_string())?;
            ensure!(one == many, "worker count {workers} changed the result");
        }
        // and the CSV built on top of them is byte-identical too
        let third = analyze(Some(4))?;
        ensure!(first == third, "worker count changed command output");
        Ok(())
    });
}
