//! Pulse-level stochastic protocol harness.
//!
//! Simulates every sent pulse of a BB84+decoy transmission: intensity class
//! choice, Poisson photon number, per-photon loss thinning, background
//! clicks, misalignment errors, basis choice and sifting. The empirical
//! gains and error rates cross-validate the analytic engine.
//!
//! Randomness is keyed by `(seed, pulse index)`, so aggregate counts are
//! bit-identical for any worker count and any partition of the pulse range.

use std::thread;

use crate::decoy::{
    key_rate_from_stats, single_photon_decoy_bound, DecoyError, DecoyParams, GainStats,
    KeyRateResult,
};
use crate::link::{LinkParams, VACUUM_ERROR};
use crate::rng;
use crate::source::SourceConfig;

/// Intensity classes of the three-state decoy protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntensityClass {
    Mu = 0,
    Nu1 = 1,
    Nu2 = 2,
}

impl IntensityClass {
    pub const ALL: [IntensityClass; 3] = [Self::Mu, Self::Nu1, Self::Nu2];

    pub fn label(self) -> &'static str {
        match self {
            Self::Mu => "mu",
            Self::Nu1 => "nu1",
            Self::Nu2 => "nu2",
        }
    }

    pub fn intensity(self, d: &DecoyParams) -> f64 {
        match self {
            Self::Mu => d.mu,
            Self::Nu1 => d.nu1,
            Self::Nu2 => d.nu2,
        }
    }

    pub fn probability(self, d: &DecoyParams) -> f64 {
        match self {
            Self::Mu => d.prob_mu,
            Self::Nu1 => d.prob_nu1,
            Self::Nu2 => d.prob_nu2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MCConfig {
    pub n_pulses: u64,
    pub seed: u64,
    pub link: LinkParams,
    pub decoy: DecoyParams,
    pub source: SourceConfig,
}

impl MCConfig {
    pub fn validate(&self) -> Result<(), DecoyError> {
        if self.n_pulses == 0 {
            return Err(DecoyError::Domain("pulse count must be at least 1".into()));
        }
        self.decoy.validate()?;
        self.link.validate().map_err(DecoyError::Domain)?;
        self.source
            .validate()
            .map_err(|e| DecoyError::Domain(e.to_string()))?;
        Ok(())
    }
}

/// Integer tallies for one intensity class. `errors` counts wrong bits among
/// sifted detections only, matching the QBER definition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub sent: u64,
    pub detected: u64,
    pub sifted: u64,
    pub errors: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MCResult {
    pub n_pulses: u64,
    pub seed: u64,
    pub classes: [ClassCounts; 3],
}

impl MCResult {
    pub fn counts(&self, class: IntensityClass) -> &ClassCounts {
        &self.classes[class as usize]
    }

    /// Sifted key length across all classes.
    pub fn sifted_total(&self) -> u64 {
        self.classes.iter().map(|c| c.sifted).sum()
    }

    pub fn detected_total(&self) -> u64 {
        self.classes.iter().map(|c| c.detected).sum()
    }

    pub fn empirical_gain(&self, class: IntensityClass) -> f64 {
        let c = self.counts(class);
        if c.sent == 0 {
            return f64::NAN;
        }
        c.detected as f64 / c.sent as f64
    }

    pub fn empirical_qber(&self, class: IntensityClass) -> f64 {
        let c = self.counts(class);
        if c.sifted == 0 {
            return 0.0;
        }
        c.errors as f64 / c.sifted as f64
    }

    /// Binomial standard error of the empirical gain.
    pub fn gain_std_error(&self, class: IntensityClass) -> f64 {
        let c = self.counts(class);
        let q = self.empirical_gain(class);
        (q * (1.0 - q) / c.sent as f64).sqrt()
    }

    /// Binomial standard error of the empirical QBER.
    pub fn qber_std_error(&self, class: IntensityClass) -> f64 {
        let c = self.counts(class);
        if c.sifted == 0 {
            return f64::NAN;
        }
        let e = self.empirical_qber(class);
        (e * (1.0 - e) / c.sifted as f64).sqrt()
    }

    /// Empirical gains and QBERs packaged for the decoy estimator.
    pub fn gain_stats(&self) -> GainStats {
        GainStats {
            q_mu: self.empirical_gain(IntensityClass::Mu),
            q_nu1: self.empirical_gain(IntensityClass::Nu1),
            q_nu2: self.empirical_gain(IntensityClass::Nu2),
            e_mu: self.empirical_qber(IntensityClass::Mu),
            e_nu1: self.empirical_qber(IntensityClass::Nu1),
            e_nu2: self.empirical_qber(IntensityClass::Nu2),
            single_exact: None,
            single_bound: None,
        }
    }
}

/// Run the harness with one worker per available core.
pub fn run(cfg: &MCConfig) -> Result<MCResult, DecoyError> {
    let workers = thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    run_with_workers(cfg, workers)
}

/// Run the harness on an explicit worker count. The result is identical for
/// every worker count: each pulse outcome is keyed by `(seed, index)` and
/// the per-class tallies are order-insensitive integer sums.
pub fn run_with_workers(cfg: &MCConfig, workers: usize) -> Result<MCResult, DecoyError> {
    cfg.validate()?;
    let workers = workers.clamp(1, 256) as u64;
    let eta = cfg.link.transmittance();

    let simulate_range = |lo: u64, hi: u64| -> [ClassCounts; 3] {
        let mut tally = [ClassCounts::default(); 3];
        for i in lo..hi {
            let mut r = rng::stream(cfg.seed, i);
            let u = r.next_f64();
            let class = if u < cfg.decoy.prob_mu {
                IntensityClass::Mu
            } else if u < cfg.decoy.prob_mu + cfg.decoy.prob_nu1 {
                IntensityClass::Nu1
            } else {
                IntensityClass::Nu2
            };
            let counts = &mut tally[class as usize];
            counts.sent += 1;

            let photons = r.next_poisson(class.intensity(&cfg.decoy));
            let mut survivors = 0u64;
            for _ in 0..photons {
                if r.next_f64() < eta {
                    survivors += 1;
                }
            }
            // threshold detector: any number of surviving photons is one click
            let signal_click = survivors > 0;
            let background_click = r.next_f64() < cfg.link.background_yield;
            if !(signal_click || background_click) {
                continue;
            }
            counts.detected += 1;

            let error_probability = if signal_click {
                cfg.link.misalignment_error
            } else {
                VACUUM_ERROR
            };
            let error = r.next_f64() < error_probability;
            let alice_basis = r.next_u64() & 1;
            let bob_basis = r.next_u64() & 1;
            if alice_basis == bob_basis {
                counts.sifted += 1;
                if error {
                    counts.errors += 1;
                }
            }
        }
        tally
    };

    let n = cfg.n_pulses;
    let chunk = n.div_ceil(workers);
    let partials: Vec<[ClassCounts; 3]> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(n);
                scope.spawn(move || {
                    if lo < hi {
                        simulate_range(lo, hi)
                    } else {
                        Default::default()
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    let mut classes = [ClassCounts::default(); 3];
    for part in partials {
        for (total, p) in classes.iter_mut().zip(part.iter()) {
            total.sent += p.sent;
            total.detected += p.detected;
            total.sifted += p.sifted;
            total.errors += p.errors;
        }
    }
    Ok(MCResult {
        n_pulses: n,
        seed: cfg.seed,
        classes,
    })
}

/// Key-rate estimate from empirical counts, through the decoy-bound
/// estimator and the rate formula. Zero detections short-circuit to a
/// clamped zero rate; a class that was never sent is an estimator failure.
pub fn estimate_key_rate(r: &MCResult, d: &DecoyParams) -> Result<KeyRateResult, DecoyError> {
    for class in IntensityClass::ALL {
        if r.counts(class).sent == 0 {
            return Err(DecoyError::EstimatorFailure(format!(
                "intensity class '{}' was never sent",
                class.label()
            )));
        }
    }
    if r.detected_total() == 0 {
        return Ok(KeyRateResult {
            raw_sifted_rate_bps: 0.0,
            secure_rate_bps: 0.0,
            qber: 0.0,
            clamped: true,
        });
    }
    let gains = r.gain_stats();
    let single = single_photon_decoy_bound(&gains, d)?;
    key_rate_from_stats(&gains, &single, d)
}
