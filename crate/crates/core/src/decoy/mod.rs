//! Analytic decoy-state BB84 rate engine.
//!
//! Gains and error rates of Poisson (faint coherent) pulses through a lossy
//! link, single-photon contributions bounded either from the channel model
//! or from the three-intensity decoy estimator, and the secure-rate lower
//! bound
//!
//! `R >= q (N_mu / t) { -Q_mu f(E_mu) H2(E_mu) + Q_1 [1 - H2(e_1)] }`
//!
//! with `N_mu / t` read as the sent signal-pulse rate (`rep_rate * prob_mu`)
//! and all gains as per-sent-pulse probabilities.

pub mod estimator;

use thiserror::Error;

use crate::link::{LinkParams, VACUUM_ERROR};

pub use estimator::{estimator_by_name, estimators, EstimatorInput, SinglePhotonEstimator};

#[derive(Debug, Error)]
pub enum DecoyError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("single-photon estimator failed: {0}")]
    EstimatorFailure(String),
    #[error("degenerate link: single-photon yield is zero")]
    DegenerateLink,
}

/// Protocol intensities, their sending probabilities, and the bookkeeping
/// constants of the rate formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoyParams {
    pub mu: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub prob_mu: f64,
    pub prob_nu1: f64,
    pub prob_nu2: f64,
    /// Basis-match (sifting) factor q, 1/2 for standard BB84.
    pub sifting_ratio: f64,
    /// Bidirectional error-correction inefficiency f(E_mu) >= 1.
    pub error_correction_efficiency: f64,
    pub rep_rate: f64,
    pub duration_s: f64,
}

impl Default for DecoyParams {
    fn default() -> Self {
        Self {
            mu: 0.5,
            nu1: 0.125,
            nu2: 0.0167,
            prob_mu: 0.85,
            prob_nu1: 0.10,
            prob_nu2: 0.05,
            sifting_ratio: 0.5,
            error_correction_efficiency: 1.16,
            rep_rate: 1e8,
            duration_s: 1.0,
        }
    }
}

impl DecoyParams {
    pub fn validate(&self) -> Result<(), DecoyError> {
        if !(self.mu > self.nu1 && self.nu1 > self.nu2 && self.nu2 >= 0.0) {
            return Err(DecoyError::Domain(format!(
                "intensities must satisfy mu > nu1 > nu2 >= 0, got {} / {} / {}",
                self.mu, self.nu1, self.nu2
            )));
        }
        let probs = [self.prob_mu, self.prob_nu1, self.prob_nu2];
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(DecoyError::Domain(
                "sending probabilities must be nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DecoyError::Domain(format!(
                "sending probabilities must sum to 1, got {sum}"
            )));
        }
        if !(self.sifting_ratio > 0.0 && self.sifting_ratio <= 1.0) {
            return Err(DecoyError::Domain(format!(
                "sifting ratio must be in (0, 1], got {}",
                self.sifting_ratio
            )));
        }
        if self.error_correction_efficiency < 1.0 {
            return Err(DecoyError::Domain(format!(
                "error-correction efficiency must be >= 1, got {}",
                self.error_correction_efficiency
            )));
        }
        if !(self.rep_rate > 0.0) || !(self.duration_s > 0.0) {
            return Err(DecoyError::Domain(
                "rep_rate and duration must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Gains and QBERs per intensity class, plus whichever single-photon
/// contributions have been estimated.
#[derive(Clone, Copy, Debug, Default)]
pub struct GainStats {
    pub q_mu: f64,
    pub q_nu1: f64,
    pub q_nu2: f64,
    pub e_mu: f64,
    pub e_nu1: f64,
    pub e_nu2: f64,
    pub single_exact: Option<SinglePhoton>,
    pub single_bound: Option<SinglePhoton>,
}

/// Single-photon yield, gain and error rate (exact-model values or decoy
/// bounds, depending on the estimator that produced them).
#[derive(Clone, Copy, Debug)]
pub struct SinglePhoton {
    pub y1: f64,
    pub q1: f64,
    pub e1: f64,
}

/// Raw and secure throughput at one operating point.
#[derive(Clone, Copy, Debug)]
pub struct KeyRateResult {
    pub raw_sifted_rate_bps: f64,
    pub secure_rate_bps: f64,
    pub qber: f64,
    /// Set when the rate formula went negative and was clamped to zero.
    pub clamped: bool,
}

/// Binary Shannon entropy in bits, with `0 log 0 := 0`.
pub fn binary_entropy(x: f64) -> Result<f64, DecoyError> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(DecoyError::Domain(format!(
            "entropy argument must be in [0, 1], got {x}"
        )));
    }
    Ok(h2(x))
}

fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Gain and QBER of a Poisson pulse class of the given mean photon number:
/// `Q = Y0 + 1 - e^{-eta mu}` and
/// `E Q = e0 Y0 + e_d (1 - e^{-eta mu})`.
pub fn gain_and_qber(link: &LinkParams, intensity: f64) -> (f64, f64) {
    debug_assert!(intensity >= 0.0);
    let eta = link.transmittance();
    let signal = 1.0 - (-eta * intensity).exp();
    let gain = link.background_yield + signal;
    let qber = (VACUUM_ERROR * link.background_yield + link.misalignment_error * signal) / gain;
    (gain, qber)
}

/// Model-generated gains and QBERs for all three intensity classes.
pub fn model_gain_stats(link: &LinkParams, d: &DecoyParams) -> GainStats {
    let (q_mu, e_mu) = gain_and_qber(link, d.mu);
    let (q_nu1, e_nu1) = gain_and_qber(link, d.nu1);
    let (q_nu2, e_nu2) = gain_and_qber(link, d.nu2);
    GainStats {
        q_mu,
        q_nu1,
        q_nu2,
        e_mu,
        e_nu1,
        e_nu2,
        single_exact: None,
        single_bound: None,
    }
}

/// Single-photon quantities straight from the channel model:
/// `Y1 = yield_n(1)`, `Q1 = Y1 mu e^{-mu}`, `e1 = (e0 Y0 + e_d eta) / Y1`.
pub fn single_photon_exact(link: &LinkParams, d: &DecoyParams) -> Result<SinglePhoton, DecoyError> {
    let y1 = link.yield_n(1);
    if y1 <= 0.0 {
        return Err(DecoyError::DegenerateLink);
    }
    let q1 = y1 * d.mu * (-d.mu).exp();
    let e1 = (VACUUM_ERROR * link.background_yield
        + link.misalignment_error * link.transmittance())
        / y1;
    Ok(SinglePhoton { y1, q1, e1 })
}

/// Three-intensity decoy lower bound on the single-photon yield and upper
/// bound on its error rate, from measured (or modelled) gains alone.
///
/// The background yield is bounded from the near-vacuum decoy pair,
/// `Y0 >= max{(nu1 Q_nu2 e^{nu2} - nu2 Q_nu1 e^{nu1})/(nu1 - nu2), 0}`,
/// which reduces to the directly measured `Q_0` when `nu2 = 0`.
pub fn single_photon_decoy_bound(
    gains: &GainStats,
    d: &DecoyParams,
) -> Result<SinglePhoton, DecoyError> {
    let (mu, nu1, nu2) = (d.mu, d.nu1, d.nu2);
    let denom = mu * (nu1 - nu2) - nu1 * nu1 + nu2 * nu2;
    if denom <= 0.0 {
        return Err(DecoyError::EstimatorFailure(format!(
            "estimator denominator {denom} is not positive (requires nu1 + nu2 < mu)"
        )));
    }
    let q_nu1_e = gains.q_nu1 * nu1.exp();
    let q_nu2_e = gains.q_nu2 * nu2.exp();
    let y0_est = ((nu1 * q_nu2_e - nu2 * q_nu1_e) / (nu1 - nu2)).max(0.0);
    let y1_lower = (mu / denom)
        * (q_nu1_e
            - q_nu2_e
            - ((nu1 * nu1 - nu2 * nu2) / (mu * mu)) * (gains.q_mu * mu.exp() - y0_est));
    if y1_lower <= 0.0 {
        return Err(DecoyError::EstimatorFailure(format!(
            "single-photon yield bound {y1_lower} is not positive"
        )));
    }
    let e1_upper = (gains.e_nu1 * q_nu1_e - gains.e_nu2 * q_nu2_e) / ((nu1 - nu2) * y1_lower);
    Ok(SinglePhoton {
        y1: y1_lower,
        q1: y1_lower * mu * (-mu).exp(),
        e1: e1_upper,
    })
}

/// Secure-rate lower bound from a set of gains (measured or modelled) and a
/// single-photon estimate. Negative values clamp to zero with a flag. A
/// single-photon error at or above 1/2 earns no credit.
pub fn key_rate_from_stats(
    gains: &GainStats,
    single: &SinglePhoton,
    d: &DecoyParams,
) -> Result<KeyRateResult, DecoyError> {
    let sent_signal_rate = d.rep_rate * d.prob_mu;
    let correction = gains.q_mu * d.error_correction_efficiency * binary_entropy(gains.e_mu)?;
    let credit = if single.e1 < 0.5 {
        single.q1 * (1.0 - binary_entropy(single.e1)?)
    } else {
        0.0
    };
    let rate = d.sifting_ratio * sent_signal_rate * (credit - correction);
    let raw = d.sifting_ratio
        * d.rep_rate
        * (d.prob_mu * gains.q_mu + d.prob_nu1 * gains.q_nu1 + d.prob_nu2 * gains.q_nu2);
    Ok(KeyRateResult {
        raw_sifted_rate_bps: raw,
        secure_rate_bps: rate.max(0.0),
        qber: gains.e_mu,
        clamped: rate < 0.0,
    })
}

/// Full analytic chain at one operating point: model gains, the chosen
/// single-photon estimator, and the rate formula.
pub fn secure_key_rate(
    link: &LinkParams,
    d: &DecoyParams,
    est: &dyn SinglePhotonEstimator,
) -> Result<(GainStats, SinglePhoton, KeyRateResult), DecoyError> {
    let mut gains = model_gain_stats(link, d);
    let single = est.estimate(EstimatorInput {
        gains: &gains,
        link: Some(link),
        decoy: d,
    })?;
    match est.name() {
        "exact" => gains.single_exact = Some(single),
        _ => gains.single_bound = Some(single),
    }
    let rate = key_rate_from_stats(&gains, &single, d)?;
    Ok((gains, single, rate))
}

/// One row of a distance sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub distance_km: f64,
    pub gains: GainStats,
    pub single: SinglePhoton,
    pub rate: KeyRateResult,
}

/// Evaluate the analytic chain across distances. Rows come back in input
/// order; each row is independent of the others.
pub fn distance_sweep(
    d: &DecoyParams,
    link_template: &LinkParams,
    distances_km: &[f64],
    est: &dyn SinglePhotonEstimator,
) -> Result<Vec<SweepRow>, DecoyError> {
    if distances_km.is_empty() {
        return Err(DecoyError::Domain("distance list must not be empty".into()));
    }
    distances_km
        .iter()
        .map(|&km| {
            if km < 0.0 {
                return Err(DecoyError::Domain(format!(
                    "distance must be nonnegative, got {km}"
                )));
            }
            let link = link_template.with_distance(km);
            let (gains, single, rate) = secure_key_rate(&link, d, est)?;
            Ok(SweepRow {
                distance_km: km,
                gains,
                single,
                rate,
            })
        })
        .collect()
}

/// Parse `start:stop:step` into an inclusive distance grid.
pub fn parse_sweep_spec(spec: &str) -> Result<Vec<f64>, DecoyError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(DecoyError::Domain(format!(
            "sweep spec must be start:stop:step, got '{spec}'"
        )));
    }
    let mut nums = [0.0f64; 3];
    for (slot, text) in nums.iter_mut().zip(&parts) {
        *slot = text
            .parse::<f64>()
            .map_err(|_| DecoyError::Domain(format!("not a number in sweep spec: '{text}'")))?;
    }
    let [start, stop, step] = nums;
    if step <= 0.0 || stop < start || start < 0.0 {
        return Err(DecoyError::Domain(format!("invalid sweep range '{spec}'")));
    }
    let mut out = Vec::new();
    let n = ((stop - start) / step).floor() as usize;
    for k in 0..=n {
        out.push(start + k as f64 * step);
    }
    Ok(out)
}
